#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>

#include "kzpp/iteration.hpp"
#include "kzpp/linalg.hpp"

namespace kzpp {

/// Matrix-free operator with forward and transpose products.
struct LinearOperator {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::function<Vector(std::span<const double>)> apply;
  std::function<Vector(std::span<const double>)> apply_transpose;
};

struct LsqrResult {
  Vector x;
  std::size_t iterations = 0;
  bool breakdown = false;
};

/// Golub-Kahan bidiagonalization from x = 0; runs exactly `iterations` steps
/// unless the bidiagonalization breaks down.
LsqrResult lsqr_solve(const LinearOperator& op, std::span<const double> b, std::size_t iterations,
                      Meter meter = {});

struct KrylovConfig {
  double tolerance = 1e-8;
  /// 0 means the dimension of the system.
  std::size_t max_iterations = 0;
  std::optional<std::size_t> restart;
  /// 0 disables periodic true-residual evaluation.
  std::size_t true_residual_every = 1;
};

SolveResult cg_solve(const Matrix& a, std::span<const double> b, const KrylovConfig& config);
SolveResult gmres_solve(const Matrix& a, std::span<const double> b, const KrylovConfig& config);

}  // namespace kzpp
