#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "kzpp/flops.hpp"
#include "kzpp/linalg.hpp"

namespace kzpp {

bool is_power_of_two(std::size_t n);
std::size_t next_power_of_two(std::size_t n);
std::size_t log2_exact(std::size_t n);

/// In-place Walsh-Hadamard transform, H_n[a;b] = [H(a+b); H(a-b)].
void fht_inplace(std::span<double> v, Meter meter = {});
Vector fht(std::span<const double> v, Meter meter = {});
/// H·M for a matrix whose row count is a power of two.
Matrix fht_matrix(const Matrix& m, Meter meter = {});
/// H·A·H for symmetric A, exploiting symmetry; charges its exact operation count.
Matrix sym_fht(const Matrix& a, Meter meter = {});

/// Random ±1 pattern with the 1/sqrt(n) normalization of an RHT.
class SignDiagonal {
 public:
  SignDiagonal(std::size_t n, std::uint64_t seed);
  explicit SignDiagonal(std::vector<double> signs);

  std::size_t size() const { return signs_.size(); }
  double sign(std::size_t i) const { return signs_[i]; }
  double scale() const { return scale_; }
  std::span<const double> signs() const { return signs_; }

 private:
  std::vector<double> signs_;
  double scale_;
};

/// Randomized Hadamard transform Q = H·D acting on vectors of length `dim`,
/// zero-padded to the next power of two.
class RhtOperator {
 public:
  RhtOperator(std::size_t dim, std::uint64_t seed);
  RhtOperator(std::size_t dim, SignDiagonal signs);

  std::size_t dim() const { return dim_; }
  std::size_t padded_dim() const { return signs_.size(); }
  const SignDiagonal& signs() const { return signs_; }

  /// Q·M; accepts dim() or padded_dim() rows and returns padded_dim() rows.
  Matrix apply(const Matrix& m, Meter meter = {}) const;
  Vector apply(std::span<const double> v, Meter meter = {}) const;
  /// Qᵀ·M on padded inputs.
  Matrix apply_transpose(const Matrix& m, Meter meter = {}) const;
  Vector apply_transpose(std::span<const double> v, Meter meter = {}) const;
  /// Q·A·Qᵀ for symmetric A of size padded_dim().
  Matrix apply_two_sided(const Matrix& a, Meter meter = {}) const;

 private:
  std::size_t dim_;
  SignDiagonal signs_;
};

/// Subsampled RHT Π = sqrt(n/τ)·I_T·Q on the column space of a row block.
class SrhtSketch {
 public:
  SrhtSketch(std::size_t dim, std::size_t width, std::uint64_t seed);
  SrhtSketch(RhtOperator rht, std::vector<std::size_t> kept);

  std::size_t width() const { return kept_.size(); }
  std::span<const std::size_t> kept() const { return kept_; }
  const RhtOperator& rht() const { return rht_; }

  /// A_S·Πᵀ.
  Matrix apply(const Matrix& block, Meter meter = {}) const;

 private:
  RhtOperator rht_;
  std::vector<std::size_t> kept_;
};

Matrix srht_sketch(const Matrix& block, std::size_t width, std::uint64_t seed, Meter meter = {});

}  // namespace kzpp
