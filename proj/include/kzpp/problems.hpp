#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"
#include "kzpp/linalg.hpp"

namespace kzpp {

enum class ProblemKind : std::uint8_t { general = 0, psd = 1 };

std::string to_string(ProblemKind kind);

struct ProblemMetadata {
  std::string generator;
  nlohmann::json params = nlohmann::json::object();
  std::uint64_t seed = 0;

  bool operator==(const ProblemMetadata&) const = default;
};

struct LinearProblem {
  ProblemKind kind = ProblemKind::general;
  Matrix a;
  Vector b;
  std::optional<Vector> x_star;
  /// Diagonal shift already folded into `a` for PSD problems.
  double shift = 0.0;
  ProblemMetadata metadata;

  /// Throws if dimensions, symmetry or the stored solution are inconsistent.
  void validate() const;
  bool operator==(const LinearProblem&) const = default;
};

struct SpectrumSpec {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t effective_rank = 0;
  double tail_strength = 0.0;

  void validate() const;
};

/// Bell-shaped singular value profile: head (1-ts)·exp(-(i/er)²) plus tail ts·exp(-0.1·i/er).
Vector low_rank_profile(std::size_t count, std::size_t effective_rank, double tail_strength);
Matrix make_low_rank(const SpectrumSpec& spec, std::uint64_t seed);

enum class KernelType : std::uint8_t { gaussian, laplacian };

std::string to_string(KernelType kernel);
KernelType kernel_type_from_string(const std::string& text);

struct KernelSpec {
  KernelType kernel = KernelType::gaussian;
  double width = 1.0;
};

/// Pairwise kernel over the rows of `points`.
Matrix kernel_matrix(const Matrix& points, const KernelSpec& spec);

/// Clustered synthetic point cloud used when no dataset is supplied; columns
/// are standardized.
Matrix synthetic_points(std::size_t count, std::size_t dims, std::uint64_t seed);
/// Zero mean, unit variance per column.
Matrix standardize_columns(Matrix points);

/// A = K + shift·I with a standard normal right-hand side.
LinearProblem psd_problem(const Matrix& kernel, double shift, std::uint64_t rhs_seed);
/// b = A·x_true for a standard normal x_true, so the system is consistent.
LinearProblem consistent_problem(Matrix a, std::uint64_t rhs_seed);
/// Standard normal b; generally inconsistent for tall A.
LinearProblem gaussian_rhs_problem(Matrix a, std::uint64_t rhs_seed);

/// Minimum-norm solution by a dense direct method.
Vector direct_solve(const LinearProblem& problem);
double relative_residual(const Matrix& a, std::span<const double> x, std::span<const double> b);

Matrix load_csv(const std::filesystem::path& path,
                std::optional<std::size_t> row_limit = std::nullopt);

inline constexpr std::uint32_t kProblemFormatVersion = 1;

void save_problem(const std::filesystem::path& path, const LinearProblem& problem);
LinearProblem load_problem(const std::filesystem::path& path);

}  // namespace kzpp
