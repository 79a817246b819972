#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "kzpp/linalg.hpp"

// Small-scale exact and Monte Carlo checks of the quantities that govern the
// convergence of randomized block Kaczmarz with momentum.

namespace kzpp {

struct SpectralSummary {
  Vector sigma;  // descending
  std::size_t rank = 0;
  struct PerRank {
    std::size_t k;
    double kappa_bar;    // normalized Demmel condition number of A - A_k
    double lambda_bar;   // (1/k) Σ_{i>k} σ_i²
  };
  std::vector<PerRank> per_rank;
  struct PerLambda {
    double lambda;
    double effective_dimension;
  };
  std::vector<PerLambda> per_lambda;
};

/// Throws ConfigError when some k ≥ rank(A).
SpectralSummary spectral_summary(const Matrix& a, std::span<const std::size_t> ks,
                                 std::span<const double> lambdas);
std::size_t numerical_rank(std::span<const double> sigma, double rel_tol = 1e-10);
double tail_average(std::span<const double> sigma, std::size_t k);
double demmel_tail_condition(std::span<const double> sigma, std::size_t k);
double effective_dimension(std::span<const double> sigma, double lambda);

/// P_{λ,S} = A_Sᵀ(A_S A_Sᵀ + λI)†A_S.
Matrix projection_matrix(const Matrix& a, std::span<const std::size_t> rows, double lambda);

std::uint64_t binomial(std::size_t n, std::size_t k);

/// Random regularized projections over s-subsets of rows: either every subset
/// or a seeded uniform sample.
class ProjectionEnsemble {
 public:
  static constexpr std::uint64_t kExhaustiveCap = 100000;

  static ProjectionEnsemble exhaustive(const Matrix& a, std::size_t s, double lambda);
  static ProjectionEnsemble monte_carlo(const Matrix& a, std::size_t s, double lambda,
                                        std::size_t samples, std::uint64_t seed);

  const Matrix& base() const { return a_; }
  std::size_t block_size() const { return s_; }
  double lambda() const { return lambda_; }
  std::size_t count() const { return subsets_.size() / s_; }
  std::span<const std::size_t> subset(std::size_t i) const { return {subsets_.data() + i * s_, s_}; }
  Matrix projection(std::size_t i) const { return projection_matrix(a_, subset(i), lambda_); }
  const Matrix& mean() const { return mean_; }
  bool is_exhaustive() const { return exhaustive_; }

 private:
  ProjectionEnsemble(const Matrix& a, std::size_t s, double lambda, std::vector<std::size_t> subsets,
                     bool exhaustive);

  Matrix a_;
  std::size_t s_;
  double lambda_;
  std::vector<std::size_t> subsets_;  // count × s, flattened
  bool exhaustive_;
  Matrix mean_;
};

/// Every s-subset of {0..m-1} in lexicographic order, flattened.
std::vector<std::size_t> all_subsets(std::size_t m, std::size_t s);

struct RateReport {
  double mu = 0.0;
  double nu = 0.0;
  double rho_bar = 0.0;
  std::size_t rank = 0;
  /// Smallest kept eigenvalue over largest discarded one (∞ when none discarded).
  double rank_gap = 0.0;
};

/// μ = λ_min⁺(P̄), ν = λ_max(E[(P̄^{†/2} P P̄^{†/2})²]), ρ̄ = √(μ/ν).
RateReport mu_nu_rho(const ProjectionEnsemble& ensemble);

struct LowerCoefficient {
  std::optional<double> c;
  bool null_space_match = false;
  double null_space_mismatch = 0.0;
};

/// Largest c with P̄ ⪰ c·AᵀA(AᵀA + λ̄I)⁻¹, measured on the shared range.
LowerCoefficient psd_lower_coefficient(const Matrix& pbar, const Matrix& a, double lambda_bar);

/// λ_min of Uᵀ M U with U an orthonormal basis for the range of `reference`.
double min_eigenvalue_on_range(const Matrix& m, const Matrix& reference, double rel_tol = 1e-10);

struct MemoCheck {
  double success_rate = 0.0;
  std::size_t trials = 0;
  double worst_min_eigenvalue = 0.0;
};

/// Fraction of trials where the mean of `blocks` i.i.d. projections dominates ½P̄.
MemoCheck block_memo_check(const Matrix& a, std::size_t s, double lambda, std::size_t blocks,
                           std::size_t trials, std::uint64_t seed);

struct DppDistribution {
  /// Indexed by subset bitmask.
  std::vector<double> probabilities;
  double normalizer = 0.0;
  double expected_size = 0.0;

  std::size_t ground_size() const;
};

/// Exact enumeration of Pr(S) ∝ det(L_SS). Requires m ≤ 12 and L PSD.
DppDistribution dpp_enumerate(const Matrix& l);
/// tr(L(L+I)⁻¹)
double dpp_expected_size(const Matrix& l);
double determinant(const Matrix& m);

struct RdppCheck {
  bool holds = false;
  double min_eigenvalue = 0.0;
  double lambda_bar = 0.0;
};

/// E[(I + (m/kλ̄)A_SᵀA_S)⁻¹] ⪯ λ̄(AᵀA + λ̄I)⁻¹ for S ~ DPP((m/(λ̄(m−k)))AAᵀ + (k/(m−k))I).
RdppCheck rdpp_inequality_check(const Matrix& a, std::size_t k, double slack = 1e-9);

using BlockSequence = std::vector<std::vector<std::size_t>>;

struct ThreeSequenceRun {
  std::vector<Vector> x, y, v;
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;

  /// Δ_t = ‖v_t − x*‖²_{P̄†} + (1/μ̃)‖y_t − x*‖².
  std::vector<double> lyapunov(std::span<const double> x_star, const Matrix& pbar_pinv,
                               double mu_tilde) const;
};

/// Auxiliary-sequence form of the momentum iteration with exact projections.
/// Rejects ρ ≤ 0 and parameter pairs with γ = 1.
ThreeSequenceRun three_sequence_run(const Matrix& a, std::span<const double> b, double rho,
                                    double eta, const BlockSequence& blocks, double lambda,
                                    std::span<const double> x0);

/// Momentum form (m, x) driven by the same blocks; returns x_0..x_T.
std::vector<Vector> momentum_run(const Matrix& a, std::span<const double> b, double rho, double eta,
                                 const BlockSequence& blocks, double lambda,
                                 std::span<const double> x0);

/// μ̃ = ρ²ν̃ with ν̃ = 1/(ρ + η(1−ρ)).
double momentum_mu_tilde(double rho, double eta);

struct RateBoundReport {
  double mu = 0.0;
  double nu = 0.0;
  double rho = 0.0;
  double eta = 0.0;
  std::vector<std::size_t> checkpoints;
  std::vector<double> mean_error;
  std::vector<double> bound;
  double max_ratio = 0.0;
};

/// Mean ‖x_t − x*‖² over seeded runs with ρ = ρ̄/2 and η = 1/(2ν), compared to
/// 8(1 − ρ/2)ᵗ‖x₀ − x*‖². Starts from x₀ = 0 and takes x* = A†b.
RateBoundReport rate_bound_check(const Matrix& a, std::span<const double> b, std::size_t s,
                                 double lambda, std::size_t trials,
                                 std::span<const std::size_t> checkpoints, std::uint64_t seed);

}  // namespace kzpp
