#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"
#include "kzpp/linalg.hpp"
#include "kzpp/rng.hpp"
#include "kzpp/trace.hpp"

namespace kzpp {

enum class InnerSolver : std::uint8_t { lsqr, exact };

struct SolverConfig {
  std::size_t block_size = 0;
  double lambda = 1e-8;
  /// Momentum step; defaults to s/(2n) when unset.
  std::optional<double> eta;
  double rho0 = 0.0;
  std::size_t inner_iterations = 8;
  double sketch_factor = 2.0;
  InnerSolver inner = InnerSolver::lsqr;
  double tolerance = 1e-8;
  std::size_t max_iterations = 10000;
  std::optional<std::uint64_t> flop_budget;
  std::uint64_t seed = 0;
  bool rht = true;
  bool memoization = true;
  bool acceleration = true;
  /// 0 disables periodic true-residual evaluation.
  std::size_t true_residual_every = 0;
  std::optional<Vector> x0;

  void validate() const;
  nlohmann::json to_json() const;
};

struct SolveResult {
  Vector x;
  ConvergenceTrace trace;
  std::size_t iterations = 0;
};

struct MomentumState {
  Vector m;
  double rho = 0.0;
  double eta = 0.0;
};

/// m ← ((1-ρ)/(1+ρ))(m - w);  x ← x - w + η·m
void momentum_step(MomentumState& state, std::span<const double> w, std::span<double> x,
                   Meter meter = {});

/// Probability of drawing a fresh block at iteration t.
double fresh_block_probability(std::size_t t, double numerator);

struct CachedBlock {
  std::vector<std::size_t> rows;
  std::optional<CholeskyFactor> factor;
};

/// Online block memoization: fresh uniform subsets on a decaying Bernoulli
/// schedule, otherwise a uniform pick among the stored ones.
class BlockSampler {
 public:
  BlockSampler(std::size_t pool, std::size_t block_size, double numerator, bool memoize);

  struct Draw {
    std::size_t index;
    bool is_new;
  };

  Draw draw(std::size_t t, Rng& rng);
  CachedBlock& block(std::size_t index) { return cache_[index]; }
  std::size_t size() const { return cache_.size(); }
  std::size_t fresh_draws() const { return fresh_; }

 private:
  std::size_t pool_;
  std::size_t block_size_;
  double numerator_;
  bool memoize_;
  std::size_t fresh_ = 0;
  std::vector<CachedBlock> cache_;
};

/// Ratio a_{i-1}/a_i of the weights a_i = (i+1)^{ln(i+1)}.
double averaging_weight(std::size_t checkpoint);
double weighted_ratio_update(double previous, std::size_t checkpoint, double ratio);
double rho_from_ratio(double ratio, std::size_t window);

/// Two alternating windows of block residuals used for stopping and for the
/// momentum-rate estimate.
class ResidualEstimator {
 public:
  ResidualEstimator(std::size_t window, double row_scale);

  /// Adds ‖r_t‖²; returns true when t closes a pair of windows.
  bool record(std::size_t t, double block_residual_sq);
  double earlier_sum() const { return e0_; }
  double recent_sum() const { return e1_; }
  /// Mean of (rows/s)·‖r‖² over the last `window` records.
  double windowed_estimate() const;
  /// Folds E1/E0 into the running ratio; nullopt when E0 = 0.
  std::optional<double> update_rho();
  void reset_windows() { e0_ = e1_ = 0.0; }

  std::size_t window() const { return window_; }
  double ratio() const { return ratio_; }
  std::size_t checkpoint() const { return checkpoint_; }

 private:
  std::size_t window_;
  double row_scale_;
  double e0_ = 0.0;
  double e1_ = 0.0;
  double ratio_ = 1.0;
  std::size_t checkpoint_ = 0;
  std::vector<double> recent_;
  std::size_t recorded_ = 0;
};

/// Block residual A_S x - b_S without gathering A_S.
Vector block_residual(const Matrix& a, std::span<const std::size_t> rows,
                      std::span<const double> x, std::span<const double> b, Meter meter = {});
/// A_S·v
Vector block_apply(const Matrix& a, std::span<const std::size_t> rows, std::span<const double> v,
                   Meter meter = {});
/// A_Sᵀ·y
Vector block_apply_transpose(const Matrix& a, std::span<const std::size_t> rows,
                             std::span<const double> y, Meter meter = {});

}  // namespace kzpp
