#include "kzpp/iteration.hpp"

#include <algorithm>
#include <cmath>

#include "kzpp/errors.hpp"

namespace kzpp {

void SolverConfig::validate() const {
  if (block_size == 0) throw ConfigError("block size must be at least 1");
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be non-negative");
  if (eta && !(*eta >= 0.0 && *eta <= 1.0)) throw ConfigError("eta must lie in [0, 1]");
  if (!(rho0 >= 0.0 && rho0 < 1.0)) throw ConfigError("initial rho must lie in [0, 1)");
  if (inner_iterations == 0) throw ConfigError("inner iterations must be at least 1");
  if (!(sketch_factor > 0.0)) throw ConfigError("sketch factor must be positive");
  if (!(tolerance > 0.0)) throw ConfigError("tolerance must be positive");
}

nlohmann::json SolverConfig::to_json() const {
  nlohmann::json j{{"block_size", block_size},
                   {"lambda", lambda},
                   {"rho0", rho0},
                   {"inner_iterations", inner_iterations},
                   {"sketch_factor", sketch_factor},
                   {"inner", inner == InnerSolver::lsqr ? "lsqr" : "exact"},
                   {"tolerance", tolerance},
                   {"max_iterations", max_iterations},
                   {"seed", seed},
                   {"rht", rht},
                   {"memoization", memoization},
                   {"acceleration", acceleration},
                   {"true_residual_every", true_residual_every}};
  j["eta"] = eta ? nlohmann::json(*eta) : nlohmann::json();
  j["flop_budget"] = flop_budget ? nlohmann::json(*flop_budget) : nlohmann::json();
  return j;
}

void momentum_step(MomentumState& state, std::span<const double> w, std::span<double> x,
                   Meter meter) {
  if (state.m.size() != w.size() || x.size() != w.size()) {
    throw DimensionError("momentum_step: length mismatch");
  }
  if (!(state.rho >= 0.0 && state.rho <= 1.0)) throw ConfigError("momentum_step: rho outside [0, 1]");
  const double c = (1.0 - state.rho) / (1.0 + state.rho);
  for (std::size_t i = 0; i < x.size(); ++i) {
    state.m[i] = c * (state.m[i] - w[i]);
    x[i] = x[i] - w[i] + state.eta * state.m[i];
  }
  meter.charge(static_cast<std::int64_t>(5 * x.size()));
}

double fresh_block_probability(std::size_t t, double numerator) {
  if (t == 0) return 1.0;
  return std::min(1.0, numerator / static_cast<double>(t));
}

BlockSampler::BlockSampler(std::size_t pool, std::size_t block_size, double numerator, bool memoize)
    : pool_(pool), block_size_(block_size), numerator_(numerator), memoize_(memoize) {
  if (block_size == 0 || block_size > pool) throw ConfigError("block size must lie in [1, rows]");
}

BlockSampler::Draw BlockSampler::draw(std::size_t t, Rng& rng) {
  const bool fresh =
      !memoize_ || cache_.empty() || rng.bernoulli(fresh_block_probability(t, numerator_));
  if (!fresh) return {rng.below(cache_.size()), false};
  ++fresh_;
  CachedBlock b{rng.subset(pool_, block_size_), std::nullopt};
  if (!memoize_) cache_.clear();
  cache_.push_back(std::move(b));
  return {cache_.size() - 1, true};
}

double averaging_weight(std::size_t checkpoint) {
  const double li = std::log(static_cast<double>(checkpoint));
  const double lj = std::log(static_cast<double>(checkpoint) + 1.0);
  return std::exp(li * li - lj * lj);
}

double weighted_ratio_update(double previous, std::size_t checkpoint, double ratio) {
  const double w = averaging_weight(checkpoint);
  return w * previous + (1.0 - w) * ratio;
}

double rho_from_ratio(double ratio, std::size_t window) {
  const double rho = 1.0 - std::pow(std::max(ratio, 0.0), 1.0 / static_cast<double>(window));
  return std::clamp(rho, 0.0, 0.99);
}

ResidualEstimator::ResidualEstimator(std::size_t window, double row_scale)
    : window_(window), row_scale_(row_scale), recent_(window, 0.0) {
  if (window == 0) throw ConfigError("residual window must be positive");
}

bool ResidualEstimator::record(std::size_t t, double block_residual_sq) {
  const std::size_t phase = t % (2 * window_);
  if (phase < window_) {
    e0_ += block_residual_sq;
  } else {
    e1_ += block_residual_sq;
  }
  recent_[recorded_ % window_] = block_residual_sq;
  ++recorded_;
  return phase == 2 * window_ - 1;
}

double ResidualEstimator::windowed_estimate() const {
  const std::size_t p = std::min(recorded_, window_);
  if (p == 0) return 0.0;
  double s = 0.0;
  for (std::size_t k = 0; k < p; ++k) s += recent_[k];
  return row_scale_ * s / static_cast<double>(p);
}

std::optional<double> ResidualEstimator::update_rho() {
  if (!(e0_ > 0.0)) return std::nullopt;
  ++checkpoint_;
  ratio_ = weighted_ratio_update(ratio_, checkpoint_, e1_ / e0_);
  return rho_from_ratio(ratio_, window_);
}

Vector block_residual(const Matrix& a, std::span<const std::size_t> rows,
                      std::span<const double> x, std::span<const double> b, Meter meter) {
  if (b.size() != rows.size()) throw DimensionError("block_residual: rhs length mismatch");
  Vector r = block_apply(a, rows, x, meter);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
  meter.charge(static_cast<std::int64_t>(rows.size()));
  return r;
}

Vector block_apply(const Matrix& a, std::span<const std::size_t> rows, std::span<const double> v,
                   Meter meter) {
  if (v.size() != a.cols()) throw DimensionError("block_apply: length mismatch");
  Vector out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out[i] = dot(a.row(rows[i]), v);
  meter.charge(static_cast<std::int64_t>(2 * rows.size() * a.cols()));
  return out;
}

Vector block_apply_transpose(const Matrix& a, std::span<const std::size_t> rows,
                             std::span<const double> y, Meter meter) {
  if (y.size() != rows.size()) throw DimensionError("block_apply_transpose: length mismatch");
  Vector out(a.cols(), 0.0);
  for (std::size_t i = 0; i < rows.size(); ++i) axpy(y[i], a.row(rows[i]), out);
  meter.charge(static_cast<std::int64_t>(2 * rows.size() * a.cols()));
  return out;
}

}  // namespace kzpp
