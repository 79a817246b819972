#include "kzpp/cdpp.hpp"

#include <algorithm>
#include <cmath>

#include "kzpp/errors.hpp"
#include "kzpp/kaczmarz.hpp"
#include "kzpp/transforms.hpp"

namespace kzpp {

namespace {

std::int64_t flops(std::size_t v) { return static_cast<std::int64_t>(v); }

}  // namespace

Vector cd_step(const Matrix& a_bar, std::span<const std::size_t> idx, const CholeskyFactor& r_factor,
               std::span<const double> x_bar, std::span<const double> b_bar, Vector& residual,
               Meter meter) {
  const std::size_t s = idx.size();
  if (r_factor.dim() != s) throw DimensionError("cd_step: factor dimension mismatch");
  if (x_bar.size() != a_bar.cols() || b_bar.size() != a_bar.rows()) {
    throw DimensionError("cd_step: vector length mismatch");
  }
  Vector b_block(s);
  for (std::size_t i = 0; i < s; ++i) b_block[i] = b_bar[idx[i]];
  residual = block_residual(a_bar, idx, x_bar, b_block, meter);
  const Vector local = cholesky_solve(r_factor, residual, meter);
  Vector w(a_bar.cols(), 0.0);
  for (std::size_t i = 0; i < s; ++i) w[idx[i]] = local[i];
  return w;
}

Vector cd_step(const Matrix& a_bar, std::span<const std::size_t> idx, const CholeskyFactor& r_factor,
               std::span<const double> x_bar, std::span<const double> b_bar, Meter meter) {
  Vector residual;
  return cd_step(a_bar, idx, r_factor, x_bar, b_bar, residual, meter);
}

SolveResult solve_psd(const LinearProblem& problem, const SolverConfig& config) {
  config.validate();
  if (problem.kind != ProblemKind::psd) throw ConfigError("CD++ requires a psd problem");
  problem.validate();
  const std::size_t n = problem.a.rows();
  const std::size_t s = config.block_size;
  if (config.x0 && config.x0->size() != n) throw DimensionError("initial iterate length mismatch");

  FlopCounter counter;
  const Meter transform{&counter, FlopCategory::transform};
  const Meter factorization{&counter, FlopCategory::factorization};
  const Meter projection{&counter, FlopCategory::projection};
  const Meter instrumentation{&counter, FlopCategory::instrumentation};

  std::optional<RhtOperator> q;
  Matrix a_bar;
  Vector b_bar;
  Vector x_bar;
  const Vector x_start = config.x0.value_or(Vector(n, 0.0));
  if (config.rht) {
    q.emplace(n, derive_seed(config.seed, 201));
    const std::size_t n2 = q->padded_dim();
    Matrix padded(n2, n2);
    for (std::size_t i = 0; i < n; ++i) std::ranges::copy(problem.a.row(i), padded.row(i).begin());
    const double pad_diag = problem.shift != 0.0 ? problem.shift : 1.0;
    for (std::size_t i = n; i < n2; ++i) padded(i, i) = pad_diag;
    a_bar = q->apply_two_sided(padded, transform);
    b_bar = q->apply(problem.b, transform);
    x_bar = q->apply(x_start, transform);
  } else {
    a_bar = problem.a;
    b_bar = problem.b;
    x_bar = x_start;
  }
  const std::size_t dim = a_bar.rows();
  if (s > dim) throw ConfigError("block size exceeds the system dimension");
  const double per_block = static_cast<double>(dim) / static_cast<double>(s);
  const double numerator = per_block * std::log(static_cast<double>(dim));

  Rng rng(derive_seed(config.seed, 200));
  BlockSampler sampler(dim, s, numerator, config.memoization);
  ResidualEstimator estimator((dim + s - 1) / s, per_block);
  MomentumState momentum{Vector(dim, 0.0), config.acceleration ? config.rho0 : 0.0,
                         config.acceleration
                             ? config.eta.value_or(static_cast<double>(s) / (2.0 * static_cast<double>(dim)))
                             : 0.0};

  SolveResult out;
  out.trace.solver = "cdpp";
  out.trace.config = config.to_json();
  out.trace.config["eta"] = momentum.eta;
  out.trace.status = RunStatus::budget;

  const auto original_coordinates = [&](Meter meter) {
    if (!q) return x_bar;
    Vector x = q->apply_transpose(x_bar, meter);
    x.resize(n);
    return x;
  };
  const auto true_residual = [&] {
    const Vector x = original_coordinates(instrumentation);
    instrumentation.charge(flops(2 * n * n + 3 * n));
    return relative_residual(problem.a, x, problem.b);
  };

  const double b_norm = norm2(problem.b);
  const double initial = true_residual();
  out.trace.append({0, counter.headline(), initial, initial, momentum.rho});
  const double target = config.tolerance * config.tolerance * b_norm * b_norm;
  double reference_estimate = 0.0;
  if (initial <= config.tolerance) out.trace.status = RunStatus::converged;

  for (std::size_t t = 0; out.trace.status == RunStatus::budget && t < config.max_iterations; ++t) {
    const auto pick = sampler.draw(t, rng);
    CachedBlock& block = sampler.block(pick.index);
    Vector r;
    Vector w;
    try {
      if (!block.factor) {
        Matrix sub = principal_submatrix(a_bar, block.rows);
        add_to_diagonal(sub, config.lambda);
        block.factor = cholesky(sub, Jitter::escalate, factorization);
      }
      w = cd_step(a_bar, block.rows, *block.factor, x_bar, b_bar, r, projection);
      projection.charge(flops(s));
    } catch (const NotPositiveDefinite& e) {
      out.trace.status = RunStatus::error;
      out.trace.message = e.what();
      break;
    }
    const double r_sq = dot(r, r);
    projection.charge(flops(2 * s));
    momentum_step(momentum, w, x_bar, projection);
    const bool checkpoint = estimator.record(t, r_sq);
    const double estimate = estimator.windowed_estimate();

    TraceRecord rec{t + 1, counter.headline(), b_norm > 0 ? std::sqrt(estimate) / b_norm : std::sqrt(estimate),
                    std::nullopt, momentum.rho};
    if (config.true_residual_every != 0 && (t + 1) % config.true_residual_every == 0) {
      rec.res_true = true_residual();
    }
    out.trace.append(rec);
    out.iterations = t + 1;

    bool finite = std::isfinite(estimate);
    for (double v : x_bar) finite = finite && std::isfinite(v);
    if (t + 1 == estimator.window()) reference_estimate = estimate;
    if (!finite || (reference_estimate > 0.0 && estimate > 1e6 * reference_estimate)) {
      out.trace.status = RunStatus::error;
      out.trace.message = "divergence guard: residual estimate exploded or iterate is non-finite";
      break;
    }
    if (checkpoint) {
      if (estimator.recent_sum() <= target) {
        out.trace.status = RunStatus::converged;
        break;
      }
      if (config.acceleration) {
        if (const auto rho = estimator.update_rho()) momentum.rho = *rho;
      }
      estimator.reset_windows();
    }
    if (config.flop_budget && counter.headline() >= *config.flop_budget) break;
  }
  out.x = original_coordinates(transform);
  auto& last = out.trace.records.back();
  if (!last.res_true && out.trace.status != RunStatus::error) last.res_true = true_residual();
  out.trace.config["fresh_blocks"] = sampler.fresh_draws();
  return out;
}


double cdpp_kzpp_reduction_check(const Matrix& phi, std::span<const double> b,
                                 const ReductionSetup& setup) {
  const std::size_t n = phi.rows();
  if (b.size() != n) throw DimensionError("reduction check: rhs length mismatch");
  if (n > 64) throw ConfigError("reduction check limited to n <= 64");
  if (!is_power_of_two(n)) throw ConfigError("reduction check needs a power-of-two dimension");
  if (setup.block_size == 0 || setup.block_size > n) throw ConfigError("block size must lie in [1, n]");

  const RhtOperator q(n, derive_seed(setup.seed, 201));
  const Matrix phi_bar = q.apply(phi);
  const Matrix a_bar = q.apply_two_sided(gemm(phi, phi, Op::none, Op::transpose));
  const Vector b_bar = q.apply(b);

  Vector x_bar(n, 0.0);
  Vector z(phi.cols(), 0.0);  // z₀ = Φ̄ᵀx̄₀
  MomentumState cd_state{Vector(n, 0.0), setup.rho, setup.eta};
  MomentumState kz_state{Vector(phi.cols(), 0.0), setup.rho, setup.eta};
  Rng rng(derive_seed(setup.seed, 200));
  double deviation = 0.0;
  for (std::size_t t = 0; t < setup.iterations; ++t) {
    const auto idx = rng.subset(n, setup.block_size);
    Matrix sub = principal_submatrix(a_bar, idx);
    add_to_diagonal(sub, setup.lambda);
    const CholeskyFactor r = cholesky(sub, Jitter::none);
    momentum_step(cd_state, cd_step(a_bar, idx, r, x_bar, b_bar), x_bar);

    Vector residual = block_residual(phi_bar, idx, z, [&] {
      Vector out(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) out[i] = b_bar[idx[i]];
      return out;
    }());
    momentum_step(kz_state, project_block_exact(phi_bar, idx, residual, setup.lambda), z);

    const Vector image = matvec(phi_bar, x_bar, Op::transpose);
    deviation = std::max(deviation, norm2(subtract(z, image)));
  }
  return deviation;
}

}  // namespace kzpp
