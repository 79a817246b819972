#include "kzpp/kaczmarz.hpp"

#include <cmath>

#include "kzpp/errors.hpp"
#include "kzpp/krylov.hpp"
#include "kzpp/transforms.hpp"

namespace kzpp {

namespace {

std::int64_t flops(std::size_t v) { return static_cast<std::int64_t>(v); }

Matrix block_gram(const Matrix& a, std::span<const std::size_t> rows, double lambda, Meter meter) {
  const std::size_t s = rows.size();
  Matrix g(s, s);
  for (std::size_t i = 0; i < s; ++i) {
    for (std::size_t j = i; j < s; ++j) {
      const double v = dot(a.row(rows[i]), a.row(rows[j]));
      g(i, j) = v;
      g(j, i) = v;
    }
    g(i, i) += lambda;
  }
  meter.charge(flops(2 * s * s * a.cols()));
  return g;
}

}  // namespace

Vector project_block_exact(const Matrix& a, std::span<const std::size_t> rows,
                           std::span<const double> residual, double lambda, Meter meter) {
  const Matrix gram = block_gram(a, rows, lambda, meter);
  try {
    const auto r = cholesky(gram, lambda > 0.0 ? Jitter::escalate : Jitter::none, meter);
    return block_apply_transpose(a, rows, cholesky_solve(r, residual, meter), meter);
  } catch (const NotPositiveDefinite&) {
    if (lambda > 0.0) throw;
  }
  return matvec(pinv(gather_rows(a, rows)), residual);
}

Vector regularized_projection_exact(const Matrix& a, std::span<const std::size_t> rows,
                                    std::span<const double> x, std::span<const double> b_block,
                                    double lambda) {
  const Vector r = block_residual(a, rows, x, b_block);
  return project_block_exact(a, rows, r, lambda);
}

CholeskyFactor build_block_preconditioner(const Matrix& a, std::span<const std::size_t> rows,
                                          std::size_t sketch_width, double lambda,
                                          std::uint64_t seed, Meter meter) {
  const Matrix sketched = srht_sketch(gather_rows(a, rows), sketch_width, seed, meter);
  Matrix gram = gemm(sketched, sketched, Op::none, Op::transpose, meter);
  add_to_diagonal(gram, lambda);
  return cholesky(gram, Jitter::escalate, meter);
}

Vector proj_lsqr(const Matrix& a, std::span<const std::size_t> rows, const CholeskyFactor& r_factor,
                 std::span<const double> residual, double lambda, std::size_t inner_iterations,
                 Meter meter) {
  const std::size_t s = rows.size();
  const std::size_t n = a.cols();
  if (r_factor.dim() != s || residual.size() != s) throw DimensionError("proj_lsqr: block size mismatch");
  const double root_lambda = std::sqrt(lambda);
  LinearOperator op;
  op.rows = s;
  op.cols = n + s;
  op.apply = [&](std::span<const double> z) {
    Vector y = block_apply(a, rows, z.first(n), meter);
    for (std::size_t i = 0; i < s; ++i) y[i] += root_lambda * z[n + i];
    meter.charge(flops(2 * s));
    return triangular_solve(r_factor, y, Triangle::upper_transposed, meter);
  };
  op.apply_transpose = [&](std::span<const double> y) {
    const Vector t = triangular_solve(r_factor, y, Triangle::upper, meter);
    Vector z = block_apply_transpose(a, rows, t, meter);
    z.resize(n + s);
    for (std::size_t i = 0; i < s; ++i) z[n + i] = root_lambda * t[i];
    meter.charge(flops(s));
    return z;
  };
  const Vector rhs = triangular_solve(r_factor, residual, Triangle::upper_transposed, meter);
  LsqrResult sol = lsqr_solve(op, rhs, inner_iterations, meter);
  sol.x.resize(n);
  return sol.x;
}

Matrix preconditioned_block(const Matrix& a, std::span<const std::size_t> rows,
                            const CholeskyFactor& r_factor, double lambda) {
  const std::size_t s = rows.size();
  const std::size_t n = a.cols();
  Matrix out(s, n + s);
  const double root_lambda = std::sqrt(lambda);
  for (std::size_t j = 0; j < n + s; ++j) {
    Vector col(s, 0.0);
    if (j < n) {
      for (std::size_t i = 0; i < s; ++i) col[i] = a(rows[i], j);
    } else {
      col[j - n] = root_lambda;
    }
    const Vector solved = triangular_solve(r_factor, col, Triangle::upper_transposed);
    for (std::size_t i = 0; i < s; ++i) out(i, j) = solved[i];
  }
  return out;
}

SolveResult solve(const LinearProblem& problem, const SolverConfig& config) {
  config.validate();
  problem.validate();
  const std::size_t m = problem.a.rows();
  const std::size_t n = problem.a.cols();
  const std::size_t s = config.block_size;
  if (s > m) throw ConfigError("block size exceeds the number of rows");
  if (config.x0 && config.x0->size() != n) throw DimensionError("initial iterate length mismatch");

  FlopCounter counter;
  const Meter transform{&counter, FlopCategory::transform};
  const Meter factorization{&counter, FlopCategory::factorization};
  const Meter projection{&counter, FlopCategory::projection};
  const Meter inner{&counter, FlopCategory::inner_solver};
  const Meter instrumentation{&counter, FlopCategory::instrumentation};

  Matrix a_work;
  Vector b_work;
  if (config.rht) {
    const RhtOperator q(m, derive_seed(config.seed, 101));
    a_work = q.apply(problem.a, transform);
    b_work = q.apply(problem.b, transform);
  } else {
    a_work = problem.a;
    b_work = problem.b;
  }
  const std::size_t pool = a_work.rows();
  const double per_block = static_cast<double>(pool) / static_cast<double>(s);
  const double log_pool = std::log(static_cast<double>(pool));
  const double numerator = std::min(per_block, static_cast<double>(n) / static_cast<double>(s)) * log_pool;
  const std::size_t padded_cols = next_power_of_two(n);
  const auto sketch_width = std::min<std::size_t>(
      padded_cols, static_cast<std::size_t>(std::ceil(config.sketch_factor * static_cast<double>(s))));

  Rng rng(derive_seed(config.seed, 100));
  BlockSampler sampler(pool, s, numerator, config.memoization);
  ResidualEstimator estimator((pool + s - 1) / s, per_block);
  MomentumState momentum{Vector(n, 0.0), config.acceleration ? config.rho0 : 0.0,
                         config.acceleration
                             ? config.eta.value_or(static_cast<double>(s) / (2.0 * static_cast<double>(n)))
                             : 0.0};

  SolveResult out;
  out.x = config.x0.value_or(Vector(n, 0.0));
  out.trace.solver = "kzpp";
  out.trace.config = config.to_json();
  out.trace.config["eta"] = momentum.eta;
  out.trace.config["sketch_width"] = sketch_width;
  out.trace.status = RunStatus::budget;

  const double b_norm = norm2(problem.b);
  const auto true_residual = [&] {
    instrumentation.charge(flops(2 * m * n + 3 * m));
    return relative_residual(problem.a, out.x, problem.b);
  };
  const double initial = true_residual();
  out.trace.append({0, counter.headline(), initial, initial, momentum.rho});
  const double target = config.tolerance * config.tolerance * b_norm * b_norm;
  double reference_estimate = 0.0;
  if (initial <= config.tolerance) out.trace.status = RunStatus::converged;

  for (std::size_t t = 0; out.trace.status == RunStatus::budget && t < config.max_iterations; ++t) {
    const auto pick = sampler.draw(t, rng);
    CachedBlock& block = sampler.block(pick.index);
    const std::uint64_t sketch_seed = rng.next();
    const Vector b_block = [&] {
      Vector v(s);
      for (std::size_t i = 0; i < s; ++i) v[i] = b_work[block.rows[i]];
      return v;
    }();
    const Vector r = block_residual(a_work, block.rows, out.x, b_block, projection);
    const double r_sq = dot(r, r);
    projection.charge(flops(2 * s));

    Vector w;
    try {
      if (config.inner == InnerSolver::lsqr) {
        if (!block.factor) {
          block.factor = build_block_preconditioner(a_work, block.rows, sketch_width, config.lambda,
                                                    sketch_seed, factorization);
        }
        w = proj_lsqr(a_work, block.rows, *block.factor, r, config.lambda, config.inner_iterations, inner);
      } else if (config.lambda > 0.0) {
        if (!block.factor) {
          block.factor = cholesky(block_gram(a_work, block.rows, config.lambda, factorization),
                                  Jitter::escalate, factorization);
        }
        w = block_apply_transpose(a_work, block.rows, cholesky_solve(*block.factor, r, projection),
                                  projection);
      } else {
        w = project_block_exact(a_work, block.rows, r, 0.0, factorization);
      }
    } catch (const NotPositiveDefinite& e) {
      out.trace.status = RunStatus::error;
      out.trace.message = e.what();
      break;
    }

    momentum_step(momentum, w, out.x, projection);
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
    for (double v : out.x) finite = finite && std::isfinite(v);
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
  auto& last = out.trace.records.back();
  if (!last.res_true && out.trace.status != RunStatus::error) last.res_true = true_residual();
  out.trace.config["fresh_blocks"] = sampler.fresh_draws();
  return out;
}

}  // namespace kzpp
