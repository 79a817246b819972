#include "kzpp/krylov.hpp"

#include <cmath>

#include "kzpp/errors.hpp"

namespace kzpp {

namespace {

std::int64_t flops(std::size_t v) { return static_cast<std::int64_t>(v); }

void scale_in_place(std::span<double> v, double f) {
  for (double& x : v) x *= f;
}

double true_relative_residual(const Matrix& a, std::span<const double> x, std::span<const double> b,
                              double b_norm) {
  Vector r = matvec(a, x);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
  return b_norm == 0.0 ? norm2(r) : norm2(r) / b_norm;
}

bool due(std::size_t iteration, std::size_t every) { return every != 0 && iteration % every == 0; }

nlohmann::json krylov_config_json(const KrylovConfig& c, std::size_t max_it) {
  nlohmann::json j{{"tolerance", c.tolerance},
                   {"max_iterations", max_it},
                   {"true_residual_every", c.true_residual_every}};
  j["restart"] = c.restart ? nlohmann::json(*c.restart) : nlohmann::json();
  return j;
}

}  // namespace

LsqrResult lsqr_solve(const LinearOperator& op, std::span<const double> b, std::size_t iterations,
                      Meter meter) {
  if (b.size() != op.rows) throw DimensionError("lsqr: rhs length mismatch");
  LsqrResult res{Vector(op.cols, 0.0), 0, false};
  Vector u(b.begin(), b.end());
  double beta = norm2(u);
  meter.charge(flops(2 * op.rows));
  if (beta == 0.0) return res;
  scale_in_place(u, 1.0 / beta);
  Vector v = op.apply_transpose(u);
  double alpha = norm2(v);
  meter.charge(flops(3 * op.rows + 3 * op.cols));
  if (alpha == 0.0) {
    res.breakdown = true;
    return res;
  }
  scale_in_place(v, 1.0 / alpha);
  Vector w = v;
  double phi_bar = beta;
  double rho_bar = alpha;

  for (std::size_t it = 0; it < iterations; ++it) {
    // βu = A v - α u
    Vector av = op.apply(v);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = av[i] - alpha * u[i];
    beta = norm2(u);
    if (beta > 0.0) scale_in_place(u, 1.0 / beta);
    meter.charge(flops(5 * op.rows));

    // αv = Aᵀu - β v
    if (beta > 0.0) {
      Vector atu = op.apply_transpose(u);
      for (std::size_t i = 0; i < v.size(); ++i) v[i] = atu[i] - beta * v[i];
      alpha = norm2(v);
      if (alpha > 0.0) scale_in_place(v, 1.0 / alpha);
      meter.charge(flops(5 * op.cols));
    } else {
      alpha = 0.0;
    }

    const double rho = std::hypot(rho_bar, beta);
    const double c = rho_bar / rho;
    const double s = beta / rho;
    const double theta = s * alpha;
    rho_bar = -c * alpha;
    const double phi = c * phi_bar;
    phi_bar = s * phi_bar;

    const double step = phi / rho;
    const double shrink = theta / rho;
    for (std::size_t i = 0; i < w.size(); ++i) {
      res.x[i] += step * w[i];
      w[i] = v[i] - shrink * w[i];
    }
    meter.charge(flops(4 * op.cols + 10));
    res.iterations = it + 1;
    if (beta == 0.0 || alpha == 0.0) {
      res.breakdown = true;
      break;
    }
  }
  return res;
}

SolveResult cg_solve(const Matrix& a, std::span<const double> b, const KrylovConfig& config) {
  if (!a.square() || a.rows() != b.size()) throw DimensionError("cg: dimension mismatch");
  if (!(config.tolerance > 0.0)) throw ConfigError("cg: tolerance must be positive");
  const std::size_t n = a.rows();
  const std::size_t max_it = config.max_iterations == 0 ? n : config.max_iterations;
  SolveResult out;
  out.trace.solver = "cg";
  out.trace.flop_source = "model";
  out.trace.config = krylov_config_json(config, max_it);
  out.x.assign(n, 0.0);
  const double b_norm = norm2(b);
  Vector r(b.begin(), b.end());
  Vector p = r;
  double rr = dot(r, r);
  out.trace.append({0, 0, 1.0, 1.0, 0.0});
  if (b_norm == 0.0) {
    out.trace.status = RunStatus::converged;
    return out;
  }
  out.trace.status = RunStatus::budget;
  for (std::size_t it = 1; it <= max_it; ++it) {
    const Vector ap = matvec(a, p);
    const double pap = dot(p, ap);
    if (!(pap > 0.0)) {
      out.trace.status = RunStatus::error;
      out.trace.message = "breakdown: p'Ap <= 0 (matrix not positive definite)";
      break;
    }
    const double alpha = rr / pap;
    axpy(alpha, p, out.x);
    axpy(-alpha, ap, r);
    const double rr_next = dot(r, r);
    const double beta = rr_next / rr;
    rr = rr_next;
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
    out.iterations = it;

    TraceRecord rec{it, model_cg_iteration(n) * it, std::sqrt(rr) / b_norm, std::nullopt, 0.0};
    if (due(it, config.true_residual_every)) rec.res_true = true_relative_residual(a, out.x, b, b_norm);
    out.trace.append(rec);
    if (!std::isfinite(rr)) {
      out.trace.status = RunStatus::error;
      out.trace.message = "non-finite residual";
      break;
    }
    if (rec.res_est <= config.tolerance) {
      out.trace.status = RunStatus::converged;
      break;
    }
  }
  auto& last = out.trace.records.back();
  if (!last.res_true) last.res_true = true_relative_residual(a, out.x, b, b_norm);
  return out;
}

namespace {

/// Applies accumulated Givens rotations and solves the small triangular system.
Vector gmres_update(const Matrix& basis, const Matrix& hess, std::span<const double> g,
                    std::size_t k, std::span<const double> x0) {
  Vector y(k, 0.0);
  for (std::size_t ii = k; ii-- > 0;) {
    double s = g[ii];
    for (std::size_t j = ii + 1; j < k; ++j) s -= hess(ii, j) * y[j];
    y[ii] = s / hess(ii, ii);
  }
  Vector x(x0.begin(), x0.end());
  for (std::size_t j = 0; j < k; ++j) axpy(y[j], basis.row(j), x);
  return x;
}

}  // namespace

SolveResult gmres_solve(const Matrix& a, std::span<const double> b, const KrylovConfig& config) {
  if (!a.square() || a.rows() != b.size()) throw DimensionError("gmres: dimension mismatch");
  if (!(config.tolerance > 0.0)) throw ConfigError("gmres: tolerance must be positive");
  const std::size_t n = a.rows();
  const std::size_t max_it = config.max_iterations == 0 ? n : config.max_iterations;
  const std::size_t cycle = config.restart ? std::max<std::size_t>(*config.restart, 1) : max_it;
  SolveResult out;
  out.trace.solver = "gmres";
  out.trace.flop_source = "model";
  out.trace.config = krylov_config_json(config, max_it);
  out.x.assign(n, 0.0);
  const double b_norm = norm2(b);
  out.trace.append({0, 0, 1.0, 1.0, 0.0});
  if (b_norm == 0.0) {
    out.trace.status = RunStatus::converged;
    return out;
  }
  out.trace.status = RunStatus::budget;
  std::size_t total = 0;
  std::uint64_t flops_done = 0;
  bool done = false;
  while (!done && total < max_it) {
    Vector r = subtract(b, matvec(a, out.x));
    const double beta = norm2(r);
    const std::size_t m = std::min(cycle, max_it - total);
    Matrix basis(m + 1, n);  // Krylov vectors as rows
    Matrix hess(m + 1, m);
    Vector cs(m), sn(m), g(m + 1, 0.0);
    g[0] = beta;
    for (std::size_t i = 0; i < n; ++i) basis(0, i) = r[i] / beta;
    std::size_t k = 0;
    for (; k < m; ++k) {
      Vector w = matvec(a, basis.row(k));
      for (std::size_t j = 0; j <= k; ++j) {
        hess(j, k) = dot(w, basis.row(j));
        axpy(-hess(j, k), basis.row(j), w);
      }
      hess(k + 1, k) = norm2(w);
      const bool happy = hess(k + 1, k) <= 1e-14 * beta;
      if (!happy) {
        for (std::size_t i = 0; i < n; ++i) basis(k + 1, i) = w[i] / hess(k + 1, k);
      }
      for (std::size_t j = 0; j < k; ++j) {
        const double t = cs[j] * hess(j, k) + sn[j] * hess(j + 1, k);
        hess(j + 1, k) = -sn[j] * hess(j, k) + cs[j] * hess(j + 1, k);
        hess(j, k) = t;
      }
      const double den = std::hypot(hess(k, k), hess(k + 1, k));
      cs[k] = hess(k, k) / den;
      sn[k] = hess(k + 1, k) / den;
      hess(k, k) = den;
      hess(k + 1, k) = 0.0;
      g[k + 1] = -sn[k] * g[k];
      g[k] = cs[k] * g[k];

      ++total;
      const std::uint64_t cycle_flops = model_gmres_total(n, k + 1);
      TraceRecord rec{total, flops_done + cycle_flops, std::abs(g[k + 1]) / b_norm, std::nullopt, 0.0};
      const bool stop = happy || rec.res_est <= config.tolerance || total >= max_it;
      if (due(total, config.true_residual_every) || stop) {
        rec.res_true = true_relative_residual(a, gmres_update(basis, hess, g, k + 1, out.x), b, b_norm);
      }
      out.trace.append(rec);
      if (!std::isfinite(rec.res_est)) {
        out.trace.status = RunStatus::error;
        out.trace.message = "non-finite residual";
        done = true;
        ++k;
        break;
      }
      if (happy || rec.res_est <= config.tolerance) {
        out.trace.status = RunStatus::converged;
        done = true;
        ++k;
        break;
      }
    }
    out.x = gmres_update(basis, hess, g, std::min(k, m), out.x);
    flops_done += model_gmres_total(n, std::min(k, m));
  }
  out.iterations = total;
  return out;
}

}  // namespace kzpp
