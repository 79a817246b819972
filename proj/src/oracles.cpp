#include "kzpp/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kzpp/errors.hpp"
#include "kzpp/iteration.hpp"
#include "kzpp/kaczmarz.hpp"
#include "kzpp/rng.hpp"

namespace kzpp {

namespace {

constexpr double kRankCutoff = 1e-10;

// Orthonormal basis (as columns) for eigenvectors above the cutoff.
Matrix range_basis(const SymmetricEigen& eig, double rel_tol) {
  const std::size_t n = eig.values.size();
  const double top = n == 0 ? 0.0 : std::max(eig.values.back(), 0.0);
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < n; ++i) {
    if (eig.values[i] > rel_tol * top) kept.push_back(i);
  }
  Matrix basis(n, kept.size());
  for (std::size_t j = 0; j < kept.size(); ++j) {
    for (std::size_t i = 0; i < n; ++i) basis(i, j) = eig.vectors(i, kept[j]);
  }
  return basis;
}

// Uᵀ M U
Matrix restrict_to(const Matrix& m, const Matrix& basis) {
  return gemm(basis, gemm(m, basis), Op::transpose, Op::none);
}

double lambda_min(const Matrix& m) {
  if (m.rows() == 0) return std::numeric_limits<double>::infinity();
  return symmetric_eigen(m).values.front();
}

double lambda_max(const Matrix& m) {
  if (m.rows() == 0) return 0.0;
  return symmetric_eigen(m).values.back();
}

// Symmetrizes to suppress rounding asymmetry before eigen-decomposition.
Matrix symmetrized(const Matrix& m) { return scaled(add(m, m.transpose()), 0.5); }

// w = A_Sᵀ(A_S A_Sᵀ + λI)⁻¹(A_S x − b_S)
Vector exact_step(const Matrix& a, std::span<const std::size_t> rows, std::span<const double> x,
                  std::span<const double> b, double lambda) {
  Vector b_block(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) b_block[i] = b[rows[i]];
  return project_block_exact(a, rows, block_residual(a, rows, x, b_block), lambda);
}

void check_subset_shape(std::size_t m, std::size_t s) {
  if (s == 0 || s > m) throw ConfigError("block size must lie in [1, rows]");
}

}  // namespace

std::size_t numerical_rank(std::span<const double> sigma, double rel_tol) {
  if (sigma.empty() || sigma.front() <= 0.0) return 0;
  const double cutoff = rel_tol * sigma.front();
  return static_cast<std::size_t>(std::count_if(sigma.begin(), sigma.end(),
                                                [&](double v) { return v > cutoff; }));
}

double tail_average(std::span<const double> sigma, std::size_t k) {
  if (k == 0) throw ConfigError("tail average needs k >= 1");
  double tail = 0.0;
  for (std::size_t i = k; i < sigma.size(); ++i) tail += sigma[i] * sigma[i];
  return tail / static_cast<double>(k);
}

double demmel_tail_condition(std::span<const double> sigma, std::size_t k) {
  const std::size_t r = numerical_rank(sigma);
  if (k >= r) throw ConfigError("k must be below the rank of A");
  double frob_sq = 0.0;
  for (std::size_t i = k; i < r; ++i) frob_sq += sigma[i] * sigma[i];
  return std::sqrt(frob_sq) / sigma[r - 1] / std::sqrt(static_cast<double>(r - k));
}

double effective_dimension(std::span<const double> sigma, double lambda) {
  if (lambda < 0.0) throw ConfigError("lambda must be non-negative");
  if (std::isinf(lambda)) return 0.0;
  const std::size_t r = numerical_rank(sigma);
  double d = 0.0;
  for (std::size_t i = 0; i < r; ++i) {
    const double s2 = sigma[i] * sigma[i];
    d += s2 / (s2 + lambda);
  }
  return d;
}

SpectralSummary spectral_summary(const Matrix& a, std::span<const std::size_t> ks,
                                 std::span<const double> lambdas) {
  if (std::min(a.rows(), a.cols()) > 2048) throw DimensionError("spectral_summary: matrix too large");
  SpectralSummary out;
  out.sigma = svd(a).sigma;
  out.rank = numerical_rank(out.sigma);
  for (const std::size_t k : ks) {
    out.per_rank.push_back({k, demmel_tail_condition(out.sigma, k), tail_average(out.sigma, k)});
  }
  for (const double lambda : lambdas) {
    out.per_lambda.push_back({lambda, effective_dimension(out.sigma, lambda)});
  }
  return out;
}

Matrix projection_matrix(const Matrix& a, std::span<const std::size_t> rows, double lambda) {
  const Matrix block = gather_rows(a, rows);
  Matrix gram = gemm(block, block, Op::none, Op::transpose);
  add_to_diagonal(gram, lambda);
  const Matrix inner = psd_pinv_power(symmetrized(gram), 1.0, kRankCutoff);
  return symmetrized(gemm(block, gemm(inner, block), Op::transpose, Op::none));
}

std::uint64_t binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t c = 1;
  for (std::size_t i = 1; i <= k; ++i) {
    // c·(n−k+i)/i stays integral at every step.
    const std::uint64_t num = n - k + i;
    if (c > std::numeric_limits<std::uint64_t>::max() / num) {
      return std::numeric_limits<std::uint64_t>::max();
    }
    c = c * num / i;
  }
  return c;
}

std::vector<std::size_t> all_subsets(std::size_t m, std::size_t s) {
  check_subset_shape(m, s);
  std::vector<std::size_t> out;
  std::vector<std::size_t> idx(s);
  for (std::size_t i = 0; i < s; ++i) idx[i] = i;
  while (true) {
    out.insert(out.end(), idx.begin(), idx.end());
    std::size_t pos = s;
    while (pos > 0 && idx[pos - 1] == m - s + pos - 1) --pos;
    if (pos == 0) break;
    ++idx[pos - 1];
    for (std::size_t j = pos; j < s; ++j) idx[j] = idx[j - 1] + 1;
  }
  return out;
}

ProjectionEnsemble::ProjectionEnsemble(const Matrix& a, std::size_t s, double lambda,
                                       std::vector<std::size_t> subsets, bool exhaustive)
    : a_(a), s_(s), lambda_(lambda), subsets_(std::move(subsets)), exhaustive_(exhaustive) {
  mean_ = Matrix(a.cols(), a.cols());
  const std::size_t count = this->count();
  for (std::size_t i = 0; i < count; ++i) {
    const Matrix p = projection(i);
    axpy(1.0, p.data(), mean_.data());
  }
  mean_ = scaled(mean_, 1.0 / static_cast<double>(count));
}

ProjectionEnsemble ProjectionEnsemble::exhaustive(const Matrix& a, std::size_t s, double lambda) {
  check_subset_shape(a.rows(), s);
  if (lambda < 0.0) throw ConfigError("lambda must be non-negative");
  if (binomial(a.rows(), s) > kExhaustiveCap) {
    throw ConfigError("exhaustive enumeration exceeds 1e5 subsets");
  }
  return {a, s, lambda, all_subsets(a.rows(), s), true};
}

ProjectionEnsemble ProjectionEnsemble::monte_carlo(const Matrix& a, std::size_t s, double lambda,
                                                   std::size_t samples, std::uint64_t seed) {
  check_subset_shape(a.rows(), s);
  if (lambda < 0.0) throw ConfigError("lambda must be non-negative");
  if (samples == 0) throw ConfigError("monte carlo needs at least one sample");
  Rng rng(seed);
  std::vector<std::size_t> subsets;
  subsets.reserve(samples * s);
  for (std::size_t i = 0; i < samples; ++i) {
    const auto pick = rng.subset(a.rows(), s);
    subsets.insert(subsets.end(), pick.begin(), pick.end());
  }
  return {a, s, lambda, std::move(subsets), false};
}

RateReport mu_nu_rho(const ProjectionEnsemble& ensemble) {
  const SymmetricEigen eig = symmetric_eigen(symmetrized(ensemble.mean()));
  const double top = eig.values.back();
  if (!(top > 0.0)) throw ConfigError("expected projection is zero");
  RateReport report;
  double largest_dropped = 0.0;
  report.mu = std::numeric_limits<double>::infinity();
  for (const double v : eig.values) {
    if (v > kRankCutoff * top) {
      ++report.rank;
      report.mu = std::min(report.mu, v);
    } else {
      largest_dropped = std::max(largest_dropped, std::abs(v));
    }
  }
  report.rank_gap = largest_dropped > 0.0 ? report.mu / largest_dropped
                                          : std::numeric_limits<double>::infinity();
  if (report.rank_gap < 1e3) {
    throw ConfigError("rank detection ambiguous: eigenvalue gap " + std::to_string(report.rank_gap));
  }

  const Matrix half = psd_pinv_power(ensemble.mean(), 0.5, kRankCutoff);
  const std::size_t n = half.rows();
  Matrix second(n, n);
  for (std::size_t i = 0; i < ensemble.count(); ++i) {
    const Matrix c = gemm(half, gemm(ensemble.projection(i), half));
    const Matrix sq = gemm(c, c);
    axpy(1.0, sq.data(), second.data());
  }
  second = scaled(second, 1.0 / static_cast<double>(ensemble.count()));
  report.nu = lambda_max(symmetrized(second));
  report.rho_bar = std::sqrt(report.mu / report.nu);
  return report;
}

double min_eigenvalue_on_range(const Matrix& m, const Matrix& reference, double rel_tol) {
  const Matrix basis = range_basis(symmetric_eigen(symmetrized(reference)), rel_tol);
  return lambda_min(symmetrized(restrict_to(m, basis)));
}

LowerCoefficient psd_lower_coefficient(const Matrix& pbar, const Matrix& a, double lambda_bar) {
  if (!(lambda_bar > 0.0)) throw ConfigError("lambda_bar must be positive");
  const Matrix ata = gemm(a, a, Op::transpose, Op::none);
  const SymmetricEigen eig = symmetric_eigen(symmetrized(ata));
  const std::size_t n = ata.rows();
  // M = AᵀA(AᵀA + λ̄I)⁻¹ shares the eigenvectors of AᵀA.
  Vector filtered(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double v = std::max(eig.values[i], 0.0);
    filtered[i] = v / (v + lambda_bar);
  }
  const Matrix m_mat = gemm(eig.vectors, gemm(Matrix::diagonal(filtered), eig.vectors, Op::none,
                                              Op::transpose));

  const Matrix range_p = range_basis(symmetric_eigen(symmetrized(pbar)), kRankCutoff);
  const Matrix range_m = range_basis(symmetric_eigen(symmetrized(m_mat)), kRankCutoff);
  LowerCoefficient out;
  if (range_p.cols() != range_m.cols()) {
    out.null_space_mismatch = std::abs(static_cast<double>(range_p.cols()) -
                                       static_cast<double>(range_m.cols()));
    return out;
  }
  const Matrix proj_p = gemm(range_p, range_p, Op::none, Op::transpose);
  const Matrix proj_m = gemm(range_m, range_m, Op::none, Op::transpose);
  out.null_space_mismatch = max_abs_diff(proj_p, proj_m);
  out.null_space_match = out.null_space_mismatch <= 1e-8;
  if (!out.null_space_match) return out;

  const Matrix m_half = psd_pinv_power(m_mat, 0.5, kRankCutoff);
  const Matrix conjugated = gemm(m_half, gemm(pbar, m_half));
  out.c = lambda_min(symmetrized(restrict_to(conjugated, range_m)));
  return out;
}

MemoCheck block_memo_check(const Matrix& a, std::size_t s, double lambda, std::size_t blocks,
                           std::size_t trials, std::uint64_t seed) {
  if (blocks == 0 || trials == 0) throw ConfigError("blocks and trials must be positive");
  const auto ensemble = ProjectionEnsemble::exhaustive(a, s, lambda);
  const Matrix basis = range_basis(symmetric_eigen(symmetrized(ensemble.mean())), kRankCutoff);
  const std::size_t m = a.rows();

  // Projections restricted to the range, cached by subset rank.
  std::vector<Matrix> restricted(ensemble.count());
  for (std::size_t i = 0; i < ensemble.count(); ++i) {
    restricted[i] = restrict_to(ensemble.projection(i), basis);
  }
  const Matrix half_mean = scaled(restrict_to(ensemble.mean(), basis), 0.5);
  const auto rank_of = [&](const std::vector<std::size_t>& subset) {
    // Lexicographic rank among s-subsets of {0..m-1}.
    std::size_t rank = 0;
    std::size_t prev = 0;
    for (std::size_t j = 0; j < s; ++j) {
      for (std::size_t v = (j == 0 ? 0 : prev + 1); v < subset[j]; ++v) {
        rank += binomial(m - v - 1, s - j - 1);
      }
      prev = subset[j];
    }
    return rank;
  };

  MemoCheck out;
  out.trials = trials;
  out.worst_min_eigenvalue = std::numeric_limits<double>::infinity();
  std::size_t successes = 0;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    Rng rng(derive_seed(seed, trial));
    Matrix avg(basis.cols(), basis.cols());
    for (std::size_t j = 0; j < blocks; ++j) {
      axpy(1.0, restricted[rank_of(rng.subset(m, s))].data(), avg.data());
    }
    avg = scaled(avg, 1.0 / static_cast<double>(blocks));
    const double low = lambda_min(symmetrized(add(avg, half_mean, -1.0)));
    out.worst_min_eigenvalue = std::min(out.worst_min_eigenvalue, low);
    if (low >= -1e-10) ++successes;
  }
  out.success_rate = static_cast<double>(successes) / static_cast<double>(trials);
  return out;
}

double determinant(const Matrix& m) {
  if (!m.square()) throw DimensionError("determinant: matrix must be square");
  Matrix lu = m;
  const std::size_t n = m.rows();
  double det = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t pivot = k;
    for (std::size_t i = k + 1; i < n; ++i) {
      if (std::abs(lu(i, k)) > std::abs(lu(pivot, k))) pivot = i;
    }
    if (lu(pivot, k) == 0.0) return 0.0;
    if (pivot != k) {
      std::swap_ranges(lu.row(k).begin(), lu.row(k).end(), lu.row(pivot).begin());
      det = -det;
    }
    det *= lu(k, k);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = lu(i, k) / lu(k, k);
      for (std::size_t j = k; j < n; ++j) lu(i, j) -= f * lu(k, j);
    }
  }
  return det;
}

std::size_t DppDistribution::ground_size() const {
  return static_cast<std::size_t>(std::countr_zero(probabilities.size()));
}

DppDistribution dpp_enumerate(const Matrix& l) {
  if (!l.square()) throw DimensionError("dpp kernel must be square");
  const std::size_t m = l.rows();
  if (m > 12) throw ConfigError("dpp enumeration limited to m <= 12");
  if (!is_symmetric(l)) throw ConfigError("dpp kernel must be symmetric");
  if (m > 0) {
    const auto values = symmetric_eigen(l).values;
    if (values.front() < -1e-10 * std::max(1.0, std::abs(values.back()))) {
      throw ConfigError("dpp kernel must be positive semidefinite");
    }
  }
  DppDistribution out;
  const std::size_t total = std::size_t{1} << m;
  out.probabilities.resize(total);
  std::vector<std::size_t> idx;
  for (std::size_t mask = 0; mask < total; ++mask) {
    idx.clear();
    for (std::size_t i = 0; i < m; ++i) {
      if ((mask >> i) & 1U) idx.push_back(i);
    }
    // Principal minors of a PSD kernel are non-negative; clip rounding.
    const double det = idx.empty() ? 1.0 : std::max(0.0, determinant(principal_submatrix(l, idx)));
    out.probabilities[mask] = det;
    out.normalizer += det;
  }
  for (std::size_t mask = 0; mask < total; ++mask) {
    out.probabilities[mask] /= out.normalizer;
    out.expected_size += out.probabilities[mask] * static_cast<double>(std::popcount(mask));
  }
  return out;
}

double dpp_expected_size(const Matrix& l) {
  double size = 0.0;
  for (const double v : symmetric_eigen(symmetrized(l)).values) {
    const double clipped = std::max(v, 0.0);
    size += clipped / (clipped + 1.0);
  }
  return size;
}

RdppCheck rdpp_inequality_check(const Matrix& a, std::size_t k, double slack) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  if (m > 10) throw ConfigError("rdpp check limited to m <= 10");
  const Vector sigma = svd(a).sigma;
  if (k == 0 || k >= numerical_rank(sigma)) throw ConfigError("k must lie in [1, rank(A))");
  RdppCheck out;
  out.lambda_bar = tail_average(sigma, k);
  const double lb = out.lambda_bar;
  const double md = static_cast<double>(m);
  const double kd = static_cast<double>(k);

  Matrix kernel = scaled(gemm(a, a, Op::none, Op::transpose), md / (lb * (md - kd)));
  add_to_diagonal(kernel, kd / (md - kd));
  const DppDistribution dist = dpp_enumerate(symmetrized(kernel));

  Matrix lhs(n, n);
  std::vector<std::size_t> idx;
  for (std::size_t mask = 0; mask < dist.probabilities.size(); ++mask) {
    const double p = dist.probabilities[mask];
    if (p == 0.0) continue;
    idx.clear();
    for (std::size_t i = 0; i < m; ++i) {
      if ((mask >> i) & 1U) idx.push_back(i);
    }
    Matrix inner = Matrix::identity(n);
    if (!idx.empty()) {
      const Matrix block = gather_rows(a, idx);
      inner = add(inner, gemm(block, block, Op::transpose, Op::none), md / (kd * lb));
    }
    axpy(p, psd_pinv_power(symmetrized(inner), 1.0, 0.0).data(), lhs.data());
  }
  Matrix reg = gemm(a, a, Op::transpose, Op::none);
  add_to_diagonal(reg, lb);
  const Matrix rhs = scaled(psd_pinv_power(symmetrized(reg), 1.0, 0.0), lb);
  out.min_eigenvalue = lambda_min(symmetrized(add(rhs, lhs, -1.0)));
  out.holds = out.min_eigenvalue >= -slack;
  return out;
}

double momentum_mu_tilde(double rho, double eta) {
  const double nu_tilde = 1.0 / (rho + eta * (1.0 - rho));
  return rho * rho * nu_tilde;
}

std::vector<double> ThreeSequenceRun::lyapunov(std::span<const double> x_star,
                                               const Matrix& pbar_pinv, double mu_tilde) const {
  std::vector<double> out;
  out.reserve(y.size());
  for (std::size_t t = 0; t < y.size(); ++t) {
    const Vector dv = subtract(v[t], x_star);
    const Vector dy = subtract(y[t], x_star);
    out.push_back(dot(dv, matvec(pbar_pinv, dv)) + dot(dy, dy) / mu_tilde);
  }
  return out;
}

ThreeSequenceRun three_sequence_run(const Matrix& a, std::span<const double> b, double rho,
                                    double eta, const BlockSequence& blocks, double lambda,
                                    std::span<const double> x0) {
  if (!(rho > 0.0 && rho <= 1.0)) throw ConfigError("three-sequence form needs rho in (0, 1]");
  if (b.size() != a.rows() || x0.size() != a.cols()) throw DimensionError("three_sequence_run: shape");
  ThreeSequenceRun run;
  run.alpha = rho / (1.0 + rho);
  run.beta = 1.0 - rho;
  run.gamma = 1.0 + eta / rho - eta;
  if (std::abs(run.gamma - 1.0) < 1e-12) {
    throw ConfigError("gamma = 1 is degenerate for the auxiliary-sequence form");
  }
  const std::size_t n = a.cols();
  Vector v(x0.begin(), x0.end());
  Vector y = v;
  for (std::size_t t = 0;; ++t) {
    Vector x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = run.alpha * v[i] + (1.0 - run.alpha) * y[i];
    run.x.push_back(x);
    run.y.push_back(y);
    run.v.push_back(v);
    if (t == blocks.size()) break;
    const auto& rows = blocks[t];
    const Vector w = exact_step(a, rows, x, b, lambda);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = x[i] - w[i];
      v[i] = run.beta * v[i] + (1.0 - run.beta) * x[i] - run.gamma * w[i];
    }
  }
  return run;
}

std::vector<Vector> momentum_run(const Matrix& a, std::span<const double> b, double rho, double eta,
                                 const BlockSequence& blocks, double lambda,
                                 std::span<const double> x0) {
  if (b.size() != a.rows() || x0.size() != a.cols()) throw DimensionError("momentum_run: shape");
  MomentumState state{Vector(a.cols(), 0.0), rho, eta};
  Vector x(x0.begin(), x0.end());
  std::vector<Vector> out{x};
  for (const auto& rows : blocks) {
    const Vector w = exact_step(a, rows, x, b, lambda);
    momentum_step(state, w, x);
    out.push_back(x);
  }
  return out;
}

RateBoundReport rate_bound_check(const Matrix& a, std::span<const double> b, std::size_t s,
                                 double lambda, std::size_t trials,
                                 std::span<const std::size_t> checkpoints, std::uint64_t seed) {
  if (trials == 0 || checkpoints.empty()) throw ConfigError("rate check needs trials and checkpoints");
  const auto ensemble = ProjectionEnsemble::exhaustive(a, s, lambda);
  const RateReport rates = mu_nu_rho(ensemble);
  RateBoundReport out;
  out.mu = rates.mu;
  out.nu = rates.nu;
  out.rho = rates.rho_bar / 2.0;
  out.eta = 1.0 / (2.0 * rates.nu);
  out.checkpoints.assign(checkpoints.begin(), checkpoints.end());
  std::sort(out.checkpoints.begin(), out.checkpoints.end());
  const std::size_t horizon = out.checkpoints.back();

  const std::size_t n = a.cols();
  const Vector x_star = matvec(pinv(a), b);
  const double initial = dot(x_star, x_star);
  out.mean_error.assign(out.checkpoints.size(), 0.0);
  for (std::size_t trial = 0; trial < trials; ++trial) {
    Rng rng(derive_seed(seed, trial));
    MomentumState state{Vector(n, 0.0), out.rho, out.eta};
    Vector x(n, 0.0);
    std::size_t next = 0;
    for (std::size_t t = 1; t <= horizon; ++t) {
      const auto rows = rng.subset(a.rows(), s);
      const Vector w = exact_step(a, rows, x, b, lambda);
      momentum_step(state, w, x);
      while (next < out.checkpoints.size() && out.checkpoints[next] == t) {
        const Vector err = subtract(x, x_star);
        out.mean_error[next] += dot(err, err);
        ++next;
      }
    }
  }
  for (std::size_t i = 0; i < out.checkpoints.size(); ++i) {
    out.mean_error[i] /= static_cast<double>(trials);
    out.bound.push_back(8.0 * std::pow(1.0 - out.rho / 2.0, static_cast<double>(out.checkpoints[i])) *
                        initial);
    out.max_ratio = std::max(out.max_ratio, out.mean_error[i] / out.bound.back());
  }
  return out;
}

}  // namespace kzpp
