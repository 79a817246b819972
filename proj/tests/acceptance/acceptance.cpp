// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails. Pass criterion numbers as arguments to run a
// subset; --report <path> also writes the lines to a file.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "kzpp/cdpp.hpp"
#include "kzpp/kaczmarz.hpp"
#include "kzpp/krylov.hpp"
#include "kzpp/oracles.hpp"
#include "kzpp/problems.hpp"
#include "kzpp/rng.hpp"
#include "kzpp/transforms.hpp"

using namespace kzpp;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

template <typename T>
T median(std::vector<T> values) {
  std::sort(values.begin(), values.end());
  return values[values.size() / 2];
}

Matrix random_symmetric(std::size_t n, Rng& rng) {
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      a(i, j) = a(j, i) = 2.0 * rng.uniform() - 1.0;
    }
  }
  return a;
}

Vector random_vector(std::size_t n, Rng& rng) {
  Vector v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

Outcome symfht_correctness_and_cost() {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(101);
  double worst_err = 0.0;
  double worst_cost_ratio = 0.0;
  for (std::size_t n = 2; n <= 1024; n *= 2) {
    for (int rep = 0; rep < 10; ++rep) {
      const Matrix a = random_symmetric(n, rng);
      FlopCounter counter;
      const Matrix fast = sym_fht(a, {&counter, FlopCategory::transform});
      const Matrix reference = fht_matrix(fht_matrix(a).transpose());
      worst_err = std::max(worst_err, max_abs_diff(fast, reference));
      const double nd = static_cast<double>(n);
      const double bound = nd * nd * (2.5 + std::log2(nd));
      worst_cost_ratio = std::max(worst_cost_ratio, static_cast<double>(counter.headline()) / bound);
    }
  }
  const double secs = seconds_since(start);
  return {worst_err <= 1e-11 && worst_cost_ratio <= 1.0 && secs < 30.0,
          fmt("max err %.2e, max ops/bound %.3f, %.1fs", worst_err, worst_cost_ratio, secs)};
}

Outcome transform_algebra() {
  Rng rng(202);
  double worst_involution = 0.0;
  double worst_isometry = 0.0;
  for (std::size_t n = 1; n <= 4096; n *= 2) {
    const Vector v = random_vector(n, rng);
    Vector twice = fht(fht(v));
    for (std::size_t i = 0; i < n; ++i) {
      worst_involution = std::max(worst_involution, std::abs(twice[i] - static_cast<double>(n) * v[i]));
    }
  }
  for (std::size_t n : {1, 3, 7, 64, 100, 1000, 1024, 3000, 4096}) {
    const RhtOperator q(n, derive_seed(7, n));
    Matrix m(n, 3);
    for (double& x : m.data()) x = rng.normal();
    const double before = frobenius_norm(m);
    const double after = frobenius_norm(q.apply(m));
    worst_isometry = std::max(worst_isometry, std::abs(after - before) / before);
  }
  return {worst_involution <= 1e-10 && worst_isometry <= 1e-10,
          fmt("fht∘fht max err %.2e, isometry rel err %.2e", worst_involution, worst_isometry)};
}

Outcome momentum_equivalence() {
  const std::size_t m = 64;
  const std::size_t n = 32;
  const std::size_t s = 8;
  const double lambda = 1e-3;
  const auto problem = consistent_problem(random_gaussian(m, n, 303), 304);
  Rng rng(305);
  BlockSequence blocks;
  for (int t = 0; t < 100; ++t) blocks.push_back(rng.subset(m, s));
  const Vector x0(n, 0.0);
  double worst = 0.0;
  for (const double rho : {0.05, 0.2, 0.4}) {
    for (const double eta : {0.05, 0.2, 0.4}) {
      const auto three = three_sequence_run(problem.a, problem.b, rho, eta, blocks, lambda, x0);
      const auto direct = momentum_run(problem.a, problem.b, rho, eta, blocks, lambda, x0);
      for (std::size_t t = 0; t < direct.size(); ++t) {
        worst = std::max(worst, max_abs_diff(three.x[t], direct[t]));
      }
    }
  }
  return {worst <= 1e-10, fmt("max deviation %.2e over 9 (rho, eta) pairs", worst)};
}

Outcome rate_bound() {
  const auto start = std::chrono::steady_clock::now();
  const std::size_t m = 12;
  const std::size_t s = 3;
  const auto problem = consistent_problem(random_gaussian(m, 8, 404), 405);
  const double lambda_bar = tail_average(svd(problem.a).sigma, s);
  const std::vector<std::size_t> checkpoints{10, 50, 100};
  const auto report = rate_bound_check(problem.a, problem.b, s, lambda_bar * s / m, 200, checkpoints, 406);
  const double secs = seconds_since(start);
  return {report.max_ratio <= 1.2 && secs < 60.0,
          fmt("rho %.4f eta %.4f, max mean/bound %.3f, %.1fs", report.rho, report.eta, report.max_ratio,
              secs)};
}

Outcome variance_bounds() {
  Rng rng(505);
  int checked = 0;
  int lemma_fail = 0;
  int theorem_fail = 0;
  double worst_slack = std::numeric_limits<double>::infinity();
  for (int inst = 0; inst < 100; ++inst) {
    const std::size_t m = 5 + rng.below(6);
    const std::size_t s = 1 + rng.below(4);
    const std::size_t n = s + 1 + rng.below(m - s);
    const Matrix a = random_gaussian(m, n, derive_seed(506, inst));
    const double lambda_bar = tail_average(svd(a).sigma, s);
    for (const double lambda : {lambda_bar * s / m, lambda_bar / 10.0}) {
      const auto ensemble = ProjectionEnsemble::exhaustive(a, s, lambda);
      const RateReport rates = mu_nu_rho(ensemble);
      ++checked;
      if (!(rates.nu >= 1.0 - 1e-9 && rates.nu <= (1.0 / rates.mu) * (1.0 + 1e-9))) ++lemma_fail;
      const auto coef = psd_lower_coefficient(ensemble.mean(), a, lambda_bar);
      if (!coef.c || *coef.c <= 0.0) {
        ++theorem_fail;
        continue;
      }
      const double bound = 2.0 * lambda_bar / (*coef.c * lambda);
      worst_slack = std::min(worst_slack, bound / rates.nu);
      if (rates.nu > bound * (1.0 + 1e-9)) ++theorem_fail;
    }
  }
  return {lemma_fail == 0 && theorem_fail == 0,
          fmt("%d ensembles, 1<=nu<=1/mu failures %d, nu<=2lb/(c lambda) failures %d, min slack %.3f",
              checked, lemma_fail, theorem_fail, worst_slack)};
}

Outcome block_memoization() {
  const std::size_t m = 8;
  const std::size_t s = 2;
  const auto blocks = static_cast<std::size_t>(
      std::ceil(8.0 * (static_cast<double>(m) / s) * std::log(static_cast<double>(m))));
  double worst = 1.0;
  for (int inst = 0; inst < 5; ++inst) {
    const Matrix a = random_gaussian(m, 6, derive_seed(606, inst));
    const double lambda = tail_average(svd(a).sigma, s) * s / m;
    const auto check = block_memo_check(a, s, lambda, blocks, 200, derive_seed(607, inst));
    worst = std::min(worst, check.success_rate);
  }
  return {worst >= 0.95, fmt("B = %zu, worst success rate %.3f over 5 instances", blocks, worst)};
}

Outcome dpp_identities() {
  Rng rng(707);
  double worst_size = 0.0;
  int rdpp_fail = 0;
  double worst_margin = std::numeric_limits<double>::infinity();
  for (int inst = 0; inst < 20; ++inst) {
    const std::size_t m = 2 + rng.below(5);
    const Matrix g = random_gaussian(m, m, derive_seed(708, inst));
    const Matrix l = gemm(g, g, Op::none, Op::transpose);
    const auto dist = dpp_enumerate(l);
    worst_size = std::max(worst_size, std::abs(dist.expected_size - dpp_expected_size(l)));

    const std::size_t rows = 3 + rng.below(4);
    const std::size_t cols = 2 + rng.below(rows - 1);
    const std::size_t k = 1 + rng.below(std::min<std::size_t>(2, cols - 1));
    const auto check = rdpp_inequality_check(random_gaussian(rows, cols, derive_seed(709, inst)), k);
    if (!check.holds) ++rdpp_fail;
    worst_margin = std::min(worst_margin, check.min_eigenvalue);
  }
  return {worst_size <= 1e-10 && rdpp_fail == 0,
          fmt("max |E|S| - tr(L(L+I)^-1)| %.2e, inequality failures %d, min eig %.2e", worst_size,
              rdpp_fail, worst_margin)};
}

Outcome preconditioner_quality() {
  const std::size_t m = 512;
  const std::size_t n = 256;
  const std::size_t s = 16;
  const Matrix raw = make_low_rank({m, n, 16, 0.01}, 808);
  const Matrix a = RhtOperator(m, 809).apply(raw);
  const double lambda = tail_average(svd(a).sigma, s);
  int good = 0;
  double worst_kappa = 0.0;
  double worst_proj = 0.0;
  for (int seed = 0; seed < 100; ++seed) {
    Rng rng(derive_seed(810, seed));
    const auto rows = rng.subset(m, s);
    const auto r = build_block_preconditioner(a, rows, 2 * s, lambda, rng.next());
    const auto sigma = svd(preconditioned_block(a, rows, r, lambda)).sigma;
    const double kappa = sigma.front() / sigma.back();
    worst_kappa = std::max(worst_kappa, kappa);
    if (kappa <= 3.0) ++good;
    if (seed < 10) {
      const Vector residual = random_vector(s, rng);
      const Vector exact = project_block_exact(a, rows, residual, lambda);
      const Vector approx = proj_lsqr(a, rows, r, residual, lambda, 100);
      worst_proj = std::max(worst_proj, norm2(subtract(approx, exact)) / norm2(exact));
    }
  }
  return {good >= 95 && worst_proj <= 1e-8,
          fmt("kappa<=3 in %d/100 (max %.3f), lsqr vs exact rel err %.2e", good, worst_kappa, worst_proj)};
}

Outcome kaczmarz_end_to_end() {
  std::vector<double> ratios;
  bool all_ok = true;
  std::size_t worst_iters = 0;
  double worst_res = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto problem = consistent_problem(make_low_rank({512, 128, 16, 0.01}, 900 + seed), 950 + seed);
    SolverConfig full;
    full.block_size = 64;
    full.tolerance = 1e-8;
    full.max_iterations = 500;
    full.seed = seed;
    const auto fast = solve(problem, full);
    const double res = fast.trace.records.back().res_true.value_or(1.0);
    worst_iters = std::max(worst_iters, fast.iterations);
    worst_res = std::max(worst_res, res);
    if (fast.trace.status != RunStatus::converged || res > 1e-7) all_ok = false;

    SolverConfig plain = full;
    plain.acceleration = false;
    plain.memoization = false;
    plain.max_iterations = 5000;
    const auto slow = solve(problem, plain);
    const auto f_fast = flops_to_reach(fast.trace, 1e-8);
    const auto f_slow = flops_to_reach(slow.trace, 1e-8);
    if (!f_fast || !f_slow) {
      all_ok = false;
      continue;
    }
    ratios.push_back(static_cast<double>(*f_slow) / static_cast<double>(*f_fast));
  }
  const double ratio = ratios.empty() ? 0.0 : median(ratios);
  return {all_ok && ratio >= 1.5,
          fmt("max iters %zu, max true residual %.2e, median FLOP ratio (ablation/full) %.3f", worst_iters,
              worst_res, ratio)};
}

LinearProblem kernel_problem(std::size_t n, std::size_t dims, double width, std::uint64_t seed) {
  const Matrix points = synthetic_points(n, dims, seed);
  return psd_problem(kernel_matrix(points, {KernelType::gaussian, width}), 1e-3, seed + 1);
}

Outcome cdpp_versus_krylov() {
  const std::size_t n = 512;
  int wins = 0;
  bool cg_struggles = false;
  std::ostringstream detail;
  for (const std::size_t dims : {8, 5}) {
    for (const double width : {0.1, 0.01}) {
      const auto problem = kernel_problem(n, dims, width, 1000 + dims);
      KrylovConfig krylov;
      krylov.tolerance = 1e-4;
      krylov.max_iterations = 2 * n;
      const auto gmres = gmres_solve(problem.a, problem.b, krylov);
      const auto gmres_flops = flops_to_reach(gmres.trace, 1e-4);

      std::vector<double> cd_flops;
      for (std::uint64_t seed = 0; seed < 5; ++seed) {
        SolverConfig config;
        config.block_size = 64;
        config.tolerance = 1e-4;
        config.max_iterations = 20000;
        config.true_residual_every = 1;
        config.seed = seed;
        const auto run = solve_psd(problem, config);
        const auto f = flops_to_reach(run.trace, 1e-4);
        cd_flops.push_back(f ? static_cast<double>(*f) : std::numeric_limits<double>::infinity());
      }
      const double cd = median(cd_flops);
      const double gm = gmres_flops ? static_cast<double>(*gmres_flops)
                                    : std::numeric_limits<double>::infinity();
      if (cd <= gm) ++wins;

      krylov.tolerance = 1e-8;
      const auto cg = cg_solve(problem.a, problem.b, krylov);
      const bool cg_ok = cg.trace.status == RunStatus::converged;
      if (!cg_ok) cg_struggles = true;
      detail << fmt("[d%zu w%.2g cd %.2e gm %.2e cg %s] ", dims, width, cd, gm, cg_ok ? "ok" : "stuck");
    }
  }
  return {wins >= 2 && cg_struggles, fmt("CD++ wins %d/4, ", wins) + detail.str()};
}

Outcome reduction_identity() {
  const std::size_t n = 32;
  const Matrix phi = random_gaussian(n, n, 1111);
  Rng rng(1112);
  const Vector b = random_vector(n, rng);
  ReductionSetup setup;
  setup.block_size = 4;
  setup.lambda = 1e-3;
  setup.rho = 0.1;
  setup.eta = 4.0 / (2.0 * n);
  setup.iterations = 50;
  setup.seed = 1113;
  const double deviation = cdpp_kzpp_reduction_check(phi, b, setup);
  return {deviation <= 1e-9, fmt("max ||z_t - Phi_bar^T x_t|| = %.2e", deviation)};
}

Outcome flop_models() {
  const auto cg = model_cg_iteration(1000);
  const auto gmres = model_gmres_total(100, 10);
  const auto chol = model_cholesky(200);
  return {cg == 2011000 && gmres == 2044000 && chol == 2666667,
          fmt("cg %llu, gmres %llu, cholesky %llu", static_cast<unsigned long long>(cg),
              static_cast<unsigned long long>(gmres), static_cast<unsigned long long>(chol))};
}

Outcome regularizer_robustness() {
  const auto problem = kernel_problem(256, 8, 0.1, 1300);
  std::vector<double> medians;
  std::ostringstream detail;
  for (const double lambda : {0.0, 1e-10, 1e-8, 1e-4, 1e-2}) {
    std::vector<double> iters;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      SolverConfig config;
      config.block_size = 32;
      config.lambda = lambda;
      config.tolerance = 1e-7;
      config.max_iterations = 50000;
      config.true_residual_every = 1;
      config.seed = seed;
      const auto run = solve_psd(problem, config);
      const auto it = iterations_to_reach(run.trace, 1e-6);
      iters.push_back(it ? static_cast<double>(*it) : std::numeric_limits<double>::infinity());
    }
    medians.push_back(median(iters));
    detail << fmt("%g:%g ", lambda, medians.back());
  }
  const auto [lo, hi] = std::minmax_element(medians.begin(), medians.end());
  const double spread = (*hi - *lo) / *lo;
  return {spread <= 0.25, fmt("spread %.3f; median iterations per lambda ", spread) + detail.str()};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  std::FILE* report = nullptr;
  for (int i = 1; i < argc; ++i) {
    if (std::string(argv[i]) == "--report" && i + 1 < argc) {
      report = std::fopen(argv[++i], "w");
    } else {
      only.insert(std::atoi(argv[i]));
    }
  }

  const std::vector<Criterion> criteria{
      {1, "symfht-correctness-and-cost", symfht_correctness_and_cost},
      {2, "transform-algebra", transform_algebra},
      {3, "momentum-equivalence", momentum_equivalence},
      {4, "rate-bound", rate_bound},
      {5, "variance-bounds", variance_bounds},
      {6, "block-memoization", block_memoization},
      {7, "dpp-identities", dpp_identities},
      {8, "preconditioner-quality", preconditioner_quality},
      {9, "kaczmarz-end-to-end", kaczmarz_end_to_end},
      {10, "cdpp-versus-krylov", cdpp_versus_krylov},
      {11, "cdpp-kaczmarz-reduction", reduction_identity},
      {12, "flop-model-constants", flop_models},
      {13, "regularizer-robustness", regularizer_robustness},
  };

  int failures = 0;
  int evaluated = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.contains(c.id)) continue;
    Outcome outcome{false, ""};
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    if (!outcome.pass) ++failures;
    ++evaluated;
    const std::string line = fmt("%s %d %s: ", outcome.pass ? "PASS" : "FAIL", c.id, c.name) + outcome.detail;
    std::printf("%s\n", line.c_str());
    std::fflush(stdout);
    if (report != nullptr) std::fprintf(report, "%s\n", line.c_str());
  }
  const std::string summary =
      fmt("acceptance: %d criteria evaluated, %d passed, %d failed", evaluated, evaluated - failures, failures);
  std::printf("%s\n", summary.c_str());
  if (report != nullptr) {
    std::fprintf(report, "%s\n", summary.c_str());
    std::fclose(report);
  }
  return failures == 0 ? 0 : 1;
}
