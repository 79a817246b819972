#include "kzpp/verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "kzpp/cdpp.hpp"
#include "kzpp/errors.hpp"
#include "kzpp/flops.hpp"
#include "kzpp/oracles.hpp"
#include "kzpp/problems.hpp"
#include "kzpp/rng.hpp"
#include "kzpp/transforms.hpp"

namespace kzpp {

namespace {

using Checks = std::vector<VerifyCheck>;

// value must not exceed bound
VerifyCheck at_most(std::string name, double value, double bound) {
  return {std::move(name), value, bound, value <= bound};
}

VerifyCheck at_least(std::string name, double value, double bound) {
  return {std::move(name), value, bound, value >= bound};
}

Matrix random_symmetric(std::size_t n, Rng& rng) {
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) a(i, j) = a(j, i) = 2.0 * rng.uniform() - 1.0;
  }
  return a;
}

Checks transform_checks() {
  Rng rng(11);
  double err = 0.0;
  double cost = 0.0;
  for (std::size_t n = 2; n <= 256; n *= 2) {
    const Matrix a = random_symmetric(n, rng);
    FlopCounter counter;
    const Matrix fast = sym_fht(a, {&counter, FlopCategory::transform});
    err = std::max(err, max_abs_diff(fast, fht_matrix(fht_matrix(a).transpose())));
    const double nd = static_cast<double>(n);
    cost = std::max(cost, static_cast<double>(counter.headline()) / (nd * nd * (2.5 + std::log2(nd))));
  }
  double involution = 0.0;
  double isometry = 0.0;
  for (std::size_t n : {1, 8, 100, 1024}) {
    Vector v(n);
    for (double& x : v) x = rng.normal();
    if (is_power_of_two(n)) {
      const Vector twice = fht(fht(v));
      for (std::size_t i = 0; i < n; ++i) {
        involution = std::max(involution, std::abs(twice[i] - static_cast<double>(n) * v[i]));
      }
    }
    const RhtOperator q(n, derive_seed(12, n));
    Matrix m(n, 1, v);
    isometry = std::max(isometry, std::abs(frobenius_norm(q.apply(m)) - norm2(v)) / norm2(v));
  }
  return {at_most("symfht_matches_dense", err, 1e-11), at_most("symfht_ops_over_bound", cost, 1.0),
          at_most("fht_involution", involution, 1e-10), at_most("rht_isometry", isometry, 1e-10)};
}

Checks rate_checks() {
  const std::size_t m = 12;
  const std::size_t s = 3;
  const auto problem = consistent_problem(random_gaussian(m, 8, 21), 22);
  const double lambda = tail_average(svd(problem.a).sigma, s) * s / m;

  const auto ensemble = ProjectionEnsemble::exhaustive(problem.a, s, lambda);
  const RateReport rates = mu_nu_rho(ensemble);

  Rng rng(23);
  BlockSequence blocks;
  for (int t = 0; t < 40; ++t) blocks.push_back(rng.subset(m, s));
  const Vector x0(problem.a.cols(), 0.0);
  const auto three = three_sequence_run(problem.a, problem.b, 0.2, 0.3, blocks, lambda, x0);
  const auto direct = momentum_run(problem.a, problem.b, 0.2, 0.3, blocks, lambda, x0);
  double deviation = 0.0;
  for (std::size_t t = 0; t < direct.size(); ++t) {
    deviation = std::max(deviation, max_abs_diff(three.x[t], direct[t]));
  }

  const std::vector<std::size_t> checkpoints{10, 50};
  const auto bound = rate_bound_check(problem.a, problem.b, s, lambda, 50, checkpoints, 24);
  return {at_least("nu_at_least_one", rates.nu, 1.0 - 1e-9),
          at_most("nu_times_mu", rates.nu * rates.mu, 1.0 + 1e-9),
          at_most("momentum_forms_agree", deviation, 1e-10),
          at_most("rate_bound_ratio", bound.max_ratio, 1.2)};
}

Checks memo_checks() {
  const std::size_t m = 8;
  const std::size_t s = 2;
  const auto blocks = static_cast<std::size_t>(
      std::ceil(8.0 * (static_cast<double>(m) / s) * std::log(static_cast<double>(m))));
  const Matrix a = random_gaussian(m, 6, 31);
  const double lambda = tail_average(svd(a).sigma, s) * s / m;
  const auto check = block_memo_check(a, s, lambda, blocks, 100, 32);
  return {at_least("memo_success_rate", check.success_rate, 0.95)};
}

Checks dpp_checks() {
  const double unit = dpp_enumerate(Matrix::identity(2)).expected_size;

  const Matrix g = random_gaussian(5, 5, 41);
  const Matrix l = gemm(g, g, Op::none, Op::transpose);
  const double size_gap = std::abs(dpp_enumerate(l).expected_size - dpp_expected_size(l));

  const auto rdpp = rdpp_inequality_check(random_gaussian(6, 4, 42), 2);
  return {at_most("expected_size_identity", std::abs(unit - 1.0), 1e-12),
          at_most("expected_size_trace_formula", size_gap, 1e-10),
          at_least("rdpp_min_eigenvalue", rdpp.min_eigenvalue, -1e-9)};
}

Checks reduction_checks() {
  const std::size_t n = 16;
  const Matrix phi = random_gaussian(n, n, 51);
  Rng rng(52);
  Vector b(n);
  for (double& x : b) x = rng.normal();
  ReductionSetup setup;
  setup.block_size = 4;
  setup.lambda = 1e-3;
  setup.rho = 0.1;
  setup.eta = 4.0 / (2.0 * n);
  setup.iterations = 30;
  setup.seed = 53;
  return {at_most("cd_matches_kaczmarz", cdpp_kzpp_reduction_check(phi, b, setup), 1e-9)};
}

const std::vector<std::pair<std::string, std::function<Checks()>>>& registry() {
  static const std::vector<std::pair<std::string, std::function<Checks()>>> suites{
      {"transforms", transform_checks}, {"rates", rate_checks},         {"memoization", memo_checks},
      {"dpp", dpp_checks},              {"reduction", reduction_checks},
  };
  return suites;
}

}  // namespace

bool VerifyReport::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const VerifyCheck& c) { return c.pass; });
}

nlohmann::json VerifyReport::to_json() const {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& c : checks) {
    list.push_back({{"name", c.name}, {"value", c.value}, {"bound", c.bound}, {"pass", c.pass}});
  }
  return {{"suite", suite}, {"checks", list}, {"pass", pass()}};
}

const std::vector<std::string>& verify_suites() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, _] : registry()) out.push_back(name);
    out.emplace_back("all");
    return out;
  }();
  return names;
}

VerifyReport run_verify_suite(const std::string& suite) {
  VerifyReport report{suite, {}};
  bool found = false;
  for (const auto& [name, run] : registry()) {
    if (suite != "all" && suite != name) continue;
    found = true;
    for (auto check : run()) {
      if (suite == "all") check.name = name + "/" + check.name;
      report.checks.push_back(std::move(check));
    }
  }
  if (!found) throw ConfigError("unknown verify suite '" + suite + "'");
  return report;
}

}  // namespace kzpp
