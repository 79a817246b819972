#include <cmath>
#include <limits>

#include "doctest.h"
#include "kzpp/errors.hpp"
#include "kzpp/oracles.hpp"
#include "kzpp/problems.hpp"
#include "support.hpp"

using namespace kzpp;

namespace {

Matrix identity_minus(const Matrix& a) { return add(Matrix::identity(a.rows()), a, -1.0); }

}  // namespace

TEST_CASE("spectral quantities on a diagonal matrix") {
  const Matrix a = Matrix::diagonal(Vector{10.0, 2.0, 1.0});
  const Vector sigma = svd(a).sigma;
  // Tail (2, 1): Frobenius norm √5 over √(r−k)·σ_min = √2.
  CHECK(demmel_tail_condition(sigma, 1) == doctest::Approx(std::sqrt(5.0) / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(demmel_tail_condition(sigma, 1) == doctest::Approx(1.58114).epsilon(1e-5));
  CHECK(tail_average(sigma, 1) == doctest::Approx(5.0).epsilon(1e-14));
  CHECK(effective_dimension(sigma, 0.0) == doctest::Approx(3.0));
  CHECK(effective_dimension(sigma, std::numeric_limits<double>::infinity()) == 0.0);
  CHECK_THROWS_AS(demmel_tail_condition(sigma, 3), ConfigError);

  const std::vector<std::size_t> ks{1, 2};
  const std::vector<double> lambdas{0.0, 1.0};
  const auto summary = spectral_summary(a, ks, lambdas);
  CHECK(summary.rank == 3);
  CHECK(summary.per_rank[0].lambda_bar == doctest::Approx(5.0));
  CHECK(summary.per_lambda[1].effective_dimension ==
        doctest::Approx(100.0 / 101.0 + 4.0 / 5.0 + 1.0 / 2.0).epsilon(1e-12));
}

TEST_CASE("subset enumeration") {
  CHECK(binomial(6, 2) == 15);
  CHECK(binomial(4, 5) == 0);
  const auto subsets = all_subsets(4, 2);
  CHECK(subsets == std::vector<std::size_t>{0, 1, 0, 2, 0, 3, 1, 2, 1, 3, 2, 3});
}

TEST_CASE("expected projection") {
  const Matrix a = random_gaussian(5, 3, 1);
  const auto single = ProjectionEnsemble::exhaustive(a, 5, 0.1);
  CHECK(single.count() == 1);
  CHECK(max_abs_diff(single.mean(), projection_matrix(a, single.subset(0), 0.1)) <= 1e-15);

  const double lambda = 0.3;
  const auto orth = ProjectionEnsemble::exhaustive(random_orthogonal(4, 2), 4, lambda);
  CHECK(max_abs_diff(orth.mean(), scaled(Matrix::identity(4), 1.0 / (1.0 + lambda))) <= 1e-12);

  const Matrix b = random_gaussian(4, 3, 3);
  const auto exact = ProjectionEnsemble::exhaustive(b, 2, 0.05);
  const auto sampled = ProjectionEnsemble::monte_carlo(b, 2, 0.05, 100000, 4);
  CHECK(exact.count() == 6);
  CHECK(max_abs_diff(exact.mean(), sampled.mean()) <= 1e-2);
}

TEST_CASE("mu and nu") {
  const Matrix q = random_orthogonal(5, 5);
  const auto plain = mu_nu_rho(ProjectionEnsemble::exhaustive(q, 5, 0.0));
  CHECK(plain.mu == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(plain.nu == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(mu_nu_rho(ProjectionEnsemble::exhaustive(q, 5, 0.3)).nu == doctest::Approx(1.0).epsilon(1e-12));

  Rng rng(6);
  for (int inst = 0; inst < 100; ++inst) {
    const std::size_t m = 5 + rng.below(6);
    const std::size_t s = 1 + rng.below(4);
    const Matrix a = random_gaussian(m, 2 + rng.below(m - 1), derive_seed(7, inst));
    const auto r = mu_nu_rho(ProjectionEnsemble::exhaustive(a, s, 0.05));
    CHECK(r.nu >= 1.0 - 1e-9);
    CHECK(r.nu <= (1.0 / r.mu) * (1.0 + 1e-9));
  }

  const Matrix a = random_gaussian(6, 4, 8);
  const double exhaustive = mu_nu_rho(ProjectionEnsemble::exhaustive(a, 2, 0.01)).nu;
  const double sampled = mu_nu_rho(ProjectionEnsemble::monte_carlo(a, 2, 0.01, 1000000, 9)).nu;
  CHECK(std::abs(sampled - exhaustive) <= 0.01 * exhaustive);
}

TEST_CASE("lower coefficient and variance bound") {
  const double lambda = 0.2;
  const double lambda_bar = 0.5;
  const Matrix q = random_orthogonal(4, 10);
  const auto orth = ProjectionEnsemble::exhaustive(q, 4, lambda);
  const auto c = psd_lower_coefficient(orth.mean(), q, lambda_bar);
  REQUIRE(c.c.has_value());
  CHECK(*c.c == doctest::Approx((1.0 + lambda_bar) / (1.0 + lambda)).epsilon(1e-10));

  Rng rng(11);
  for (int inst = 0; inst < 30; ++inst) {
    const std::size_t m = 5 + rng.below(6);
    const std::size_t s = 1 + rng.below(4);
    const std::size_t n = s + 1 + rng.below(m - s);
    const Matrix a = random_gaussian(m, n, derive_seed(12, inst));
    const double lb = tail_average(svd(a).sigma, s);
    const double lam = lb * static_cast<double>(s) / static_cast<double>(m);
    const auto ensemble = ProjectionEnsemble::exhaustive(a, s, lam);
    const auto coef = psd_lower_coefficient(ensemble.mean(), a, lb);
    REQUIRE(coef.c.has_value());
    CHECK(*coef.c > 0.0);
    CHECK(mu_nu_rho(ensemble).nu <= 2.0 * lb / (*coef.c * lam) * (1.0 + 1e-9));
  }
}

TEST_CASE("block memoization") {
  const std::size_t m = 8;
  const std::size_t s = 2;
  const Matrix a = random_gaussian(m, 6, 13);
  const double lambda = tail_average(svd(a).sigma, s) * s / m;

  const auto ensemble = ProjectionEnsemble::exhaustive(a, s, lambda);
  Matrix enumerated(6, 6);
  for (std::size_t i = 0; i < ensemble.count(); ++i) enumerated = add(enumerated, ensemble.projection(i));
  enumerated = scaled(enumerated, 1.0 / static_cast<double>(ensemble.count()));
  CHECK(max_abs_diff(enumerated, ensemble.mean()) <= 1e-14);
  CHECK(min_eigenvalue_on_range(add(enumerated, ensemble.mean(), -0.5), ensemble.mean()) >= 0.0);

  const auto blocks = static_cast<std::size_t>(std::ceil(8.0 * (m / s) * std::log(static_cast<double>(m))));
  CHECK(block_memo_check(a, s, lambda, blocks, 200, 14).success_rate >= 0.95);
  CHECK(block_memo_check(a, s, lambda, 1, 200, 15).success_rate <= 0.5);
}

TEST_CASE("dpp enumeration") {
  const auto unit = dpp_enumerate(Matrix::identity(2));
  CHECK(unit.expected_size == doctest::Approx(1.0).epsilon(1e-15));
  for (const double p : unit.probabilities) CHECK(p == doctest::Approx(0.25));
  CHECK(dpp_expected_size(Matrix::identity(2)) == doctest::Approx(1.0));

  const auto empty = dpp_enumerate(Matrix(3, 3));
  CHECK(empty.probabilities[0] == 1.0);
  CHECK(empty.expected_size == 0.0);

  const Matrix g = random_gaussian(6, 6, 16);
  const Matrix l = gemm(g, g, Op::none, Op::transpose);
  CHECK(std::abs(dpp_enumerate(l).expected_size - dpp_expected_size(l)) <= 1e-10);
  CHECK_THROWS_AS(dpp_enumerate(Matrix{{1, 2}, {2, 1}}), ConfigError);
}

TEST_CASE("regularized dpp inequality") {
  CHECK_THROWS_AS(rdpp_inequality_check(Matrix(3, 2), 1), ConfigError);
  CHECK(rdpp_inequality_check(Matrix::diagonal(Vector{2.0, 1.0, 1.0}), 1).holds);
  for (int inst = 0; inst < 20; ++inst) {
    CHECK(rdpp_inequality_check(random_gaussian(6, 4, derive_seed(17, inst)), 1 + inst % 2).holds);
  }
}

TEST_CASE("momentum and auxiliary-sequence forms agree") {
  const auto problem = consistent_problem(random_gaussian(64, 32, 18), 19);
  Rng rng(20);
  BlockSequence blocks;
  for (int t = 0; t < 100; ++t) blocks.push_back(rng.subset(64, 8));
  const Vector x0(32, 0.0);
  const double lambda = 1e-3;

  const BlockSequence first(blocks.begin(), blocks.begin() + 1);
  const auto one = three_sequence_run(problem.a, problem.b, 0.3, 0.2, first, lambda, x0);
  const auto direct_one = momentum_run(problem.a, problem.b, 0.3, 0.2, first, lambda, x0);
  CHECK(max_abs_diff(one.x[1], direct_one[1]) <= 1e-14);

  const auto three = three_sequence_run(problem.a, problem.b, 0.1, 0.25, blocks, lambda, x0);
  const auto direct = momentum_run(problem.a, problem.b, 0.1, 0.25, blocks, lambda, x0);
  double worst = 0.0;
  for (std::size_t t = 0; t < direct.size(); ++t) worst = std::max(worst, max_abs_diff(three.x[t], direct[t]));
  CHECK(worst <= 1e-10);

  CHECK_THROWS_AS(three_sequence_run(problem.a, problem.b, 0.3, 0.0, first, lambda, x0), ConfigError);
  CHECK_THROWS_AS(three_sequence_run(problem.a, problem.b, 1.0, 0.3, first, lambda, x0), ConfigError);
  CHECK_THROWS_AS(three_sequence_run(problem.a, problem.b, 0.0, 0.3, first, lambda, x0), ConfigError);
  CHECK_NOTHROW(three_sequence_run(problem.a, problem.b, 0.3, 0.3, first, lambda, x0));
}

TEST_CASE("convergence bound") {
  const auto orth = consistent_problem(random_orthogonal(6, 21), 22);
  const std::vector<std::size_t> early{1, 5};
  const auto trivial = rate_bound_check(orth.a, orth.b, 6, 0.0, 5, early, 23);
  CHECK(trivial.max_ratio <= 1.0);

  const auto problem = consistent_problem(random_gaussian(12, 8, 24), 25);
  const double lambda = tail_average(svd(problem.a).sigma, 3) * 3.0 / 12.0;
  const std::vector<std::size_t> checkpoints{10, 50, 100};
  const auto report = rate_bound_check(problem.a, problem.b, 3, lambda, 200, checkpoints, 26);
  CHECK(report.eta > 0.0);
  CHECK(report.max_ratio <= 1.2);
}
