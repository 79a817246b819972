#include <algorithm>
#include <stdexcept>

#include "doctest.h"
#include "kzpp/flops.hpp"
#include "kzpp/trace.hpp"

using namespace kzpp;

TEST_CASE("flop counter categories") {
  FlopCounter counter(true);
  counter.charge(FlopCategory::projection, 100);
  counter.charge(FlopCategory::projection, 100);
  CHECK(counter.headline() == 200);
  counter.charge(FlopCategory::instrumentation, 1000);
  CHECK(counter.headline() == 200);
  CHECK(counter.subtotal(FlopCategory::instrumentation) == 1000);
  CHECK_THROWS_AS(counter.charge(FlopCategory::projection, -1), std::invalid_argument);
  CHECK(replay_headline(counter.log()) == 200);
}

TEST_CASE("closed-form baseline costs") {
  CHECK(model_cg_iteration(1000) == 2011000);
  CHECK(model_cg_iteration(1) == 13);
  CHECK(model_cg_iteration(4096) == 33599488);

  // 2n²T + 4nT(T+1): at n = 100, T = 10 this is 200000 + 44000.
  CHECK(model_gmres_total(100, 10) == 244000);
  CHECK(model_gmres_total(50, 1) == 2 * 50 * 50 + 8 * 50);
  for (std::uint64_t t = 1; t < 20; ++t) CHECK(model_gmres_total(64, t + 1) > model_gmres_total(64, t));

  CHECK(model_cholesky(200) == 2666667);
  CHECK(model_cholesky(1) == 1);
  CHECK(model_cholesky(3) == 9);
}

TEST_CASE("trace serialization") {
  ConvergenceTrace trace;
  trace.solver = "unit";
  trace.status = RunStatus::converged;
  trace.append({0, 0, 1.0, 1.0, 0.0});
  trace.append({1, 50, 0.5, std::nullopt, 0.1});
  const std::string csv = trace_to_csv(trace);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  CHECK(trace_from_json(trace_to_json(trace)) == trace);
  CHECK(flops_to_reach(trace, 0.6) == 50u);
  CHECK(iterations_to_reach(trace, 0.6) == 1u);
  CHECK_FALSE(flops_to_reach(trace, 0.1).has_value());
  CHECK_THROWS(trace.append({1, 60, 0.4, std::nullopt, 0.1}));

  ConvergenceTrace empty;
  CHECK_THROWS(trace_to_csv(empty));
}
