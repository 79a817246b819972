#include "kzpp/flops.hpp"

#include <numeric>
#include <stdexcept>

namespace kzpp {

std::string_view to_string(FlopCategory category) {
  switch (category) {
    case FlopCategory::transform: return "transform";
    case FlopCategory::factorization: return "factorization";
    case FlopCategory::projection: return "projection";
    case FlopCategory::inner_solver: return "inner_solver";
    case FlopCategory::instrumentation: return "instrumentation";
  }
  return "unknown";
}

void FlopCounter::charge(FlopCategory category, std::int64_t amount) {
  if (amount < 0) throw std::invalid_argument("FlopCounter: negative charge");
  const auto a = static_cast<std::uint64_t>(amount);
  totals_[static_cast<std::size_t>(category)] += a;
  if (keep_log_) log_.push_back({category, a});
}

std::uint64_t FlopCounter::headline() const {
  const auto all = std::accumulate(totals_.begin(), totals_.end(), std::uint64_t{0});
  return all - subtotal(FlopCategory::instrumentation);
}

std::uint64_t replay_headline(std::span<const FlopCharge> log) {
  std::uint64_t total = 0;
  for (const auto& c : log) {
    if (c.category != FlopCategory::instrumentation) total += c.amount;
  }
  return total;
}

std::uint64_t model_cg_iteration(std::uint64_t n) { return 2 * n * n + 11 * n; }

std::uint64_t model_gmres_total(std::uint64_t n, std::uint64_t iterations) {
  return 2 * n * n * iterations + 4 * n * iterations * (iterations + 1);
}

std::uint64_t model_cholesky(std::uint64_t s) { return (s * s * s + 2) / 3; }

}  // namespace kzpp
