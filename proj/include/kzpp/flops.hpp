#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace kzpp {

enum class FlopCategory : std::uint8_t {
  transform,
  factorization,
  projection,
  inner_solver,
  instrumentation,
};

inline constexpr std::size_t kFlopCategories = 5;

std::string_view to_string(FlopCategory category);

struct FlopCharge {
  FlopCategory category;
  std::uint64_t amount;
};

/// Per-category arithmetic-operation tally.
///
/// The headline total excludes instrumentation so that measuring progress
/// never changes the reported cost of a solver.
class FlopCounter {
 public:
  explicit FlopCounter(bool keep_log = false) : keep_log_(keep_log) {}

  void charge(FlopCategory category, std::int64_t amount);
  std::uint64_t headline() const;
  std::uint64_t subtotal(FlopCategory category) const {
    return totals_[static_cast<std::size_t>(category)];
  }
  std::span<const FlopCharge> log() const { return log_; }

 private:
  bool keep_log_;
  std::array<std::uint64_t, kFlopCategories> totals_{};
  std::vector<FlopCharge> log_;
};

/// Null-tolerant helper for optional meters.
inline void charge(FlopCounter* meter, FlopCategory category, std::int64_t amount) {
  if (meter != nullptr) meter->charge(category, amount);
}

/// Optional meter binding used by kernels that report their own cost.
struct Meter {
  FlopCounter* counter = nullptr;
  FlopCategory category = FlopCategory::projection;

  void charge(std::int64_t amount) const { kzpp::charge(counter, category, amount); }
  Meter as(FlopCategory other) const { return {counter, other}; }
};

std::uint64_t replay_headline(std::span<const FlopCharge> log);

std::uint64_t model_cg_iteration(std::uint64_t n);
std::uint64_t model_gmres_total(std::uint64_t n, std::uint64_t iterations);
std::uint64_t model_cholesky(std::uint64_t s);

}  // namespace kzpp
