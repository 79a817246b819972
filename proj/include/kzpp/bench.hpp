#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "kzpp/recipes.hpp"

namespace kzpp {

struct BenchEntry {
  ProblemRecipe problem;
  SolverSpec solver;
  std::vector<std::uint64_t> seeds;
};

struct BenchManifest {
  std::filesystem::path output_dir;
  /// Strictly descending.
  std::vector<double> thresholds;
  std::vector<BenchEntry> entries;

  void validate() const;
  static BenchManifest from_json(const nlohmann::json& doc);
  static BenchManifest load(const std::filesystem::path& path);
};

struct BenchCell {
  std::string dataset;
  std::string kernel;
  std::string width;
  std::string solver;
  double threshold = 0.0;
  /// Median over seeds; nullopt when the median run never reached the threshold.
  std::optional<double> flops;
  std::string note;
};

struct BenchResult {
  std::vector<BenchCell> cells;

  std::string to_csv() const;
  bool all_reached() const;
};

/// Runs every entry in manifest order. A failing run is recorded in its
/// cells' notes and does not stop the sweep. Per-run traces are written under
/// output_dir/traces when `write_traces` is set.
BenchResult run_bench(const BenchManifest& manifest, bool write_traces = true);

}  // namespace kzpp
