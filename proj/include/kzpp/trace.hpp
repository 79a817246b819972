#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace kzpp {

struct TraceRecord {
  std::uint64_t iteration = 0;
  std::uint64_t flops = 0;
  double res_est = 0.0;
  std::optional<double> res_true;
  double rho = 0.0;

  bool operator==(const TraceRecord&) const = default;
};

enum class RunStatus : std::uint8_t { converged, budget, error };

std::string to_string(RunStatus status);
RunStatus run_status_from_string(const std::string& text);

struct ConvergenceTrace {
  std::string solver;
  /// "instrumented" for counted kernels, "model" for closed-form baseline costs.
  std::string flop_source = "instrumented";
  nlohmann::json config = nlohmann::json::object();
  std::vector<TraceRecord> records;
  RunStatus status = RunStatus::error;
  std::string message;

  void append(const TraceRecord& record);
  bool operator==(const ConvergenceTrace&) const = default;
};

/// Headline FLOPs at the first record whose residual (true when recorded,
/// estimated otherwise) is at or below `threshold`.
std::optional<std::uint64_t> flops_to_reach(const ConvergenceTrace& trace, double threshold);
/// Same search, returning the iteration number.
std::optional<std::uint64_t> iterations_to_reach(const ConvergenceTrace& trace, double threshold);

enum class TraceFormat : std::uint8_t { csv, json };

std::string trace_to_csv(const ConvergenceTrace& trace);
nlohmann::json trace_to_json(const ConvergenceTrace& trace);
ConvergenceTrace trace_from_json(const nlohmann::json& doc);

void export_trace(const ConvergenceTrace& trace, TraceFormat format,
                  const std::filesystem::path& path);
/// Format picked from the extension (.json, anything else is CSV).
void export_trace(const ConvergenceTrace& trace, const std::filesystem::path& path);

}  // namespace kzpp
