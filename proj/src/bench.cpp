#include "kzpp/bench.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "kzpp/errors.hpp"

namespace kzpp {

namespace {

constexpr double kUnreached = std::numeric_limits<double>::infinity();

std::string format_number(const char* format, double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, value);
  return buf;
}

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  if (values.size() % 2 == 1) return values[mid];
  return 0.5 * (values[mid - 1] + values[mid]);  // ∞ + finite stays ∞
}

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string quoted = "\"";
  for (char c : text) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  return quoted + '"';
}

struct RunOutcome {
  std::optional<ConvergenceTrace> trace;
  std::string failure;
};

std::string budget_note(const SolverSpec& spec, const ConvergenceTrace& trace) {
  if (trace.status == RunStatus::error) return "error: " + trace.message;
  if (spec.config.flop_budget) return "budget " + std::to_string(*spec.config.flop_budget) + " flops";
  const std::size_t cap =
      spec.kind == SolverKind::cg || spec.kind == SolverKind::gmres ? spec.krylov_iterations
                                                                   : spec.config.max_iterations;
  return cap == 0 ? "budget n iterations" : "budget " + std::to_string(cap) + " iterations";
}

}  // namespace

void BenchManifest::validate() const {
  if (entries.empty()) throw ConfigError("bench manifest has no entries");
  if (thresholds.empty()) throw ConfigError("bench manifest has no thresholds");
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    if (!(thresholds[i] > 0.0)) throw ConfigError("thresholds must be positive");
    if (i > 0 && !(thresholds[i] < thresholds[i - 1])) {
      throw ConfigError("thresholds must be strictly descending");
    }
  }
  for (const auto& e : entries) {
    if (e.seeds.empty()) throw ConfigError("bench entry has no seeds");
  }
}

BenchManifest BenchManifest::from_json(const nlohmann::json& doc) {
  try {
    BenchManifest m;
    m.output_dir = doc.value("output_dir", std::string("bench_out"));
    m.thresholds = doc.at("thresholds").get<std::vector<double>>();
    for (const auto& e : doc.at("entries")) {
      m.entries.push_back({ProblemRecipe::from_json(e.at("problem")), SolverSpec::from_json(e.at("solver")),
                           e.value("seeds", std::vector<std::uint64_t>{0})});
    }
    m.validate();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bench manifest: ") + e.what());
  }
}

BenchManifest BenchManifest::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open manifest " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("manifest " + path.string() + ": " + e.what());
  }
  BenchManifest m = from_json(doc);
  if (m.output_dir.is_relative()) m.output_dir = path.parent_path() / m.output_dir;
  return m;
}

std::string BenchResult::to_csv() const {
  std::ostringstream out;
  out << "dataset,kernel,width,solver,threshold,flops,note\n";
  for (const auto& c : cells) {
    out << csv_field(c.dataset) << ',' << c.kernel << ',' << c.width << ',' << csv_field(c.solver) << ','
        << format_number("%.0e", c.threshold) << ','
        << (c.flops ? format_number("%.0f", *c.flops) : std::string("∞")) << ',' << csv_field(c.note)
        << '\n';
  }
  return out.str();
}

bool BenchResult::all_reached() const {
  return std::all_of(cells.begin(), cells.end(), [](const BenchCell& c) { return c.flops.has_value(); });
}

BenchResult run_bench(const BenchManifest& manifest, bool write_traces) {
  manifest.validate();
  if (write_traces) std::filesystem::create_directories(manifest.output_dir / "traces");

  std::map<std::string, LinearProblem> problems;  // keyed by recipe JSON
  BenchResult result;
  for (std::size_t index = 0; index < manifest.entries.size(); ++index) {
    const BenchEntry& entry = manifest.entries[index];

    std::vector<RunOutcome> runs;
    std::string problem_error;
    const std::string key = entry.problem.to_json().dump();
    try {
      if (!problems.contains(key)) problems.emplace(key, build_problem(entry.problem));
    } catch (const std::exception& e) {
      problem_error = std::string("problem failed: ") + e.what();
    }
    if (problem_error.empty()) {
      for (const std::uint64_t seed : entry.seeds) {
        SolverSpec spec = entry.solver;
        spec.config.seed = seed;
        try {
          SolveResult run = run_solver(problems.at(key), spec);
          if (write_traces) {
            export_trace(run.trace, manifest.output_dir / "traces" /
                                        ("entry" + std::to_string(index) + "_seed" + std::to_string(seed) +
                                         ".csv"));
          }
          runs.push_back({std::move(run.trace), {}});
        } catch (const std::exception& e) {
          runs.push_back({std::nullopt, e.what()});
        }
      }
    }

    const bool is_kernel = entry.problem.kind == RecipeKind::kernel;
    for (const double threshold : manifest.thresholds) {
      BenchCell cell{entry.problem.dataset_label(),
                     is_kernel ? to_string(entry.problem.kernel.kernel) : "-",
                     is_kernel ? format_number("%g", entry.problem.kernel.width) : "-",
                     entry.solver.display_name(),
                     threshold,
                     std::nullopt,
                     {}};
      if (!problem_error.empty()) {
        cell.note = problem_error;
        result.cells.push_back(std::move(cell));
        continue;
      }
      std::vector<double> flops;
      std::string note;
      for (const auto& run : runs) {
        if (!run.trace) {
          flops.push_back(kUnreached);
          if (note.empty()) note = "error: " + run.failure;
          continue;
        }
        const auto reached = flops_to_reach(*run.trace, threshold);
        flops.push_back(reached ? static_cast<double>(*reached) : kUnreached);
        if (!reached && note.empty()) note = budget_note(entry.solver, *run.trace);
      }
      const double mid = median(flops);
      if (mid != kUnreached) cell.flops = mid;
      const auto missed = std::count(flops.begin(), flops.end(), kUnreached);
      if (missed > 0) {
        cell.note = std::to_string(missed) + "/" + std::to_string(flops.size()) + " runs unreached (" +
                    note + ")";
      }
      result.cells.push_back(std::move(cell));
    }
  }
  return result;
}

}  // namespace kzpp
