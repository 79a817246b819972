#include "kzpp/trace.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "kzpp/errors.hpp"

namespace kzpp {

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void require_nonempty(const ConvergenceTrace& trace) {
  if (trace.records.empty()) throw Error("trace: refusing to export an empty trace");
}

}  // namespace

std::string to_string(RunStatus status) {
  switch (status) {
    case RunStatus::converged: return "converged";
    case RunStatus::budget: return "budget";
    case RunStatus::error: return "error";
  }
  return "error";
}

RunStatus run_status_from_string(const std::string& text) {
  if (text == "converged") return RunStatus::converged;
  if (text == "budget") return RunStatus::budget;
  if (text == "error") return RunStatus::error;
  throw FormatError("trace: unknown status '" + text + "'");
}

void ConvergenceTrace::append(const TraceRecord& record) {
  if (!records.empty() && record.iteration <= records.back().iteration) {
    throw Error("trace: iterations must be strictly increasing");
  }
  records.push_back(record);
}

std::string trace_to_csv(const ConvergenceTrace& trace) {
  require_nonempty(trace);
  std::ostringstream out;
  out << "iter,flops,res_est,res_true,rho\n";
  for (const auto& r : trace.records) {
    out << r.iteration << ',' << r.flops << ',' << format_double(r.res_est) << ',';
    if (r.res_true) out << format_double(*r.res_true);
    out << ',' << format_double(r.rho) << '\n';
  }
  return out.str();
}

nlohmann::json trace_to_json(const ConvergenceTrace& trace) {
  require_nonempty(trace);
  nlohmann::json records = nlohmann::json::array();
  for (const auto& r : trace.records) {
    records.push_back({{"iter", r.iteration},
                       {"flops", r.flops},
                       {"res_est", r.res_est},
                       {"res_true", r.res_true ? nlohmann::json(*r.res_true) : nlohmann::json()},
                       {"rho", r.rho}});
  }
  return {{"solver", trace.solver},
          {"flop_source", trace.flop_source},
          {"status", to_string(trace.status)},
          {"message", trace.message},
          {"config", trace.config},
          {"records", records}};
}

ConvergenceTrace trace_from_json(const nlohmann::json& doc) {
  try {
    ConvergenceTrace t;
    t.solver = doc.at("solver").get<std::string>();
    t.flop_source = doc.at("flop_source").get<std::string>();
    t.status = run_status_from_string(doc.at("status").get<std::string>());
    t.message = doc.value("message", "");
    t.config = doc.at("config");
    for (const auto& r : doc.at("records")) {
      TraceRecord rec;
      rec.iteration = r.at("iter").get<std::uint64_t>();
      rec.flops = r.at("flops").get<std::uint64_t>();
      rec.res_est = r.at("res_est").get<double>();
      if (!r.at("res_true").is_null()) rec.res_true = r.at("res_true").get<double>();
      rec.rho = r.at("rho").get<double>();
      t.append(rec);
    }
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("trace: malformed JSON: ") + e.what());
  }
}

void export_trace(const ConvergenceTrace& trace, TraceFormat format,
                  const std::filesystem::path& path) {
  const std::string body =
      format == TraceFormat::csv ? trace_to_csv(trace) : trace_to_json(trace).dump(2) + "\n";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("trace: cannot open " + path.string());
  out << body;
  if (!out) throw Error("trace: write failed for " + path.string());
}

void export_trace(const ConvergenceTrace& trace, const std::filesystem::path& path) {
  export_trace(trace, path.extension() == ".json" ? TraceFormat::json : TraceFormat::csv, path);
}

namespace {

const TraceRecord* first_below(const ConvergenceTrace& trace, double threshold) {
  for (const auto& rec : trace.records) {
    if (rec.res_true.value_or(rec.res_est) <= threshold) return &rec;
  }
  return nullptr;
}

}  // namespace

std::optional<std::uint64_t> flops_to_reach(const ConvergenceTrace& trace, double threshold) {
  const auto* rec = first_below(trace, threshold);
  if (rec == nullptr) return std::nullopt;
  return rec->flops;
}

std::optional<std::uint64_t> iterations_to_reach(const ConvergenceTrace& trace, double threshold) {
  const auto* rec = first_below(trace, threshold);
  if (rec == nullptr) return std::nullopt;
  return rec->iteration;
}

}  // namespace kzpp
