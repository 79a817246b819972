// kzpp command line: generate problems, solve them, run benchmark grids and
// oracle suites. Exit codes: 0 success, 1 numerical failure, 2 usage error.

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <span>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "kzpp/bench.hpp"
#include "kzpp/errors.hpp"
#include "kzpp/oracles.hpp"
#include "kzpp/recipes.hpp"
#include "kzpp/verify.hpp"

namespace {

using nlohmann::json;
using namespace kzpp;

enum ExitCode : int { kOk = 0, kNumerical = 1, kUsage = 2 };

struct GenerateArgs {
  std::string kind = "lowrank";
  ProblemRecipe recipe;
  std::string rhs = "consistent";
  std::string kernel = "gaussian";
  std::string csv;
  std::string out;
};

struct SolveArgs {
  std::string problem;
  std::string solver = "kzpp";
  std::optional<std::size_t> block_size;
  double lambda = 1e-8;
  std::optional<double> eta;
  std::size_t tmax = 8;
  double tau_factor = 2.0;
  double eps = 1e-8;
  std::size_t max_iters = 10000;
  std::optional<std::uint64_t> budget;
  std::uint64_t seed = 0;
  std::string inner = "lsqr";
  std::optional<std::size_t> restart;
  bool no_rht = false;
  bool no_memo = false;
  bool no_accel = false;
  std::string trace;
  std::optional<std::size_t> true_residual_every;
};

json spectrum_summary(const LinearProblem& problem) {
  const Vector sigma = svd(problem.a).sigma;
  const std::size_t rank = numerical_rank(sigma);
  json kappa = json::object();
  for (const std::size_t k : {8, 16, 32, 64}) {
    kappa[std::to_string(k)] = k < rank ? json(demmel_tail_condition(sigma, k)) : json(nullptr);
  }
  return {{"rows", problem.a.rows()},
          {"cols", problem.a.cols()},
          {"kind", to_string(problem.kind)},
          {"rank", rank},
          {"sigma_max", sigma.empty() ? 0.0 : sigma.front()},
          {"kappa_bar", kappa}};
}

int run_generate(GenerateArgs& args, const CLI::App& cmd) {
  static constexpr const char* kKernelFlags[] = {"--kernel", "--gamma", "--phi", "--csv", "--dims"};
  static constexpr const char* kLowRankFlags[] = {"--m", "--effective-rank", "--tail-strength", "--rhs"};
  const bool kernel = args.kind == "kernel";
  if (!kernel && args.kind != "lowrank") throw ConfigError("--kind must be lowrank or kernel");
  const std::span<const char* const> foreign = kernel ? std::span<const char* const>(kLowRankFlags)
                                                      : std::span<const char* const>(kKernelFlags);
  for (const char* flag : foreign) {
    if (cmd.count(flag) > 0) {
      throw ConfigError(std::string(flag) + " conflicts with --kind " + args.kind);
    }
  }
  ProblemRecipe& r = args.recipe;
  if (kernel) {
    r.kind = RecipeKind::kernel;
    r.kernel.kernel = kernel_type_from_string(args.kernel);
    if (cmd.count("--n") > 0) r.points = r.cols;
    if (!args.csv.empty()) r.csv = args.csv;
  } else {
    r.kind = RecipeKind::low_rank;
    if (args.rhs != "consistent" && args.rhs != "gaussian") throw ConfigError("--rhs must be consistent or gaussian");
    r.rhs = args.rhs == "consistent" ? RhsKind::consistent : RhsKind::gaussian;
  }
  const LinearProblem problem = build_problem(r);
  save_problem(args.out, problem);
  json summary = spectrum_summary(problem);
  summary["file"] = args.out;
  summary["recipe"] = r.to_json();
  std::cout << summary.dump(2) << '\n';
  return kOk;
}

SolverSpec solver_spec(const SolveArgs& args, const LinearProblem& problem) {
  SolverSpec spec;
  spec.kind = solver_kind_from_string(args.solver);
  SolverConfig& c = spec.config;
  const std::size_t rows = problem.a.rows();
  c.block_size = args.block_size.value_or(std::min<std::size_t>(rows, 64));
  c.lambda = args.lambda;
  c.eta = args.eta;
  c.inner_iterations = args.tmax;
  c.sketch_factor = args.tau_factor;
  c.tolerance = args.eps;
  c.max_iterations = args.max_iters;
  c.flop_budget = args.budget;
  c.seed = args.seed;
  if (args.inner != "lsqr" && args.inner != "exact") throw ConfigError("--inner must be lsqr or exact");
  c.inner = args.inner == "lsqr" ? InnerSolver::lsqr : InnerSolver::exact;
  c.rht = !args.no_rht;
  c.memoization = !args.no_memo;
  c.acceleration = !args.no_accel;
  // True residual every window of ceil(rows / s) iterations unless overridden.
  c.true_residual_every =
      args.true_residual_every.value_or(c.block_size == 0 ? 0 : (rows + c.block_size - 1) / c.block_size);
  spec.krylov_iterations = args.max_iters;
  spec.restart = args.restart;
  if (spec.kind == SolverKind::cg || spec.kind == SolverKind::gmres) {
    c.true_residual_every = args.true_residual_every.value_or(1);
  }
  return spec;
}

int run_solve(const SolveArgs& args) {
  const LinearProblem problem = load_problem(args.problem);
  const SolverSpec spec = solver_spec(args, problem);
  const SolveResult result = run_solver(problem, spec);
  const ConvergenceTrace& trace = result.trace;
  if (!args.trace.empty()) export_trace(trace, args.trace);

  json summary{{"solver", to_string(spec.kind)},
               {"status", to_string(trace.status)},
               {"iterations", result.iterations},
               {"flops", trace.records.empty() ? 0 : trace.records.back().flops},
               {"flop_source", trace.flop_source},
               {"res_est", nullptr},
               {"res_true", nullptr}};
  if (!trace.records.empty()) {
    summary["res_est"] = trace.records.back().res_est;
    for (auto it = trace.records.rbegin(); it != trace.records.rend(); ++it) {
      if (it->res_true) {
        summary["res_true"] = *it->res_true;
        break;
      }
    }
  }
  if (!trace.message.empty()) summary["message"] = trace.message;
  std::cout << summary.dump(2) << '\n';
  return trace.status == RunStatus::converged ? kOk : kNumerical;
}

int run_bench_command(const std::string& manifest_path, const std::string& out_override) {
  BenchManifest manifest = BenchManifest::load(manifest_path);
  if (!out_override.empty()) manifest.output_dir = out_override;
  const BenchResult result = run_bench(manifest);
  const std::string csv = result.to_csv();
  const auto table = manifest.output_dir / "results.csv";
  std::ofstream(table, std::ios::binary) << csv;
  std::cout << csv;
  std::cerr << "results written to " << table.string() << '\n';
  return kOk;
}

int run_verify(const std::string& suite) {
  const VerifyReport report = run_verify_suite(suite);
  std::cout << report.to_json().dump(2) << '\n';
  return report.pass() ? kOk : kNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Randomized block Kaczmarz and coordinate descent with memoization and momentum"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Generate a test problem and write it to a file");
  generate->add_option("--kind", gen.kind, "lowrank or kernel")->capture_default_str();
  generate->add_option("--m", gen.recipe.rows, "Rows (lowrank)")->capture_default_str();
  generate->add_option("--n", gen.recipe.cols, "Columns (lowrank) or points (kernel)")->capture_default_str();
  generate->add_option("--effective-rank", gen.recipe.effective_rank)->capture_default_str();
  generate->add_option("--tail-strength", gen.recipe.tail_strength)->capture_default_str();
  generate->add_option("--rhs", gen.rhs, "consistent or gaussian (lowrank)")->capture_default_str();
  generate->add_option("--kernel", gen.kernel, "gaussian or laplacian")->capture_default_str();
  generate->add_option("--gamma", gen.recipe.kernel.width, "Kernel width")->capture_default_str();
  generate->add_option("--phi", gen.recipe.phi, "Diagonal shift")->capture_default_str();
  generate->add_option("--dims", gen.recipe.dims, "Synthetic point dimension")->capture_default_str();
  generate->add_option("--csv", gen.csv, "Numeric CSV of points; rows are samples");
  generate->add_option("--seed", gen.recipe.seed)->capture_default_str();
  generate->add_option("--out", gen.out, "Output problem file")->required();

  SolveArgs sol;
  auto* solve_cmd = app.add_subcommand("solve", "Run a solver on a problem file");
  solve_cmd->add_option("--problem", sol.problem, "Problem file")->required();
  solve_cmd->add_option("--solver", sol.solver, "kzpp, cdpp, cg or gmres")->capture_default_str();
  solve_cmd->add_option("--block-size", sol.block_size, "Block size s (default min(rows, 64))");
  solve_cmd->add_option("--lambda", sol.lambda)->capture_default_str();
  solve_cmd->add_option("--eta", sol.eta, "Momentum step (default s/(2n))");
  solve_cmd->add_option("--tmax", sol.tmax, "Inner LSQR iterations")->capture_default_str();
  solve_cmd->add_option("--tau-factor", sol.tau_factor, "Sketch size over s")->capture_default_str();
  solve_cmd->add_option("--eps", sol.eps, "Relative residual target")->capture_default_str();
  solve_cmd->add_option("--max-iters", sol.max_iters)->capture_default_str();
  solve_cmd->add_option("--budget", sol.budget, "FLOP budget");
  solve_cmd->add_option("--seed", sol.seed)->capture_default_str();
  solve_cmd->add_option("--inner", sol.inner, "lsqr or exact")->capture_default_str();
  solve_cmd->add_option("--restart", sol.restart, "GMRES restart length");
  solve_cmd->add_flag("--no-rht", sol.no_rht);
  solve_cmd->add_flag("--no-memo", sol.no_memo);
  solve_cmd->add_flag("--no-accel", sol.no_accel);
  solve_cmd->add_option("--trace", sol.trace, "Trace output (.csv or .json)");
  solve_cmd->add_option("--true-residual-every", sol.true_residual_every,
                        "True residual period (default ceil(rows/s); 0 disables)");

  std::string manifest;
  std::string bench_out;
  auto* bench = app.add_subcommand("bench", "Run a benchmark manifest");
  bench->add_option("manifest", manifest, "Manifest JSON")->required();
  bench->add_option("--out", bench_out, "Override the manifest output directory");

  std::string suite;
  auto* verify = app.add_subcommand("verify", "Run oracle verification suites");
  verify->add_option("suite", suite, "transforms, rates, memoization, dpp, reduction or all")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*generate) return run_generate(gen, *generate);
    if (*solve_cmd) return run_solve(sol);
    if (*bench) return run_bench_command(manifest, bench_out);
    if (*verify) return run_verify(suite);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const DimensionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  }
  return kUsage;
}
