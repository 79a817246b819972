#include "kzpp/recipes.hpp"

#include "kzpp/cdpp.hpp"
#include "kzpp/errors.hpp"
#include "kzpp/kaczmarz.hpp"

namespace kzpp {

namespace {

using nlohmann::json;

template <typename T>
void read_optional(const json& doc, const char* key, T& out) {
  if (doc.contains(key) && !doc.at(key).is_null()) out = doc.at(key).get<T>();
}

}  // namespace

void ProblemRecipe::validate() const {
  if (kind == RecipeKind::low_rank) {
    SpectrumSpec{rows, cols, effective_rank, tail_strength}.validate();
    return;
  }
  if (!csv && (points == 0 || dims == 0)) throw ConfigError("kernel: points and dims must be positive");
  if (!(kernel.width > 0.0)) throw ConfigError("kernel: width must be positive");
  if (!(phi >= 0.0)) throw ConfigError("kernel: phi must be non-negative");
}

std::string ProblemRecipe::dataset_label() const {
  if (kind == RecipeKind::low_rank) return "low_rank_er" + std::to_string(effective_rank);
  if (csv) return csv->stem().string();
  return "synthetic_d" + std::to_string(dims);
}

json ProblemRecipe::to_json() const {
  json j{{"seed", seed}};
  if (kind == RecipeKind::low_rank) {
    j["kind"] = "lowrank";
    j["m"] = rows;
    j["n"] = cols;
    j["effective_rank"] = effective_rank;
    j["tail_strength"] = tail_strength;
    j["rhs"] = rhs == RhsKind::consistent ? "consistent" : "gaussian";
  } else {
    j["kind"] = "kernel";
    j["n"] = points;
    j["dims"] = dims;
    j["kernel"] = to_string(kernel.kernel);
    j["gamma"] = kernel.width;
    j["phi"] = phi;
    j["standardize"] = standardize;
    if (csv) j["csv"] = csv->string();
  }
  return j;
}

ProblemRecipe ProblemRecipe::from_json(const json& doc) {
  try {
    ProblemRecipe r;
    const std::string kind = doc.value("kind", "lowrank");
    if (kind == "lowrank") {
      r.kind = RecipeKind::low_rank;
      read_optional(doc, "m", r.rows);
      read_optional(doc, "n", r.cols);
      read_optional(doc, "effective_rank", r.effective_rank);
      read_optional(doc, "tail_strength", r.tail_strength);
      const std::string rhs = doc.value("rhs", "consistent");
      if (rhs != "consistent" && rhs != "gaussian") throw ConfigError("unknown rhs '" + rhs + "'");
      r.rhs = rhs == "consistent" ? RhsKind::consistent : RhsKind::gaussian;
    } else if (kind == "kernel") {
      r.kind = RecipeKind::kernel;
      read_optional(doc, "n", r.points);
      read_optional(doc, "dims", r.dims);
      if (doc.contains("kernel")) r.kernel.kernel = kernel_type_from_string(doc.at("kernel").get<std::string>());
      read_optional(doc, "gamma", r.kernel.width);
      read_optional(doc, "phi", r.phi);
      read_optional(doc, "standardize", r.standardize);
      if (doc.contains("csv")) r.csv = doc.at("csv").get<std::string>();
    } else {
      throw ConfigError("unknown problem kind '" + kind + "'");
    }
    read_optional(doc, "seed", r.seed);
    r.validate();
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("problem recipe: ") + e.what());
  }
}

LinearProblem build_problem(const ProblemRecipe& recipe) {
  recipe.validate();
  if (recipe.kind == RecipeKind::low_rank) {
    Matrix a = make_low_rank({recipe.rows, recipe.cols, recipe.effective_rank, recipe.tail_strength},
                             recipe.seed);
    const std::uint64_t rhs_seed = derive_seed(recipe.seed, 1);
    LinearProblem p = recipe.rhs == RhsKind::consistent ? consistent_problem(std::move(a), rhs_seed)
                                                        : gaussian_rhs_problem(std::move(a), rhs_seed);
    p.metadata.generator = "lowrank";
    p.metadata.params = recipe.to_json();
    p.metadata.seed = recipe.seed;
    return p;
  }
  Matrix points = recipe.csv ? load_csv(*recipe.csv)
                             : synthetic_points(recipe.points, recipe.dims, recipe.seed);
  if (recipe.csv && recipe.standardize) points = standardize_columns(std::move(points));
  LinearProblem p = psd_problem(kernel_matrix(points, recipe.kernel), recipe.phi,
                                derive_seed(recipe.seed, 2));
  p.metadata.generator = "kernel";
  p.metadata.params = recipe.to_json();
  p.metadata.seed = recipe.seed;
  return p;
}

std::string to_string(SolverKind kind) {
  switch (kind) {
    case SolverKind::kzpp: return "kzpp";
    case SolverKind::cdpp: return "cdpp";
    case SolverKind::cg: return "cg";
    case SolverKind::gmres: return "gmres";
  }
  return "unknown";
}

SolverKind solver_kind_from_string(const std::string& text) {
  if (text == "kzpp") return SolverKind::kzpp;
  if (text == "cdpp") return SolverKind::cdpp;
  if (text == "cg") return SolverKind::cg;
  if (text == "gmres") return SolverKind::gmres;
  throw ConfigError("unknown solver '" + text + "' (expected kzpp, cdpp, cg or gmres)");
}

SolverSpec SolverSpec::from_json(const json& doc) {
  try {
    SolverSpec s;
    s.kind = solver_kind_from_string(doc.value("name", "kzpp"));
    auto& c = s.config;
    read_optional(doc, "block_size", c.block_size);
    read_optional(doc, "lambda", c.lambda);
    if (doc.contains("eta") && !doc.at("eta").is_null()) c.eta = doc.at("eta").get<double>();
    read_optional(doc, "tmax", c.inner_iterations);
    read_optional(doc, "tau_factor", c.sketch_factor);
    read_optional(doc, "eps", c.tolerance);
    read_optional(doc, "max_iters", c.max_iterations);
    read_optional(doc, "max_iters", s.krylov_iterations);
    if (doc.contains("budget") && !doc.at("budget").is_null()) {
      c.flop_budget = doc.at("budget").get<std::uint64_t>();
    }
    read_optional(doc, "rht", c.rht);
    read_optional(doc, "memo", c.memoization);
    read_optional(doc, "accel", c.acceleration);
    read_optional(doc, "true_residual_every", c.true_residual_every);
    if (doc.contains("inner")) {
      const std::string inner = doc.at("inner").get<std::string>();
      if (inner != "lsqr" && inner != "exact") throw ConfigError("unknown inner solver '" + inner + "'");
      c.inner = inner == "lsqr" ? InnerSolver::lsqr : InnerSolver::exact;
    }
    if (doc.contains("restart")) s.restart = doc.at("restart").get<std::size_t>();
    read_optional(doc, "label", s.label);
    return s;
  } catch (const json::exception& e) {
    throw FormatError(std::string("solver spec: ") + e.what());
  }
}

SolveResult run_solver(const LinearProblem& problem, const SolverSpec& spec) {
  switch (spec.kind) {
    case SolverKind::kzpp:
      return solve(problem, spec.config);
    case SolverKind::cdpp:
      if (problem.kind != ProblemKind::psd) {
        throw ConfigError("cdpp requires a psd problem; use kzpp for general systems");
      }
      return solve_psd(problem, spec.config);
    case SolverKind::cg:
    case SolverKind::gmres: {
      if (!problem.a.square()) throw ConfigError(to_string(spec.kind) + " requires a square system");
      if (spec.kind == SolverKind::cg && !is_symmetric(problem.a)) {
        throw ConfigError("cg requires a symmetric system");
      }
      KrylovConfig k;
      k.tolerance = spec.config.tolerance;
      k.max_iterations = spec.krylov_iterations;
      k.restart = spec.restart;
      k.true_residual_every = spec.config.true_residual_every == 0 ? 1 : spec.config.true_residual_every;
      return spec.kind == SolverKind::cg ? cg_solve(problem.a, problem.b, k)
                                         : gmres_solve(problem.a, problem.b, k);
    }
  }
  throw ConfigError("unknown solver");
}

}  // namespace kzpp
