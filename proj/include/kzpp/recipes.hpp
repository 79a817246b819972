#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"
#include "kzpp/iteration.hpp"
#include "kzpp/krylov.hpp"
#include "kzpp/problems.hpp"

namespace kzpp {

enum class RecipeKind : std::uint8_t { low_rank, kernel };

enum class RhsKind : std::uint8_t { consistent, gaussian };

/// Declarative description of a generated problem, shared by the command
/// line and benchmark manifests.
struct ProblemRecipe {
  RecipeKind kind = RecipeKind::low_rank;
  std::uint64_t seed = 0;

  // low_rank
  std::size_t rows = 512;
  std::size_t cols = 128;
  std::size_t effective_rank = 16;
  double tail_strength = 0.01;
  RhsKind rhs = RhsKind::consistent;

  // kernel
  std::size_t points = 512;
  std::size_t dims = 8;
  KernelSpec kernel;
  double phi = 1e-3;
  std::optional<std::filesystem::path> csv;
  bool standardize = true;

  void validate() const;
  /// Short dataset name for result tables.
  std::string dataset_label() const;
  nlohmann::json to_json() const;
  static ProblemRecipe from_json(const nlohmann::json& doc);
};

LinearProblem build_problem(const ProblemRecipe& recipe);

enum class SolverKind : std::uint8_t { kzpp, cdpp, cg, gmres };
std::string to_string(SolverKind kind);
SolverKind solver_kind_from_string(const std::string& text);

struct SolverSpec {
  SolverKind kind = SolverKind::kzpp;
  SolverConfig config;
  /// Iteration cap for the Krylov baselines; 0 means the system dimension.
  std::size_t krylov_iterations = 0;
  std::optional<std::size_t> restart;
  std::string label;

  std::string display_name() const { return label.empty() ? to_string(kind) : label; }
  static SolverSpec from_json(const nlohmann::json& doc);
};

/// Dispatches to the configured solver. Throws ConfigError when the solver
/// does not apply to the problem kind or shape.
SolveResult run_solver(const LinearProblem& problem, const SolverSpec& spec);

}  // namespace kzpp
