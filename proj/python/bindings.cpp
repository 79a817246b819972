#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <string>

#include "json.hpp"
#include "kzpp/errors.hpp"
#include "kzpp/flops.hpp"
#include "kzpp/oracles.hpp"
#include "kzpp/problems.hpp"
#include "kzpp/recipes.hpp"
#include "kzpp/transforms.hpp"
#include "kzpp/verify.hpp"

namespace py = pybind11;
using namespace kzpp;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const Array& arr) {
  if (arr.ndim() != 2) throw DimensionError("expected a 2-D array");
  const auto rows = static_cast<std::size_t>(arr.shape(0));
  const auto cols = static_cast<std::size_t>(arr.shape(1));
  return Matrix(rows, cols, std::vector<double>(arr.data(), arr.data() + rows * cols));
}

Vector to_vector(const Array& arr) {
  if (arr.ndim() != 1) throw DimensionError("expected a 1-D array");
  return Vector(arr.data(), arr.data() + arr.shape(0));
}

Array from_matrix(const Matrix& m) {
  Array out({static_cast<py::ssize_t>(m.rows()), static_cast<py::ssize_t>(m.cols())});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

Array from_vector(std::span<const double> v) {
  Array out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

// Round-trips through the json module so dicts and JSON documents share one schema.
nlohmann::json to_json(const py::handle& obj) {
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(obj).cast<std::string>());
}

py::object from_json(const nlohmann::json& doc) {
  return py::module_::import("json").attr("loads")(doc.dump());
}

py::dict solve_problem(const LinearProblem& problem, const py::kwargs& options) {
  nlohmann::json doc = to_json(options);
  if (doc.contains("solver")) {
    doc["name"] = doc["solver"];
    doc.erase("solver");
  }
  SolverSpec spec = SolverSpec::from_json(doc);
  if (doc.contains("seed")) spec.config.seed = doc["seed"].get<std::uint64_t>();
  if (spec.config.block_size == 0) spec.config.block_size = std::min<std::size_t>(problem.a.rows(), 64);

  SolveResult result;
  {
    py::gil_scoped_release release;
    result = run_solver(problem, spec);
  }
  py::dict out;
  out["x"] = from_vector(result.x);
  out["status"] = to_string(result.trace.status);
  out["iterations"] = result.iterations;
  out["flops"] = result.trace.records.empty() ? 0 : result.trace.records.back().flops;
  out["message"] = result.trace.message;
  out["trace"] = from_json(trace_to_json(result.trace));
  return out;
}

}  // namespace

PYBIND11_MODULE(_kzpp, m) {
  m.doc() = "Randomized block Kaczmarz and coordinate descent solvers with memoization and momentum.";

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", error.ptr());
  py::register_exception<DimensionError>(m, "DimensionError", error.ptr());
  py::register_exception<FormatError>(m, "FormatError", error.ptr());
  py::register_exception<NotPositiveDefinite>(m, "NotPositiveDefinite", error.ptr());
  py::register_exception<ConvergenceError>(m, "ConvergenceError", error.ptr());

  py::class_<LinearProblem>(m, "Problem")
      .def(py::init([](const Array& a, const Array& b, const std::string& kind) {
             if (kind != "psd" && kind != "general") throw ConfigError("kind must be general or psd");
             LinearProblem p;
             p.kind = kind == "psd" ? ProblemKind::psd : ProblemKind::general;
             p.a = to_matrix(a);
             p.b = to_vector(b);
             p.validate();
             return p;
           }),
           py::arg("a"), py::arg("b"), py::arg("kind") = "general")
      .def_property_readonly("a", [](const LinearProblem& p) { return from_matrix(p.a); })
      .def_property_readonly("b", [](const LinearProblem& p) { return from_vector(p.b); })
      .def_property_readonly("kind", [](const LinearProblem& p) { return to_string(p.kind); })
      .def_property_readonly("x_star", [](const LinearProblem& p) -> py::object {
        return p.x_star ? py::object(from_vector(*p.x_star)) : py::none();
      })
      .def("save", [](const LinearProblem& p, const std::string& path) { save_problem(path, p); })
      .def_static("load", [](const std::string& path) { return load_problem(path); });

  m.def(
      "generate", [](const py::dict& recipe) { return build_problem(ProblemRecipe::from_json(to_json(recipe))); },
      py::arg("recipe"), "Build a problem from a recipe dict (same keys as benchmark manifests).");

  m.def("solve", &solve_problem, py::arg("problem"),
        "Solve with keyword options: solver, block_size, lambda, eta, tmax, tau_factor, eps, max_iters, "
        "budget, seed, rht, memo, accel, true_residual_every, inner, restart.");

  m.def("fht", [](const Array& v) { return from_vector(fht(to_vector(v))); }, py::arg("v"));
  m.def("sym_fht", [](const Array& a) { return from_matrix(sym_fht(to_matrix(a))); }, py::arg("a"));
  m.def(
      "make_low_rank",
      [](std::size_t rows, std::size_t cols, std::size_t effective_rank, double tail_strength,
         std::uint64_t seed) {
        return from_matrix(make_low_rank({rows, cols, effective_rank, tail_strength}, seed));
      },
      py::arg("rows"), py::arg("cols"), py::arg("effective_rank"), py::arg("tail_strength") = 0.01,
      py::arg("seed") = 0);
  m.def(
      "kernel_matrix",
      [](const Array& points, const std::string& kernel, double width) {
        return from_matrix(kernel_matrix(to_matrix(points), {kernel_type_from_string(kernel), width}));
      },
      py::arg("points"), py::arg("kernel") = "gaussian", py::arg("width") = 1.0);

  m.def("tail_average", [](const Array& sigma, std::size_t k) { return tail_average(to_vector(sigma), k); });
  m.def("demmel_tail_condition",
        [](const Array& sigma, std::size_t k) { return demmel_tail_condition(to_vector(sigma), k); });
  m.def("effective_dimension",
        [](const Array& sigma, double lambda) { return effective_dimension(to_vector(sigma), lambda); });
  m.def("dpp_expected_size", [](const Array& l) { return dpp_expected_size(to_matrix(l)); });

  m.def("model_cg_iteration", &model_cg_iteration, py::arg("n"));
  m.def("model_gmres_total", &model_gmres_total, py::arg("n"), py::arg("iterations"));
  m.def("model_cholesky", &model_cholesky, py::arg("s"));

  m.def("verify", [](const std::string& suite) { return from_json(run_verify_suite(suite).to_json()); },
        py::arg("suite") = "all");
}
