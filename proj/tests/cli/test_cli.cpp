// Runs the kzpp executable end to end and checks exit codes and outputs.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "kzpp/oracles.hpp"
#include "kzpp/problems.hpp"

using namespace kzpp;
namespace fs = std::filesystem;

namespace {

const fs::path& workdir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "kzpp_cli_tests";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run kzpp_cli(const std::string& args) {
  const fs::path out = workdir() / "stdout.txt";
  const fs::path err = workdir() / "stderr.txt";
  const std::string cmd = "cd '" + workdir().string() + "' && '" KZPP_CLI_PATH "' " + args + " > '" +
                          out.string() + "' 2> '" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

nlohmann::json json_of(const Run& run) { return nlohmann::json::parse(run.out); }

void write_identity(const std::string& name, std::size_t n) {
  LinearProblem p;
  p.a = Matrix::identity(n);
  p.b = Vector(n);
  for (std::size_t i = 0; i < n; ++i) p.b[i] = std::cos(static_cast<double>(i));
  save_problem(workdir() / name, p);
}

}  // namespace

TEST_CASE("generate: low-rank problem reloads with the prescribed spectrum") {
  const Run run = kzpp_cli("generate --kind lowrank --m 512 --n 128 --effective-rank 16 --seed 4 --out lr.kzp");
  REQUIRE(run.code == 0);
  const auto summary = json_of(run);
  CHECK(summary["rows"] == 512);
  CHECK(summary["kappa_bar"].contains("64"));
  const LinearProblem p = load_problem(workdir() / "lr.kzp");
  const Vector sigma = svd(p.a).sigma;
  const Vector profile = low_rank_profile(128, 16, 0.01);
  for (std::size_t i = 0; i < 128; ++i) CHECK(std::abs(sigma[i] - profile[i]) <= 1e-9);
  CHECK(summary["kappa_bar"]["16"].get<double>() == doctest::Approx(demmel_tail_condition(sigma, 16)));
}

TEST_CASE("generate: kernel problem from CSV") {
  std::ofstream(workdir() / "points.csv") << "x,y\n0,0\n1,0\n0,1\n2,2\n3,1\n";
  const Run run = kzpp_cli("generate --kind kernel --csv points.csv --gamma 0.1 --phi 0.001 --out k.kzp");
  REQUIRE(run.code == 0);
  const LinearProblem p = load_problem(workdir() / "k.kzp");
  CHECK(p.kind == ProblemKind::psd);
  CHECK(p.a.rows() == 5);
  CHECK(is_symmetric(p.a));
  CHECK(symmetric_eigen(p.a).values.front() >= 0.001 - 1e-12);
}

TEST_CASE("generate: usage errors") {
  CHECK(kzpp_cli("generate --kind lowrank --m 64 --n 16").code == 2);
  const Run conflict = kzpp_cli("generate --kind lowrank --gamma 0.1 --out x.kzp");
  CHECK(conflict.code == 2);
  CHECK(conflict.err.find("--gamma") != std::string::npos);
  CHECK(kzpp_cli("generate --kind kernel --effective-rank 4 --out x.kzp").code == 2);
  CHECK(kzpp_cli("").code == 2);
}

TEST_CASE("solve: identity problem") {
  write_identity("eye.kzp", 16);
  const Run gmres = kzpp_cli("solve --problem eye.kzp --solver gmres --eps 1e-8");
  REQUIRE(gmres.code == 0);
  CHECK(json_of(gmres)["iterations"] == 1);

  // The windowed stopping rule needs one pair of windows, i.e. two iterations.
  const Run kaczmarz = kzpp_cli("solve --problem eye.kzp --eps 1e-8 --lambda 0 --no-accel");
  REQUIRE(kaczmarz.code == 0);
  CHECK(json_of(kaczmarz)["iterations"] == 2);
  CHECK(json_of(kaczmarz)["res_true"].get<double>() <= 1e-12);
}

TEST_CASE("solve: cdpp on a general problem is a usage error") {
  write_identity("eye8.kzp", 8);
  const Run run = kzpp_cli("solve --problem eye8.kzp --solver cdpp");
  CHECK(run.code == 2);
  CHECK(run.err.find("psd") != std::string::npos);
}

TEST_CASE("solve: budget exhaustion exits with 1") {
  REQUIRE(kzpp_cli("generate --kind lowrank --m 256 --n 64 --seed 5 --out small.kzp").code == 0);
  const Run run = kzpp_cli("solve --problem small.kzp --max-iters 2");
  CHECK(run.code == 1);
  CHECK(json_of(run)["status"] == "budget");
}

TEST_CASE("solve: plain block coordinate descent variant") {
  REQUIRE(kzpp_cli("generate --kind kernel --n 128 --gamma 0.1 --seed 6 --out kern.kzp").code == 0);
  const Run run = kzpp_cli(
      "solve --problem kern.kzp --solver cdpp --block-size 32 --eps 1e-3 --max-iters 40000 --no-memo "
      "--no-accel --trace plain.json");
  REQUIRE(run.code == 0);
  const auto trace = nlohmann::json::parse(slurp(workdir() / "plain.json"));
  CHECK(trace["config"]["memoization"] == false);
  CHECK(trace["config"]["acceleration"] == false);
  CHECK(trace["config"]["eta"] == 0.0);
  CHECK(trace["config"]["fresh_blocks"] == json_of(run)["iterations"]);
  for (const auto& rec : trace["records"]) CHECK(rec["rho"] == 0.0);
}

TEST_CASE("bench: table shape, sentinel and determinism") {
  std::ofstream(workdir() / "manifest.json") << R"({
    "output_dir": "bench_out",
    "thresholds": [1e-4],
    "entries": [
      {"problem": {"kind": "kernel", "n": 128, "gamma": 0.1, "seed": 7},
       "solver": {"name": "cdpp", "block_size": 16, "eps": 1e-4, "max_iters": 20000}, "seeds": [0, 1, 2]},
      {"problem": {"kind": "kernel", "n": 128, "gamma": 0.1, "seed": 7},
       "solver": {"name": "gmres", "eps": 1e-4, "max_iters": 3}, "seeds": [0]}
    ]})";
  const Run first = kzpp_cli("bench manifest.json");
  REQUIRE(first.code == 0);
  std::istringstream lines(first.out);
  std::string header, cd_row, gmres_row, extra;
  std::getline(lines, header);
  std::getline(lines, cd_row);
  std::getline(lines, gmres_row);
  CHECK_FALSE(std::getline(lines, extra));
  CHECK(header == "dataset,kernel,width,solver,threshold,flops,note");
  CHECK(cd_row.rfind("synthetic_d8,gaussian,0.1,cdpp,1e-04,", 0) == 0);
  CHECK(gmres_row.find(",∞,") != std::string::npos);
  CHECK(gmres_row.find("budget 3 iterations") != std::string::npos);

  const Run second = kzpp_cli("bench manifest.json");
  CHECK(second.out == first.out);
  CHECK(slurp(workdir() / "bench_out" / "results.csv") == first.out);
}

TEST_CASE("bench: invalid manifests") {
  std::ofstream(workdir() / "ascending.json")
      << R"({"thresholds": [1e-8, 1e-4], "entries": [{"problem": {}, "solver": {"name": "cg"}}]})";
  CHECK(kzpp_cli("bench ascending.json").code == 2);
  std::ofstream(workdir() / "empty.json") << R"({"thresholds": [1e-4], "entries": []})";
  CHECK(kzpp_cli("bench empty.json").code == 2);
  CHECK(kzpp_cli("bench missing.json").code == 2);
}

TEST_CASE("verify suites") {
  const Run transforms = kzpp_cli("verify transforms");
  REQUIRE(transforms.code == 0);
  const auto report = json_of(transforms);
  CHECK(report["suite"] == "transforms");
  bool saw_equivalence = false;
  bool saw_cost = false;
  for (const auto& c : report["checks"]) {
    saw_equivalence = saw_equivalence || c["name"] == "symfht_matches_dense";
    saw_cost = saw_cost || c["name"] == "symfht_ops_over_bound";
  }
  CHECK(saw_equivalence);
  CHECK(saw_cost);

  const Run dpp = kzpp_cli("verify dpp");
  CHECK(dpp.code == 0);
  CHECK(json_of(dpp)["checks"].size() == 3);
  CHECK(kzpp_cli("verify all").code == 0);
  CHECK(kzpp_cli("verify nonsense").code == 2);
}
