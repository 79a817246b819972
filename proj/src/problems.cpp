#include "kzpp/problems.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "kzpp/errors.hpp"
#include "kzpp/rng.hpp"

namespace kzpp {

std::string to_string(ProblemKind kind) { return kind == ProblemKind::psd ? "psd" : "general"; }

std::string to_string(KernelType kernel) {
  return kernel == KernelType::gaussian ? "gaussian" : "laplacian";
}

KernelType kernel_type_from_string(const std::string& text) {
  if (text == "gaussian") return KernelType::gaussian;
  if (text == "laplacian") return KernelType::laplacian;
  throw ConfigError("unknown kernel '" + text + "' (expected gaussian or laplacian)");
}

double relative_residual(const Matrix& a, std::span<const double> x, std::span<const double> b) {
  const Vector ax = matvec(a, x);
  const double nb = norm2(b);
  const double nr = norm2(subtract(ax, b));
  return nb == 0.0 ? nr : nr / nb;
}

void LinearProblem::validate() const {
  if (a.rows() != b.size()) throw DimensionError("problem: b length does not match A rows");
  for (double v : a.data()) {
    if (!std::isfinite(v)) throw DimensionError("problem: A has non-finite entries");
  }
  for (double v : b) {
    if (!std::isfinite(v)) throw DimensionError("problem: b has non-finite entries");
  }
  if (kind == ProblemKind::psd && !is_symmetric(a)) {
    throw DimensionError("problem: psd kind requires a symmetric matrix");
  }
  if (x_star) {
    if (x_star->size() != a.cols()) throw DimensionError("problem: x_star length does not match A");
    if (relative_residual(a, *x_star, b) > 1e-8) {
      throw DimensionError("problem: stored solution does not satisfy the system");
    }
  }
}

void SpectrumSpec::validate() const {
  if (rows == 0 || cols == 0) throw ConfigError("low-rank: dimensions must be positive");
  if (effective_rank == 0 || effective_rank >= std::min(rows, cols)) {
    throw ConfigError("low-rank: effective rank must lie in [1, min(m, n))");
  }
  if (!(tail_strength > 0.0 && tail_strength < 1.0)) {
    throw ConfigError("low-rank: tail strength must lie in (0, 1)");
  }
}

Vector low_rank_profile(std::size_t count, std::size_t effective_rank, double tail_strength) {
  Vector sigma(count);
  const double er = static_cast<double>(effective_rank);
  for (std::size_t i = 0; i < count; ++i) {
    const double u = static_cast<double>(i) / er;
    sigma[i] = (1.0 - tail_strength) * std::exp(-u * u) + tail_strength * std::exp(-0.1 * u);
  }
  return sigma;
}

Matrix make_low_rank(const SpectrumSpec& spec, std::uint64_t seed) {
  spec.validate();
  const std::size_t k = std::min(spec.rows, spec.cols);
  const Matrix u = random_orthonormal(spec.rows, k, derive_seed(seed, 11));
  const Matrix v = random_orthonormal(spec.cols, k, derive_seed(seed, 12));
  const Vector sigma = low_rank_profile(k, spec.effective_rank, spec.tail_strength);
  Matrix us = u;
  for (std::size_t i = 0; i < us.rows(); ++i) {
    for (std::size_t j = 0; j < k; ++j) us(i, j) *= sigma[j];
  }
  return gemm(us, v, Op::none, Op::transpose);
}

Matrix kernel_matrix(const Matrix& points, const KernelSpec& spec) {
  if (points.rows() == 0) throw DimensionError("kernel_matrix: no points");
  if (!(spec.width > 0.0)) throw ConfigError("kernel_matrix: width must be positive");
  const std::size_t n = points.rows();
  Matrix k(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    k(i, i) = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      double d2 = 0.0;
      const auto pi = points.row(i);
      const auto pj = points.row(j);
      for (std::size_t c = 0; c < pi.size(); ++c) d2 += (pi[c] - pj[c]) * (pi[c] - pj[c]);
      const double arg = spec.kernel == KernelType::gaussian ? d2 : std::sqrt(d2);
      const double v = std::exp(-spec.width * arg);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

Matrix synthetic_points(std::size_t count, std::size_t dims, std::uint64_t seed) {
  constexpr std::size_t kClusters = 6;
  Rng rng(derive_seed(seed, 21));
  Matrix centers(kClusters, dims);
  Vector spread(kClusters);
  for (std::size_t c = 0; c < kClusters; ++c) {
    for (double& v : centers.row(c)) v = 4.0 * rng.normal();
    spread[c] = 0.5 + 1.5 * rng.uniform();
  }
  Matrix pts(count, dims);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t c = rng.below(kClusters);
    for (std::size_t d = 0; d < dims; ++d) pts(i, d) = centers(c, d) + spread[c] * rng.normal();
  }
  return standardize_columns(std::move(pts));
}

Matrix standardize_columns(Matrix points) {
  const std::size_t rows = points.rows();
  if (rows == 0) return points;
  for (std::size_t c = 0; c < points.cols(); ++c) {
    double mean = 0.0;
    for (std::size_t i = 0; i < rows; ++i) mean += points(i, c);
    mean /= static_cast<double>(rows);
    double var = 0.0;
    for (std::size_t i = 0; i < rows; ++i) var += (points(i, c) - mean) * (points(i, c) - mean);
    const double sd = std::sqrt(var / static_cast<double>(rows));
    // Constant columns carry no distance information; center them only.
    const double inv = sd > 0.0 ? 1.0 / sd : 1.0;
    for (std::size_t i = 0; i < rows; ++i) points(i, c) = (points(i, c) - mean) * inv;
  }
  return points;
}

namespace {

Vector standard_normal(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Vector v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

}  // namespace

LinearProblem psd_problem(const Matrix& kernel, double shift, std::uint64_t rhs_seed) {
  if (!is_symmetric(kernel)) throw DimensionError("psd_problem: kernel not symmetric");
  LinearProblem p;
  p.kind = ProblemKind::psd;
  p.a = kernel;
  add_to_diagonal(p.a, shift);
  p.shift = shift;
  p.b = standard_normal(kernel.rows(), derive_seed(rhs_seed, 31));
  p.metadata.seed = rhs_seed;
  return p;
}

LinearProblem consistent_problem(Matrix a, std::uint64_t rhs_seed) {
  LinearProblem p;
  p.kind = ProblemKind::general;
  const Vector x = standard_normal(a.cols(), derive_seed(rhs_seed, 32));
  p.b = matvec(a, x);
  p.a = std::move(a);
  p.x_star = direct_solve(p);
  p.metadata.seed = rhs_seed;
  return p;
}

LinearProblem gaussian_rhs_problem(Matrix a, std::uint64_t rhs_seed) {
  LinearProblem p;
  p.kind = ProblemKind::general;
  p.b = standard_normal(a.rows(), derive_seed(rhs_seed, 33));
  p.a = std::move(a);
  p.metadata.seed = rhs_seed;
  return p;
}

Vector direct_solve(const LinearProblem& problem) {
  if (problem.kind == ProblemKind::psd) {
    try {
      return cholesky_solve(cholesky(problem.a, Jitter::none), problem.b);
    } catch (const NotPositiveDefinite&) {
      // fall through to the pseudo-inverse
    }
  }
  return matvec(pinv(problem.a), problem.b);
}

Matrix load_csv(const std::filesystem::path& path, std::optional<std::size_t> row_limit) {
  std::ifstream in(path);
  if (!in) throw FormatError("csv: cannot open " + path.string());
  std::vector<double> values;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::size_t line_no = 0;
  bool first = true;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (row_limit && rows >= *row_limit) break;

    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.emplace_back();

    std::vector<double> parsed(cells.size());
    std::optional<std::size_t> bad_col;
    std::size_t numeric = 0;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const auto b = cells[c].find_first_not_of(" \t");
      const auto e = cells[c].find_last_not_of(" \t");
      const std::string t = b == std::string::npos ? "" : cells[c].substr(b, e - b + 1);
      double v = 0.0;
      const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
      if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size() || !std::isfinite(v)) {
        if (!bad_col) bad_col = c;
      } else {
        ++numeric;
      }
      parsed[c] = v;
    }
    if (first && numeric == 0) {
      first = false;
      continue;  // header
    }
    first = false;
    if (bad_col) {
      throw FormatError("csv: parse error at row " + std::to_string(line_no) + " col " +
                        std::to_string(*bad_col + 1));
    }
    if (rows == 0) {
      cols = cells.size();
    } else if (cells.size() != cols) {
      throw FormatError("csv: row " + std::to_string(line_no) + " has " +
                        std::to_string(cells.size()) + " columns, expected " + std::to_string(cols));
    }
    values.insert(values.end(), parsed.begin(), parsed.end());
    ++rows;
  }
  if (rows == 0) throw FormatError("csv: no data rows in " + path.string());
  return Matrix(rows, cols, std::move(values));
}

namespace {

constexpr std::array<char, 4> kMagic{'K', 'Z', 'P', 'P'};

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
}

class Writer {
 public:
  explicit Writer(std::ofstream& out) : out_(out) {}
  template <typename T>
  void put(T v) {
    const T le = to_little(v);
    out_.write(reinterpret_cast<const char*>(&le), sizeof le);
  }
  void put_doubles(std::span<const double> xs) {
    for (double x : xs) put(x);
  }

 private:
  std::ofstream& out_;
};

class Reader {
 public:
  explicit Reader(std::ifstream& in) : in_(in) {}
  template <typename T>
  T get() {
    T v{};
    in_.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in_) throw FormatError("problem file: truncated");
    return to_little(v);
  }
  std::vector<double> get_doubles(std::uint64_t count) {
    std::vector<double> xs(count);
    for (double& x : xs) x = get<double>();
    return xs;
  }

 private:
  std::ifstream& in_;
};

}  // namespace

void save_problem(const std::filesystem::path& path, const LinearProblem& problem) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("problem file: cannot open " + path.string() + " for writing");
  out.write(kMagic.data(), kMagic.size());
  Writer w(out);
  w.put<std::uint32_t>(kProblemFormatVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(problem.kind));
  w.put<std::uint64_t>(problem.a.rows());
  w.put<std::uint64_t>(problem.a.cols());
  w.put<double>(problem.shift);
  w.put_doubles(problem.a.data());
  w.put_doubles(problem.b);
  w.put<std::uint8_t>(problem.x_star ? 1 : 0);
  if (problem.x_star) w.put_doubles(*problem.x_star);
  const std::string meta = nlohmann::json{{"generator", problem.metadata.generator},
                                          {"params", problem.metadata.params},
                                          {"seed", problem.metadata.seed}}
                               .dump();
  w.put<std::uint64_t>(meta.size());
  out.write(meta.data(), static_cast<std::streamsize>(meta.size()));
  if (!out) throw Error("problem file: write failed for " + path.string());
}

LinearProblem load_problem(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("problem file: cannot open " + path.string());
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw FormatError("problem file: bad magic in " + path.string());
  Reader r(in);
  const auto version = r.get<std::uint32_t>();
  if (version != kProblemFormatVersion) {
    throw FormatError("problem file: version " + std::to_string(version) +
                      " not supported (expected " + std::to_string(kProblemFormatVersion) + ")");
  }
  const auto kind = r.get<std::uint32_t>();
  if (kind > 1) throw FormatError("problem file: unknown kind " + std::to_string(kind));
  LinearProblem p;
  p.kind = static_cast<ProblemKind>(kind);
  const auto rows = r.get<std::uint64_t>();
  const auto cols = r.get<std::uint64_t>();
  constexpr std::uint64_t kMaxEntries = std::uint64_t{1} << 32;
  if (rows == 0 || cols == 0 || rows > kMaxEntries / cols) {
    throw FormatError("problem file: implausible dimensions");
  }
  p.shift = r.get<double>();
  p.a = Matrix(rows, cols, r.get_doubles(rows * cols));
  p.b = r.get_doubles(rows);
  const auto has_x = r.get<std::uint8_t>();
  if (has_x > 1) throw FormatError("problem file: bad solution flag");
  if (has_x == 1) p.x_star = r.get_doubles(cols);
  const auto meta_len = r.get<std::uint64_t>();
  if (meta_len > (std::uint64_t{1} << 26)) throw FormatError("problem file: metadata too large");
  std::string meta(meta_len, '\0');
  in.read(meta.data(), static_cast<std::streamsize>(meta_len));
  if (!in) throw FormatError("problem file: truncated metadata");
  try {
    const auto doc = nlohmann::json::parse(meta);
    p.metadata.generator = doc.at("generator").get<std::string>();
    p.metadata.params = doc.at("params");
    p.metadata.seed = doc.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("problem file: bad metadata: ") + e.what());
  }
  return p;
}

}  // namespace kzpp
