#include "kzpp/transforms.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "kzpp/errors.hpp"
#include "kzpp/rng.hpp"

namespace kzpp {

namespace {

std::int64_t flops(std::size_t v) { return static_cast<std::int64_t>(v); }

void require_power_of_two(std::size_t n, const char* what) {
  if (!is_power_of_two(n)) throw DimensionError(what);
}

/// Butterflies over whole rows: row-major H·M without strided access.
void fht_rows_combined(Matrix& m) {
  const std::size_t n = m.rows();
  const std::size_t w = m.cols();
  for (std::size_t h = 1; h < n; h *= 2) {
    for (std::size_t base = 0; base < n; base += 2 * h) {
      for (std::size_t i = base; i < base + h; ++i) {
        auto top = m.row(i);
        auto bottom = m.row(i + h);
        for (std::size_t j = 0; j < w; ++j) {
          const double a = top[j];
          const double b = bottom[j];
          top[j] = a + b;
          bottom[j] = a - b;
        }
      }
    }
  }
}

/// M·H: independent transform of each row.
void fht_each_row(Matrix& m) {
  for (std::size_t i = 0; i < m.rows(); ++i) fht_inplace(m.row(i));
}

Matrix block(const Matrix& a, std::size_t r0, std::size_t c0, std::size_t n) {
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto src = a.row(r0 + i).subspan(c0, n);
    std::ranges::copy(src, out.row(i).begin());
  }
  return out;
}

Matrix sym_fht_recursive(const Matrix& a, std::uint64_t& ops) {
  const std::size_t n = a.rows();
  if (n == 1) return a;
  const std::size_t h = n / 2;
  const Matrix b11 = sym_fht_recursive(block(a, 0, 0, h), ops);
  const Matrix b22 = sym_fht_recursive(block(a, h, h, h), ops);
  Matrix b12 = block(a, 0, h, h);
  fht_rows_combined(b12);
  fht_each_row(b12);
  ops += 2 * h * h * log2_exact(h);

  Matrix out(n, n);
  for (std::size_t i = 0; i < h; ++i) {
    for (std::size_t j = 0; j < h; ++j) {
      const double c11 = b11(i, j) + b12(j, i);
      const double c12 = b11(i, j) - b12(i, j);
      const double c21 = b12(i, j) + b22(i, j);
      const double c22 = b12(j, i) - b22(i, j);
      out(i, j) = c11 + c21;
      out(i, h + j) = c12 + c22;
      out(h + i, h + j) = c12 - c22;
    }
  }
  for (std::size_t i = 0; i < h; ++i) {
    for (std::size_t j = 0; j < h; ++j) out(h + j, i) = out(i, h + j);
  }
  ops += 4 * h * h + 3 * h * h;
  return out;
}

}  // namespace

bool is_power_of_two(std::size_t n) { return std::has_single_bit(n); }

std::size_t next_power_of_two(std::size_t n) { return n <= 1 ? 1 : std::bit_ceil(n); }

std::size_t log2_exact(std::size_t n) {
  require_power_of_two(n, "log2_exact: not a power of two");
  return static_cast<std::size_t>(std::countr_zero(n));
}

void fht_inplace(std::span<double> v, Meter meter) {
  const std::size_t n = v.size();
  require_power_of_two(n, "fht: length must be a power of two");
  for (std::size_t h = 1; h < n; h *= 2) {
    for (std::size_t base = 0; base < n; base += 2 * h) {
      for (std::size_t i = base; i < base + h; ++i) {
        const double a = v[i];
        const double b = v[i + h];
        v[i] = a + b;
        v[i + h] = a - b;
      }
    }
  }
  meter.charge(flops(n * log2_exact(n)));
}

Vector fht(std::span<const double> v, Meter meter) {
  Vector out(v.begin(), v.end());
  fht_inplace(out, meter);
  return out;
}

Matrix fht_matrix(const Matrix& m, Meter meter) {
  require_power_of_two(m.rows(), "fht_matrix: row count must be a power of two");
  Matrix out = m;
  fht_rows_combined(out);
  meter.charge(flops(m.cols() * m.rows() * log2_exact(m.rows())));
  return out;
}

Matrix sym_fht(const Matrix& a, Meter meter) {
  if (!a.square()) throw DimensionError("sym_fht: matrix not square");
  require_power_of_two(a.rows(), "sym_fht: dimension must be a power of two");
  if (!is_symmetric(a)) throw DimensionError("sym_fht: matrix not symmetric");
  std::uint64_t ops = 0;
  Matrix out = sym_fht_recursive(a, ops);
  meter.charge(static_cast<std::int64_t>(ops));
  return out;
}

SignDiagonal::SignDiagonal(std::size_t n, std::uint64_t seed) : signs_(n) {
  require_power_of_two(n, "SignDiagonal: size must be a power of two");
  Rng rng(derive_seed(seed, 0x5167));
  for (double& s : signs_) s = rng.sign();
  scale_ = 1.0 / std::sqrt(static_cast<double>(n));
}

SignDiagonal::SignDiagonal(std::vector<double> signs) : signs_(std::move(signs)) {
  require_power_of_two(signs_.size(), "SignDiagonal: size must be a power of two");
  for (double s : signs_) {
    if (s != 1.0 && s != -1.0) throw DimensionError("SignDiagonal: entries must be +1 or -1");
  }
  scale_ = 1.0 / std::sqrt(static_cast<double>(signs_.size()));
}

RhtOperator::RhtOperator(std::size_t dim, std::uint64_t seed)
    : dim_(dim), signs_(next_power_of_two(dim), seed) {
  if (dim == 0) throw DimensionError("RhtOperator: empty dimension");
}

RhtOperator::RhtOperator(std::size_t dim, SignDiagonal signs) : dim_(dim), signs_(std::move(signs)) {
  if (dim == 0 || signs_.size() != next_power_of_two(dim)) {
    throw DimensionError("RhtOperator: sign pattern does not match padded dimension");
  }
}

Matrix RhtOperator::apply(const Matrix& m, Meter meter) const {
  if (m.rows() != dim_ && m.rows() != padded_dim()) {
    throw DimensionError("rht_apply: row count does not match operator");
  }
  Matrix out(padded_dim(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double f = signs_.sign(i) * signs_.scale();
    const auto src = m.row(i);
    auto dst = out.row(i);
    for (std::size_t j = 0; j < m.cols(); ++j) dst[j] = f * src[j];
  }
  return fht_matrix(out, meter);
}

Vector RhtOperator::apply(std::span<const double> v, Meter meter) const {
  if (v.size() != dim_ && v.size() != padded_dim()) {
    throw DimensionError("rht_apply: length does not match operator");
  }
  Vector out(padded_dim(), 0.0);
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = signs_.sign(i) * signs_.scale() * v[i];
  fht_inplace(out, meter);
  return out;
}

Matrix RhtOperator::apply_transpose(const Matrix& m, Meter meter) const {
  if (m.rows() != padded_dim()) throw DimensionError("rht_apply_transpose: expects padded rows");
  Matrix out = fht_matrix(m, meter);
  for (std::size_t i = 0; i < out.rows(); ++i) {
    const double f = signs_.sign(i) * signs_.scale();
    for (double& v : out.row(i)) v *= f;
  }
  return out;
}

Vector RhtOperator::apply_transpose(std::span<const double> v, Meter meter) const {
  if (v.size() != padded_dim()) throw DimensionError("rht_apply_transpose: expects padded length");
  Vector out = fht(v, meter);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= signs_.sign(i) * signs_.scale();
  return out;
}

Matrix RhtOperator::apply_two_sided(const Matrix& a, Meter meter) const {
  const std::size_t n = padded_dim();
  if (a.rows() != n || a.cols() != n) throw DimensionError("rht_apply_two_sided: expects padded square input");
  if (!is_symmetric(a)) throw DimensionError("rht_apply_two_sided: matrix not symmetric");
  Matrix conj(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) conj(i, j) = signs_.sign(i) * signs_.sign(j) * a(i, j);
  }
  Matrix out = sym_fht(conj, meter);
  const double inv = 1.0 / static_cast<double>(n);
  for (double& v : out.data()) v *= inv;
  return out;
}

SrhtSketch::SrhtSketch(std::size_t dim, std::size_t width, std::uint64_t seed)
    : rht_(dim, derive_seed(seed, 1)) {
  if (width == 0 || width > rht_.padded_dim()) {
    throw DimensionError("srht_sketch: width must lie in [1, padded n]");
  }
  Rng rng(derive_seed(seed, 2));
  kept_ = rng.subset(rht_.padded_dim(), width);
}

SrhtSketch::SrhtSketch(RhtOperator rht, std::vector<std::size_t> kept)
    : rht_(std::move(rht)), kept_(std::move(kept)) {
  if (kept_.empty() || kept_.size() > rht_.padded_dim()) {
    throw DimensionError("srht_sketch: width must lie in [1, padded n]");
  }
  for (std::size_t k : kept_) {
    if (k >= rht_.padded_dim()) throw DimensionError("srht_sketch: kept index out of range");
  }
}

Matrix SrhtSketch::apply(const Matrix& block, Meter meter) const {
  if (block.cols() != rht_.dim() && block.cols() != rht_.padded_dim()) {
    throw DimensionError("srht_sketch: column count does not match sketch");
  }
  const std::size_t n2 = rht_.padded_dim();
  const double scale = std::sqrt(static_cast<double>(n2) / static_cast<double>(width()));
  Matrix out(block.rows(), width());
  Vector work(n2);
  for (std::size_t i = 0; i < block.rows(); ++i) {
    std::ranges::fill(work, 0.0);
    const auto src = block.row(i);
    for (std::size_t j = 0; j < src.size(); ++j) work[j] = rht_.signs().sign(j) * rht_.signs().scale() * src[j];
    fht_inplace(work);
    auto dst = out.row(i);
    for (std::size_t k = 0; k < width(); ++k) dst[k] = scale * work[kept_[k]];
  }
  meter.charge(flops(block.rows() * n2 * log2_exact(n2) + block.rows() * width()));
  return out;
}

Matrix srht_sketch(const Matrix& block, std::size_t width, std::uint64_t seed, Meter meter) {
  return SrhtSketch(block.cols(), width, seed).apply(block, meter);
}

}  // namespace kzpp
