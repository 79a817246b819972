#include "kzpp/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "kzpp/errors.hpp"
#include "kzpp/rng.hpp"

namespace kzpp {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw DimensionError(what);
}

std::int64_t as_flops(std::size_t v) { return static_cast<std::int64_t>(v); }

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  require(data_.size() == rows * cols, "Matrix: data length does not match shape");
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() == 0 ? 0 : rows.begin()->size()) {
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    require(r.size() == cols_, "Matrix: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> diag) {
  Matrix m(diag.size(), diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  return m;
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  }
  return t;
}

Vector Matrix::column(std::size_t j) const {
  Vector c(rows_);
  for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
  return c;
}

Matrix gemm(const Matrix& a, const Matrix& b, Op op_a, Op op_b, Meter meter) {
  const Matrix& lhs_src = a;
  Matrix lhs_t;
  Matrix rhs_t;
  const Matrix* lhs = &lhs_src;
  const Matrix* rhs = &b;
  if (op_a == Op::transpose) {
    lhs_t = a.transpose();
    lhs = &lhs_t;
  }
  if (op_b == Op::transpose) {
    rhs_t = b.transpose();
    rhs = &rhs_t;
  }
  require(lhs->cols() == rhs->rows(), "gemm: inner dimensions disagree");
  const std::size_t m = lhs->rows();
  const std::size_t k = lhs->cols();
  const std::size_t n = rhs->cols();
  Matrix c(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    auto out = c.row(i);
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = (*lhs)(i, p);
      const auto brow = rhs->row(p);
      for (std::size_t j = 0; j < n; ++j) out[j] += aip * brow[j];
    }
  }
  meter.charge(as_flops(2 * m * k * n));
  return c;
}

Vector matvec(const Matrix& a, std::span<const double> x, Op op, Meter meter) {
  if (op == Op::none) {
    require(a.cols() == x.size(), "matvec: dimension mismatch");
    Vector y(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) y[i] = dot(a.row(i), x);
    meter.charge(as_flops(2 * a.rows() * a.cols()));
    return y;
  }
  require(a.rows() == x.size(), "matvec: dimension mismatch");
  Vector y(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) axpy(x[i], a.row(i), y);
  meter.charge(as_flops(2 * a.rows() * a.cols()));
  return y;
}

Matrix add(const Matrix& a, const Matrix& b, double scale_b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "add: shape mismatch");
  Matrix c = a;
  auto out = c.data();
  const auto in = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += scale_b * in[i];
  return c;
}

Matrix scaled(const Matrix& a, double factor) {
  Matrix c = a;
  for (double& v : c.data()) v *= factor;
  return c;
}

void add_to_diagonal(Matrix& a, double shift) {
  require(a.square(), "add_to_diagonal: matrix not square");
  for (std::size_t i = 0; i < a.rows(); ++i) a(i, i) += shift;
}

double trace(const Matrix& a) {
  require(a.square(), "trace: matrix not square");
  double t = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) t += a(i, i);
  return t;
}

double frobenius_norm(const Matrix& a) { return norm2(a.data()); }

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "max_abs_diff: shape mismatch");
  return max_abs_diff(a.data(), b.data());
}

bool is_symmetric(const Matrix& a, double rel_tol) {
  if (!a.square()) return false;
  double scale = 0.0;
  for (double v : a.data()) scale = std::max(scale, std::abs(v));
  const double tol = rel_tol * std::max(scale, 1e-300);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = i + 1; j < a.cols(); ++j) {
      if (std::abs(a(i, j) - a(j, i)) > tol) return false;
    }
  }
  return true;
}

Matrix gather_rows(const Matrix& a, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), a.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i] < a.rows(), "gather_rows: index out of range");
    std::ranges::copy(a.row(rows[i]), out.row(i).begin());
  }
  return out;
}

Matrix principal_submatrix(const Matrix& a, std::span<const std::size_t> idx) {
  require(a.square(), "principal_submatrix: matrix not square");
  Matrix out(idx.size(), idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    require(idx[i] < a.rows(), "principal_submatrix: index out of range");
    for (std::size_t j = 0; j < idx.size(); ++j) out(i, j) = a(idx[i], idx[j]);
  }
  return out;
}

double dot(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size(), "dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

double norm2(std::span<const double> x) {
  double scale = 0.0;
  for (double v : x) scale = std::max(scale, std::abs(v));
  if (scale == 0.0 || !std::isfinite(scale)) return scale;
  double s = 0.0;
  for (double v : x) s += (v / scale) * (v / scale);
  return scale * std::sqrt(s);
}

double max_abs_diff(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size(), "max_abs_diff: length mismatch");
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) d = std::max(d, std::abs(x[i] - y[i]));
  return d;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  require(x.size() == y.size(), "axpy: length mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

Vector subtract(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size(), "subtract: length mismatch");
  Vector d(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) d[i] = x[i] - y[i];
  return d;
}

namespace {

bool try_cholesky(const Matrix& m, double shift, Matrix& r) {
  const std::size_t n = m.rows();
  r = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) r(i, j) = m(i, j);
    r(i, i) += shift;
  }
  for (std::size_t k = 0; k < n; ++k) {
    const double pivot = r(k, k);
    if (!(pivot > 0.0) || !std::isfinite(pivot)) return false;
    const double d = std::sqrt(pivot);
    r(k, k) = d;
    auto rk = r.row(k);
    for (std::size_t j = k + 1; j < n; ++j) rk[j] /= d;
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = rk[i];
      if (f == 0.0) continue;
      auto ri = r.row(i);
      for (std::size_t j = i; j < n; ++j) ri[j] -= f * rk[j];
    }
  }
  return true;
}

}  // namespace

CholeskyFactor cholesky(const Matrix& m, Jitter policy, Meter meter) {
  require(m.square(), "cholesky: matrix not square");
  if (!is_symmetric(m)) throw DimensionError("cholesky: matrix not symmetric");
  const std::size_t n = m.rows();
  meter.charge(static_cast<std::int64_t>(model_cholesky(n)));
  const double base = n == 0 ? 0.0 : std::abs(trace(m)) / static_cast<double>(n);
  std::vector<double> shifts{0.0};
  if (policy == Jitter::escalate) {
    shifts.push_back(1e-12 * base);
    shifts.push_back(1e-8 * base);
  }
  CholeskyFactor f;
  for (double shift : shifts) {
    if (try_cholesky(m, shift, f.upper)) {
      f.jitter = shift;
      return f;
    }
  }
  throw NotPositiveDefinite("cholesky: matrix not positive definite after jitter escalation");
}

Vector triangular_solve(const CholeskyFactor& r, std::span<const double> y, Triangle side,
                        Meter meter) {
  const std::size_t n = r.dim();
  require(y.size() == n, "triangular_solve: length mismatch");
  const Matrix& u = r.upper;
  for (std::size_t i = 0; i < n; ++i) {
    if (u(i, i) == 0.0) throw NotPositiveDefinite("triangular_solve: zero diagonal");
  }
  Vector x(y.begin(), y.end());
  if (side == Triangle::upper) {
    for (std::size_t ii = n; ii-- > 0;) {
      const auto row = u.row(ii);
      double s = x[ii];
      for (std::size_t j = ii + 1; j < n; ++j) s -= row[j] * x[j];
      x[ii] = s / row[ii];
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = u.row(i);
      x[i] /= row[i];
      const double xi = x[i];
      for (std::size_t j = i + 1; j < n; ++j) x[j] -= row[j] * xi;
    }
  }
  meter.charge(as_flops(n * n));
  return x;
}

Vector cholesky_solve(const CholeskyFactor& r, std::span<const double> y, Meter meter) {
  const Vector z = triangular_solve(r, y, Triangle::upper_transposed, meter);
  return triangular_solve(r, z, Triangle::upper, meter);
}

namespace {

/// Completes the leading `filled` orthonormal rows of `basis` to `basis.rows()` rows.
void complete_orthonormal_rows(Matrix& basis, std::size_t filled) {
  const std::size_t dim = basis.cols();
  std::size_t next_unit = 0;
  for (std::size_t k = filled; k < basis.rows(); ++k) {
    for (;;) {
      if (next_unit >= dim) throw ConvergenceError("svd: cannot complete orthonormal basis");
      Vector cand(dim, 0.0);
      cand[next_unit++] = 1.0;
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t j = 0; j < k; ++j) axpy(-dot(basis.row(j), cand), basis.row(j), cand);
      }
      const double nrm = norm2(cand);
      if (nrm > 1e-6) {
        for (std::size_t i = 0; i < dim; ++i) basis(k, i) = cand[i] / nrm;
        break;
      }
    }
  }
}

/// One-sided Jacobi on a tall matrix; rows of `w` are the columns being orthogonalized.
Svd jacobi_svd_tall(const Matrix& m) {
  const std::size_t rows = m.rows();
  const std::size_t cols = m.cols();
  Matrix w = m.transpose();
  Matrix vt = Matrix::identity(cols);
  constexpr int kMaxSweeps = 80;
  constexpr double kTol = 1e-15;
  bool converged = cols < 2;
  for (int sweep = 0; sweep < kMaxSweeps && !converged; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < cols; ++p) {
      for (std::size_t q = p + 1; q < cols; ++q) {
        auto wp = w.row(p);
        auto wq = w.row(q);
        const double alpha = dot(wp, wp);
        const double beta = dot(wq, wq);
        const double gamma = dot(wp, wq);
        if (alpha == 0.0 || beta == 0.0) continue;
        if (std::abs(gamma) <= kTol * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
        const double c = 1.0 / std::hypot(1.0, t);
        const double s = c * t;
        for (std::size_t i = 0; i < rows; ++i) {
          const double a = wp[i];
          const double b = wq[i];
          wp[i] = c * a - s * b;
          wq[i] = s * a + c * b;
        }
        auto vp = vt.row(p);
        auto vq = vt.row(q);
        for (std::size_t i = 0; i < cols; ++i) {
          const double a = vp[i];
          const double b = vq[i];
          vp[i] = c * a - s * b;
          vq[i] = s * a + c * b;
        }
      }
    }
    converged = !rotated;
  }
  if (!converged) throw ConvergenceError("svd: one-sided Jacobi did not converge");

  Vector norms(cols);
  for (std::size_t j = 0; j < cols; ++j) norms[j] = norm2(w.row(j));
  std::vector<std::size_t> order(cols);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return norms[a] > norms[b]; });

  const double cutoff = (norms.empty() ? 0.0 : norms[order[0]]) * 1e-300;
  Matrix ut(cols, rows);
  Matrix vt_sorted(cols, cols);
  Svd out;
  out.sigma.resize(cols);
  std::size_t nonzero = 0;
  for (std::size_t k = 0; k < cols; ++k) {
    const std::size_t j = order[k];
    out.sigma[k] = norms[j];
    std::ranges::copy(vt.row(j), vt_sorted.row(k).begin());
    if (norms[j] > cutoff && norms[j] > 0.0) {
      for (std::size_t i = 0; i < rows; ++i) ut(k, i) = w(j, i) / norms[j];
      nonzero = k + 1;
    }
  }
  complete_orthonormal_rows(ut, nonzero);
  out.u = ut.transpose();
  out.v = vt_sorted.transpose();
  return out;
}

}  // namespace

Svd svd(const Matrix& m) {
  if (m.rows() >= m.cols()) return jacobi_svd_tall(m);
  Svd t = jacobi_svd_tall(m.transpose());
  std::swap(t.u, t.v);
  return t;
}

SymmetricEigen symmetric_eigen(const Matrix& m) {
  require(m.square(), "symmetric_eigen: matrix not square");
  if (!is_symmetric(m, 1e-8)) throw DimensionError("symmetric_eigen: matrix not symmetric");
  const std::size_t n = m.rows();
  Matrix a = m;
  Matrix v = Matrix::identity(n);
  const double total = frobenius_norm(a);
  constexpr int kMaxSweeps = 100;
  bool converged = false;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    }
    if (off <= 1e-32 * total * total || off == 0.0) {
      converged = true;
      break;
    }
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::hypot(1.0, theta));
        const double c = 1.0 / std::hypot(1.0, t);
        const double s = t * c;
        for (std::size_t r = 0; r < n; ++r) {
          const double arp = a(r, p);
          const double arq = a(r, q);
          a(r, p) = c * arp - s * arq;
          a(r, q) = s * arp + c * arq;
        }
        for (std::size_t r = 0; r < n; ++r) {
          const double apr = a(p, r);
          const double aqr = a(q, r);
          a(p, r) = c * apr - s * aqr;
          a(q, r) = s * apr + c * aqr;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
          const double vrp = v(r, p);
          const double vrq = v(r, q);
          v(r, p) = c * vrp - s * vrq;
          v(r, q) = s * vrp + c * vrq;
        }
      }
    }
  }
  if (!converged) throw ConvergenceError("symmetric_eigen: Jacobi did not converge");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return a(x, x) < a(y, y); });
  SymmetricEigen out{Vector(n), Matrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]);
    for (std::size_t r = 0; r < n; ++r) out.vectors(r, k) = v(r, order[k]);
  }
  return out;
}

Matrix psd_pinv_power(const Matrix& m, double power, double rel_tol) {
  const auto eig = symmetric_eigen(m);
  const std::size_t n = m.rows();
  const double top = eig.values.empty() ? 0.0 : std::max(eig.values.back(), 0.0);
  Matrix out(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    const double lam = eig.values[k];
    if (lam <= rel_tol * top || lam <= 0.0) continue;
    const double f = std::pow(lam, -power);
    for (std::size_t i = 0; i < n; ++i) {
      const double vi = eig.vectors(i, k) * f;
      for (std::size_t j = 0; j < n; ++j) out(i, j) += vi * eig.vectors(j, k);
    }
  }
  return out;
}

Matrix pinv(const Matrix& m, double rel_tol) {
  const Svd d = svd(m);
  const double top = d.sigma.empty() ? 0.0 : d.sigma[0];
  Matrix out(m.cols(), m.rows());
  for (std::size_t k = 0; k < d.sigma.size(); ++k) {
    if (d.sigma[k] <= rel_tol * top || d.sigma[k] == 0.0) continue;
    const double inv = 1.0 / d.sigma[k];
    for (std::size_t i = 0; i < m.cols(); ++i) {
      const double vi = d.v(i, k) * inv;
      for (std::size_t j = 0; j < m.rows(); ++j) out(i, j) += vi * d.u(j, k);
    }
  }
  return out;
}

Vector lu_solve(const Matrix& a, std::span<const double> b) {
  require(a.square() && a.rows() == b.size(), "lu_solve: dimension mismatch");
  const std::size_t n = a.rows();
  Matrix lu = a;
  Vector x(b.begin(), b.end());
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i) {
      if (std::abs(lu(i, k)) > std::abs(lu(piv, k))) piv = i;
    }
    if (lu(piv, k) == 0.0) throw NotPositiveDefinite("lu_solve: singular matrix");
    if (piv != k) {
      std::swap_ranges(lu.row(k).begin(), lu.row(k).end(), lu.row(piv).begin());
      std::swap(x[k], x[piv]);
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = lu(i, k) / lu(k, k);
      if (f == 0.0) continue;
      auto ri = lu.row(i);
      const auto rk = lu.row(k);
      for (std::size_t j = k; j < n; ++j) ri[j] -= f * rk[j];
      x[i] -= f * x[k];
    }
  }
  for (std::size_t ii = n; ii-- > 0;) {
    double s = x[ii];
    for (std::size_t j = ii + 1; j < n; ++j) s -= lu(ii, j) * x[j];
    x[ii] = s / lu(ii, ii);
  }
  return x;
}

Matrix random_gaussian(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  Matrix g(rows, cols);
  for (double& v : g.data()) v = rng.normal();
  return g;
}

Matrix random_orthonormal(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  require(cols <= rows && rows >= 1, "random_orthonormal: need 1 <= cols <= rows");
  // Rows of `qt` are the Gaussian columns; Gram-Schmidt with reorthogonalization
  // yields the Q factor whose R has a positive diagonal.
  Matrix qt = random_gaussian(cols, rows, seed);
  for (std::size_t k = 0; k < cols; ++k) {
    auto qk = qt.row(k);
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t j = 0; j < k; ++j) axpy(-dot(qt.row(j), qk), qt.row(j), qk);
    }
    const double nrm = norm2(qk);
    if (nrm == 0.0) throw ConvergenceError("random_orthonormal: degenerate Gaussian draw");
    for (double& v : qk) v /= nrm;
  }
  return qt.transpose();
}

Matrix random_orthogonal(std::size_t n, std::uint64_t seed) {
  return random_orthonormal(n, n, seed);
}

}  // namespace kzpp
