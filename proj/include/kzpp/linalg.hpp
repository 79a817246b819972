#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

#include "kzpp/flops.hpp"

namespace kzpp {

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> diag);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool square() const { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  Matrix transpose() const;
  Vector column(std::size_t j) const;

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

enum class Op : std::uint8_t { none, transpose };

Matrix gemm(const Matrix& a, const Matrix& b, Op op_a = Op::none, Op op_b = Op::none,
            Meter meter = {});
Vector matvec(const Matrix& a, std::span<const double> x, Op op = Op::none, Meter meter = {});

Matrix add(const Matrix& a, const Matrix& b, double scale_b = 1.0);
Matrix scaled(const Matrix& a, double factor);
void add_to_diagonal(Matrix& a, double shift);
double trace(const Matrix& a);
double frobenius_norm(const Matrix& a);
double max_abs_diff(const Matrix& a, const Matrix& b);
bool is_symmetric(const Matrix& a, double rel_tol = 1e-10);

Matrix gather_rows(const Matrix& a, std::span<const std::size_t> rows);
Matrix principal_submatrix(const Matrix& a, std::span<const std::size_t> idx);

double dot(std::span<const double> x, std::span<const double> y);
double norm2(std::span<const double> x);
double max_abs_diff(std::span<const double> x, std::span<const double> y);
/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);
Vector subtract(std::span<const double> x, std::span<const double> y);

struct CholeskyFactor {
  Matrix upper;
  double jitter = 0.0;

  std::size_t dim() const { return upper.rows(); }
};

enum class Jitter : std::uint8_t { none, escalate };

/// Upper factor R with RᵀR = M + jitter·I.
///
/// With Jitter::escalate the shifts 0, 1e-12·tr/n and 1e-8·tr/n are tried in
/// turn before giving up.
CholeskyFactor cholesky(const Matrix& m, Jitter policy = Jitter::escalate, Meter meter = {});

enum class Triangle : std::uint8_t { upper, upper_transposed };

Vector triangular_solve(const CholeskyFactor& r, std::span<const double> y, Triangle side,
                        Meter meter = {});
/// Solves (RᵀR) x = y.
Vector cholesky_solve(const CholeskyFactor& r, std::span<const double> y, Meter meter = {});

struct Svd {
  Matrix u;      // rows × k
  Vector sigma;  // k = min(rows, cols), descending
  Matrix v;      // cols × k
};

Svd svd(const Matrix& m);

struct SymmetricEigen {
  Vector values;   // ascending
  Matrix vectors;  // eigenvectors as columns
};

SymmetricEigen symmetric_eigen(const Matrix& m);

/// Pseudo-inverse of a symmetric PSD matrix raised to `power` (e.g. 1 or 0.5).
/// Eigenvalues at or below rel_tol·λ_max are treated as zero.
Matrix psd_pinv_power(const Matrix& m, double power, double rel_tol = 1e-10);

Matrix pinv(const Matrix& m, double rel_tol = 1e-12);
/// Gaussian elimination with partial pivoting.
Vector lu_solve(const Matrix& a, std::span<const double> b);

Matrix random_gaussian(std::size_t rows, std::size_t cols, std::uint64_t seed);
/// First `cols` columns of a Haar-like orthogonal matrix (sign-fixed QR of a Gaussian).
Matrix random_orthonormal(std::size_t rows, std::size_t cols, std::uint64_t seed);
Matrix random_orthogonal(std::size_t n, std::uint64_t seed);

}  // namespace kzpp
