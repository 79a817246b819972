#pragma once

#include <cstddef>

#include "kzpp/linalg.hpp"
#include "kzpp/rng.hpp"

namespace kzpp::test {

inline Vector normal_vector(std::size_t n, Rng& rng) {
  Vector v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

inline Matrix random_symmetric(std::size_t n, Rng& rng) {
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) a(i, j) = a(j, i) = 2.0 * rng.uniform() - 1.0;
  }
  return a;
}

// Plain triple loop, independent of the library kernels.
inline Matrix naive_product(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double sum = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) sum += a(i, k) * b(k, j);
      c(i, j) = sum;
    }
  }
  return c;
}

inline Matrix naive_transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  }
  return t;
}

// Sylvester construction H_{2n} = [[H, H], [H, -H]].
inline Matrix hadamard(std::size_t n) {
  Matrix h(1, 1, 1.0);
  for (std::size_t size = 1; size < n; size *= 2) {
    Matrix next(2 * size, 2 * size);
    for (std::size_t i = 0; i < size; ++i) {
      for (std::size_t j = 0; j < size; ++j) {
        next(i, j) = next(i, j + size) = next(i + size, j) = h(i, j);
        next(i + size, j + size) = -h(i, j);
      }
    }
    h = next;
  }
  return h;
}

}  // namespace kzpp::test
