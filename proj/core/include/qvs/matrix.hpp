#ifndef QVS_MATRIX_HPP
#define QVS_MATRIX_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "qvs/error.hpp"
#include "qvs/real.hpp"

namespace qvs {

// Row-major dense matrix. The single numeric container for batches, layer
// parameters, and gradients.
struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<real> data;

  DenseMatrix() = default;
  DenseMatrix(std::size_t r, std::size_t c, real fill = 0)
      : rows(r), cols(c), data(r * c, fill) {}

  real& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  real at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  real* row_ptr(std::size_t r) { return data.data() + r * cols; }
  const real* row_ptr(std::size_t r) const { return data.data() + r * cols; }

  std::span<real> row(std::size_t r) { return {row_ptr(r), cols}; }
  std::span<const real> row(std::size_t r) const { return {row_ptr(r), cols}; }

  std::size_t size() const { return rows * cols; }

  bool same_shape(const DenseMatrix& o) const {
    return rows == o.rows && cols == o.cols;
  }

  bool operator==(const DenseMatrix& o) const = default;
};

inline bool all_finite(std::span<const real> v) {
  for (const real x : v) {
    if (!std::isfinite(static_cast<double>(x))) return false;
  }
  return true;
}

inline bool all_finite(const DenseMatrix& m) {
  return all_finite(std::span<const real>(m.data));
}

// Squared Euclidean distance with 64-bit accumulation. The one distance
// used by both the exact scan and the index refinement, so ties agree.
inline double squared_distance(std::span<const real> a, std::span<const real> b) {
  QVS_REQUIRE(a.size() == b.size(), "squared_distance: size mismatch");
  double s0 = 0, s1 = 0;
  std::size_t k = 0;
  for (; k + 2 <= a.size(); k += 2) {
    const double d0 = static_cast<double>(a[k]) - static_cast<double>(b[k]);
    const double d1 = static_cast<double>(a[k + 1]) - static_cast<double>(b[k + 1]);
    s0 += d0 * d0;
    s1 += d1 * d1;
  }
  if (k < a.size()) {
    const double d = static_cast<double>(a[k]) - static_cast<double>(b[k]);
    s0 += d * d;
  }
  return s0 + s1;
}

namespace detail {

// Dot product with 64-bit accumulation; four lanes to break the dependency
// chain on the accumulator.
inline double dot(const real* a, const real* b, std::size_t n) {
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    s0 += static_cast<double>(a[k]) * static_cast<double>(b[k]);
    s1 += static_cast<double>(a[k + 1]) * static_cast<double>(b[k + 1]);
    s2 += static_cast<double>(a[k + 2]) * static_cast<double>(b[k + 2]);
    s3 += static_cast<double>(a[k + 3]) * static_cast<double>(b[k + 3]);
  }
  for (; k < n; ++k) s0 += static_cast<double>(a[k]) * static_cast<double>(b[k]);
  return (s0 + s1) + (s2 + s3);
}

// acc[k] += a * x[k]
inline void axpy(double a, const real* x, double* acc, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) acc[k] += a * static_cast<double>(x[k]);
}

}  // namespace detail

}  // namespace qvs

#endif
