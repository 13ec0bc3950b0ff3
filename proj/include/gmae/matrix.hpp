#pragma once

#include <cassert>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <vector>

#include "gmae/error.hpp"

namespace gmae {

// Dense row-major matrix of doubles. The one value type the whole library
// moves around; vectors are N x 1 or 1 x N matrices.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rs) {
    Matrix m;
    m.rows = rs.size();
    m.cols = rs.size() ? rs.begin()->size() : 0;
    m.data.reserve(m.rows * m.cols);
    for (const auto& r : rs) {
      if (r.size() != m.cols) throw DimError("from_rows: ragged row list");
      m.data.insert(m.data.end(), r.begin(), r.end());
    }
    return m;
  }

  double& operator()(std::size_t i, std::size_t j) {
    assert(i < rows && j < cols);
    return data[i * cols + j];
  }
  double operator()(std::size_t i, std::size_t j) const {
    assert(i < rows && j < cols);
    return data[i * cols + j];
  }

  double* row_ptr(std::size_t i) { return data.data() + i * cols; }
  const double* row_ptr(std::size_t i) const { return data.data() + i * cols; }

  std::size_t size() const { return data.size(); }
  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
  bool empty() const { return data.empty(); }
};

inline Matrix zeros_like(const Matrix& m) { return Matrix(m.rows, m.cols); }

// C += A * B. ikj loop order: the inner loop streams one row of B into one
// row of C, which vectorizes and stays cache resident at the layer widths
// this library uses.
inline void matmul_nn_acc(const Matrix& a, const Matrix& b, Matrix& c) {
  assert(a.cols == b.rows && c.rows == a.rows && c.cols == b.cols);
  const std::size_t n = a.rows, k = a.cols, m = b.cols;
  for (std::size_t i = 0; i < n; ++i) {
    const double* ar = a.row_ptr(i);
    double* cr = c.row_ptr(i);
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ar[p];
      const double* br = b.row_ptr(p);
      for (std::size_t j = 0; j < m; ++j) cr[j] += av * br[j];
    }
  }
}

// C += A * B^T. Each output entry is a dot product of two contiguous rows.
// Four output columns advance together so four independent accumulator
// chains hide the FMA latency; every entry still sums in plain left-to-right
// order, so results are bitwise identical to the one-column form.
inline void matmul_nt_acc(const Matrix& a, const Matrix& b, Matrix& c) {
  assert(a.cols == b.cols && c.rows == a.rows && c.cols == b.rows);
  const std::size_t n = a.rows, k = a.cols, m = b.rows;
  for (std::size_t i = 0; i < n; ++i) {
    const double* ar = a.row_ptr(i);
    double* cr = c.row_ptr(i);
    std::size_t j = 0;
    for (; j + 4 <= m; j += 4) {
      const double* b0 = b.row_ptr(j);
      const double* b1 = b.row_ptr(j + 1);
      const double* b2 = b.row_ptr(j + 2);
      const double* b3 = b.row_ptr(j + 3);
      double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
      for (std::size_t p = 0; p < k; ++p) {
        const double av = ar[p];
        s0 += av * b0[p];
        s1 += av * b1[p];
        s2 += av * b2[p];
        s3 += av * b3[p];
      }
      cr[j] += s0;
      cr[j + 1] += s1;
      cr[j + 2] += s2;
      cr[j + 3] += s3;
    }
    for (; j < m; ++j) {
      const double* br = b.row_ptr(j);
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += ar[p] * br[p];
      cr[j] += s;
    }
  }
}

// C += A^T * B. Outer loop over the shared dimension keeps both reads
// contiguous; C rows are revisited but stay in cache.
inline void matmul_tn_acc(const Matrix& a, const Matrix& b, Matrix& c) {
  assert(a.rows == b.rows && c.rows == a.cols && c.cols == b.cols);
  const std::size_t k = a.rows, n = a.cols, m = b.cols;
  for (std::size_t p = 0; p < k; ++p) {
    const double* ar = a.row_ptr(p);
    const double* br = b.row_ptr(p);
    for (std::size_t i = 0; i < n; ++i) {
      const double av = ar[i];
      double* cr = c.row_ptr(i);
      for (std::size_t j = 0; j < m; ++j) cr[j] += av * br[j];
    }
  }
}

inline Matrix matmul_nn(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) throw DimError("matmul: inner dimensions disagree");
  Matrix c(a.rows, b.cols);
  matmul_nn_acc(a, b, c);
  return c;
}

// FNV-1a over the raw bytes; used for content hashes in manifests and for
// cheap change detection in tests.
inline std::uint64_t fnv1a(const void* bytes, std::size_t len,
                           std::uint64_t h = 1469598103934665603ull) {
  const auto* p = static_cast<const unsigned char*>(bytes);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t fnv1a(const Matrix& m, std::uint64_t h = 1469598103934665603ull) {
  h = fnv1a(&m.rows, sizeof m.rows, h);
  h = fnv1a(&m.cols, sizeof m.cols, h);
  return fnv1a(m.data.data(), m.data.size() * sizeof(double), h);
}

// splitmix64; used to derive independent sub-seeds from one base seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  return splitmix64(base ^ splitmix64(stream + 0x51ed2701ull));
}

}  // namespace gmae
