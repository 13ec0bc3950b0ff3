#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "gmae/error.hpp"
#include "gmae/matrix.hpp"

namespace gmae {

struct Pca2 {
  Matrix coords;                  // n x 2 scores on the top two components
  double residual_fraction = 0.0; // variance outside those components
};

namespace detail {

// Cyclic Jacobi diagonalization of a symmetric matrix. Returns eigenvalues
// in `eig`; the columns of `vec` are the matching eigenvectors. Converges
// quadratically, so the sweep bound is generous.
inline void jacobi_eigen(Matrix a, std::vector<double>& eig, Matrix& vec) {
  const std::size_t d = a.rows;
  vec = Matrix(d, d);
  for (std::size_t i = 0; i < d; ++i) vec(i, i) = 1.0;

  double frob = 0.0;
  for (double x : a.data) frob += x * x;
  const double tol = 1e-14 * std::sqrt(std::max(frob, 1e-300));

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < d; ++p)
      for (std::size_t q = p + 1; q < d; ++q) off += a(p, q) * a(p, q);
    if (std::sqrt(2.0 * off) <= tol) break;

    for (std::size_t p = 0; p < d; ++p)
      for (std::size_t q = p + 1; q < d; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < d; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < d; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < d; ++k) {
          const double vkp = vec(k, p), vkq = vec(k, q);
          vec(k, p) = c * vkp - s * vkq;
          vec(k, q) = s * vkp + c * vkq;
        }
      }
  }
  eig.resize(d);
  for (std::size_t i = 0; i < d; ++i) eig[i] = a(i, i);
}

}  // namespace detail

// Project rows onto the two directions of largest variance. Eigenvector
// signs are pinned (largest-magnitude entry positive) so the output is a
// deterministic function of the input.
inline Pca2 pca_2d(const Matrix& x) {
  if (x.rows == 0 || x.cols == 0) throw ContractError("pca: empty input");
  const std::size_t n = x.rows, d = x.cols;

  Matrix centered = x;
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += x(i, j);
    mean /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) centered(i, j) -= mean;
  }

  Pca2 out;
  out.coords = Matrix(n, 2);
  if (d == 1 || n == 1) {
    if (d == 1)
      for (std::size_t i = 0; i < n; ++i) out.coords(i, 0) = centered(i, 0);
    return out;
  }

  Matrix cov(d, d);
  matmul_tn_acc(centered, centered, cov);
  for (double& v : cov.data) v /= static_cast<double>(n - 1);

  std::vector<double> eig;
  Matrix vec;
  detail::jacobi_eigen(cov, eig, vec);

  std::vector<std::size_t> order(d);
  for (std::size_t i = 0; i < d; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return eig[a] > eig[b]; });

  for (int comp = 0; comp < 2; ++comp) {
    const std::size_t col = order[static_cast<std::size_t>(comp)];
    // Sign convention: the dominant coordinate points positive.
    std::size_t big = 0;
    for (std::size_t k = 1; k < d; ++k)
      if (std::abs(vec(k, col)) > std::abs(vec(big, col))) big = k;
    const double flip = vec(big, col) < 0.0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t k = 0; k < d; ++k) acc += centered(i, k) * vec(k, col);
      out.coords(i, comp) = flip * acc;
    }
  }

  double total = 0.0;
  for (double e : eig) total += std::max(e, 0.0);
  if (total > 0.0) {
    const double top = std::max(eig[order[0]], 0.0) + std::max(eig[order[1]], 0.0);
    out.residual_fraction = std::max(0.0, 1.0 - top / total);
  }
  return out;
}

}  // namespace gmae
