#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "gmae/error.hpp"
#include "gmae/losses.hpp"
#include "gmae/matrix.hpp"

namespace gmae {

// For each row of q, the indices of its n_omega most similar other rows
// under m(a, b) = exp(cos(a, b)), ties broken toward the lower index.
// Ordering by cosine is identical to ordering by m because exp is strictly
// increasing; the exp is skipped here.
inline std::vector<std::vector<std::size_t>> build_neighbor_sets(
    const Matrix& q, std::size_t n_omega) {
  const std::size_t n = q.rows;
  if (n == 0) throw ContractError("build_neighbor_sets: empty input");
  if (n_omega == 0) throw ContractError("build_neighbor_sets: n_omega must be positive");
  if (n_omega >= n)
    throw ContractError("build_neighbor_sets: n_omega must be smaller than the sample count");

  std::vector<double> inv_norm(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* r = q.row_ptr(i);
    double s = 0.0;
    for (std::size_t j = 0; j < q.cols; ++j) s += r[j] * r[j];
    if (s <= 0.0) throw DomainError("build_neighbor_sets: zero-norm row");
    inv_norm[i] = 1.0 / std::sqrt(s);
  }

  std::vector<std::vector<std::size_t>> pos(n);
  std::vector<std::pair<double, std::size_t>> cand;
  for (std::size_t i = 0; i < n; ++i) {
    cand.clear();
    cand.reserve(n - 1);
    const double* ri = q.row_ptr(i);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double* rj = q.row_ptr(j);
      double dot = 0.0;
      for (std::size_t p = 0; p < q.cols; ++p) dot += ri[p] * rj[p];
      cand.emplace_back(dot * inv_norm[i] * inv_norm[j], j);
    }
    auto better = [](const std::pair<double, std::size_t>& a,
                     const std::pair<double, std::size_t>& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    };
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(n_omega),
                      cand.end(), better);
    pos[i].reserve(n_omega);
    for (std::size_t k = 0; k < n_omega; ++k) pos[i].push_back(cand[k].second);
  }
  return pos;
}

}  // namespace gmae
