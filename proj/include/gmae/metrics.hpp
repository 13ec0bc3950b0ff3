#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include "gmae/error.hpp"

namespace gmae {

// Map arbitrary integer labels onto 0..K-1, preserving value order.
inline std::vector<int> compress_labels(const std::vector<int>& labels,
                                        std::size_t* k_out = nullptr) {
  std::map<int, int> remap;
  for (int y : labels) remap.emplace(y, 0);
  int next = 0;
  for (auto& [y, id] : remap) id = next++;
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) out[i] = remap[labels[i]];
  if (k_out) *k_out = remap.size();
  return out;
}

// Counts[i][j] = how often prediction i co-occurs with truth j.
inline std::vector<std::vector<long long>> contingency(
    const std::vector<int>& pred, const std::vector<int>& truth,
    std::size_t* kp_out = nullptr, std::size_t* kt_out = nullptr) {
  if (pred.size() != truth.size())
    throw DimError("contingency: label vectors differ in length");
  if (pred.empty()) throw ContractError("contingency: empty labels");
  std::size_t kp = 0, kt = 0;
  auto p = compress_labels(pred, &kp);
  auto t = compress_labels(truth, &kt);
  std::vector<std::vector<long long>> c(kp, std::vector<long long>(kt, 0));
  for (std::size_t i = 0; i < p.size(); ++i) c[p[i]][t[i]] += 1;
  if (kp_out) *kp_out = kp;
  if (kt_out) *kt_out = kt;
  return c;
}

// Minimum-cost assignment on a square cost matrix via shortest augmenting
// paths with potentials. Returns the column matched to each row.
inline std::vector<int> hungarian_min_assignment(
    const std::vector<std::vector<long long>>& cost) {
  const int n = static_cast<int>(cost.size());
  if (n == 0) throw ContractError("assignment: empty cost matrix");
  for (const auto& row : cost)
    if (static_cast<int>(row.size()) != n)
      throw DimError("assignment: cost matrix must be square");

  const long long INF = std::numeric_limits<long long>::max() / 4;
  std::vector<long long> u(n + 1, 0), v(n + 1, 0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<long long> minv(n + 1, INF);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      int j1 = -1;
      long long delta = INF;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const long long cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j] > 0) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

// Largest total overlap achievable by renaming predicted clusters; the
// backbone of clustering accuracy.
inline long long best_match_overlap(const std::vector<int>& pred,
                                    const std::vector<int>& truth) {
  std::size_t kp = 0, kt = 0;
  auto c = contingency(pred, truth, &kp, &kt);
  const std::size_t k = std::max(kp, kt);
  // Pad to square and negate: min cost of -overlap == max overlap.
  std::vector<std::vector<long long>> cost(k, std::vector<long long>(k, 0));
  for (std::size_t i = 0; i < kp; ++i)
    for (std::size_t j = 0; j < kt; ++j) cost[i][j] = -c[i][j];
  auto match = hungarian_min_assignment(cost);
  long long total = 0;
  for (std::size_t i = 0; i < kp; ++i) {
    const int j = match[i];
    if (j >= 0 && static_cast<std::size_t>(j) < kt) total += c[i][j];
  }
  return total;
}

inline double clustering_accuracy(const std::vector<int>& pred,
                                  const std::vector<int>& truth) {
  const long long overlap = best_match_overlap(pred, truth);
  return 100.0 * static_cast<double>(overlap) / static_cast<double>(pred.size());
}

// Normalized mutual information with the geometric-mean normalizer, on a
// 0..100 scale. Two constant partitions agree perfectly; a constant
// partition against a varying one shares nothing.
inline double nmi(const std::vector<int>& pred, const std::vector<int>& truth) {
  std::size_t kp = 0, kt = 0;
  auto c = contingency(pred, truth, &kp, &kt);
  const double n = static_cast<double>(pred.size());

  std::vector<double> pi(kp, 0.0), pj(kt, 0.0);
  for (std::size_t i = 0; i < kp; ++i)
    for (std::size_t j = 0; j < kt; ++j) {
      pi[i] += static_cast<double>(c[i][j]);
      pj[j] += static_cast<double>(c[i][j]);
    }
  for (double& x : pi) x /= n;
  for (double& x : pj) x /= n;

  double hp = 0.0, ht = 0.0, mi = 0.0;
  for (double x : pi)
    if (x > 0.0) hp -= x * std::log(x);
  for (double x : pj)
    if (x > 0.0) ht -= x * std::log(x);
  for (std::size_t i = 0; i < kp; ++i)
    for (std::size_t j = 0; j < kt; ++j) {
      if (c[i][j] == 0) continue;  // 0 log 0 = 0
      const double pij = static_cast<double>(c[i][j]) / n;
      mi += pij * std::log(pij / (pi[i] * pj[j]));
    }

  if (hp == 0.0 && ht == 0.0) return 100.0;
  if (hp == 0.0 || ht == 0.0) return 0.0;
  return 100.0 * mi / std::sqrt(hp * ht);
}

// Fraction of samples inside their cluster's majority class.
inline double purity(const std::vector<int>& pred, const std::vector<int>& truth) {
  std::size_t kp = 0, kt = 0;
  auto c = contingency(pred, truth, &kp, &kt);
  long long agree = 0;
  for (std::size_t i = 0; i < kp; ++i)
    agree += *std::max_element(c[i].begin(), c[i].end());
  return 100.0 * static_cast<double>(agree) / static_cast<double>(pred.size());
}

struct ClusteringScores {
  double acc = 0.0;
  double nmi = 0.0;
  double purity = 0.0;
};

inline ClusteringScores evaluate_clustering(const std::vector<int>& pred,
                                            const std::vector<int>& truth) {
  return {clustering_accuracy(pred, truth), nmi(pred, truth), purity(pred, truth)};
}

}  // namespace gmae
