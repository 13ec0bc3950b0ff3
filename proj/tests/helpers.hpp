#pragma once

// Shared oracles and builders for the unit and acceptance suites. Everything
// here recomputes expectations independently of the tape implementation:
// plain loops, local cosines, contingency tables.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <utility>
#include <vector>

#include "gmae/matrix.hpp"
#include "gmae/metrics.hpp"
#include "gmae/model.hpp"
#include "gmae/tape.hpp"

namespace testing_oracles {

inline gmae::Matrix random_matrix(std::mt19937_64& rng, std::size_t r, std::size_t c,
                                  double lo = -2.0, double hi = 2.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  gmae::Matrix m(r, c);
  for (double& x : m.data) x = u(rng);
  return m;
}

// Straight-from-the-definition neighbor-contrast loss with its own cosine.
inline double naive_loss_ent(const gmae::Matrix& q,
                             const std::vector<std::vector<std::size_t>>& pos) {
  const std::size_t n = q.rows;
  auto m_of = [&](std::size_t a, std::size_t b) {
    double aa = 0.0, bb = 0.0, ab = 0.0;
    for (std::size_t i = 0; i < q.cols; ++i) {
      aa += q(a, i) * q(a, i);
      bb += q(b, i) * q(b, i);
      ab += q(a, i) * q(b, i);
    }
    return std::exp(ab / (std::sqrt(aa) * std::sqrt(bb)));
  };
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<bool> is_pos(n, false);
    for (std::size_t j : pos[i]) is_pos[j] = true;
    double den = 0.0;
    for (std::size_t k = 0; k < n; ++k)
      if (k != i && !is_pos[k]) den += m_of(k, i);
    for (std::size_t j : pos[i]) total += std::log(m_of(j, i) / den);
  }
  return -total / static_cast<double>(n);
}

// Plug-in discrete mutual information of the neighbor relation: the joint
// distribution of (label of i, label of j) over all i and j in pos(i).
inline double plugin_neighbor_mi(const std::vector<int>& labels,
                                 const std::vector<std::vector<std::size_t>>& pos) {
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> left, right;
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i)
    for (std::size_t j : pos[i]) {
      joint[{labels[i], labels[j]}] += 1.0;
      left[labels[i]] += 1.0;
      right[labels[j]] += 1.0;
      total += 1.0;
    }
  double mi = 0.0;
  for (const auto& [ab, cnt] : joint) {
    const double p = cnt / total;
    const double pa = left[ab.first] / total;
    const double pb = right[ab.second] / total;
    mi += p * std::log(p / (pa * pb));
  }
  return mi;
}

// Rows drawn i.i.d. uniform over two antipodal unit prototypes. With
// exact-match positives this is the discrete setting where the neighbor
// kernel is closest to calibrated, so the entropy identity is tight.
struct PrototypeDraw {
  gmae::Matrix q;
  std::vector<int> labels;
};

inline PrototypeDraw draw_antipodal_prototypes(std::size_t n, std::size_t d,
                                               std::uint64_t seed) {
  PrototypeDraw out;
  out.q = gmae::Matrix(n, d, 0.0);
  out.labels.resize(n);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> coin(0, 1);
  for (std::size_t i = 0; i < n; ++i) {
    const int c = coin(rng);
    out.labels[i] = c;
    out.q(i, 0) = c == 0 ? 1.0 : -1.0;
  }
  return out;
}

// Exhaustive best-overlap matching: try every renaming of predicted
// clusters onto true clusters. Exponential, only for small K.
inline long long brute_force_overlap(const std::vector<int>& pred,
                                     const std::vector<int>& truth) {
  std::size_t kp = 0, kt = 0;
  auto c = gmae::contingency(pred, truth, &kp, &kt);
  const std::size_t k = std::max(kp, kt);
  std::vector<std::vector<long long>> sq(k, std::vector<long long>(k, 0));
  for (std::size_t i = 0; i < kp; ++i)
    for (std::size_t j = 0; j < kt; ++j) sq[i][j] = c[i][j];
  std::vector<std::size_t> perm(k);
  for (std::size_t i = 0; i < k; ++i) perm[i] = i;
  long long best = 0;
  do {
    long long total = 0;
    for (std::size_t i = 0; i < k; ++i) total += sq[i][perm[i]];
    best = std::max(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// Exhaustive best bipartition by within-cluster sum of squares. 2^(n-1)
// assignments, so keep n tiny.
inline double brute_force_two_cluster_inertia(const gmae::Matrix& x) {
  const std::size_t n = x.rows;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t bits = 0; bits < (1u << (n - 1)); ++bits) {
    double inertia = 0.0;
    for (int side = 0; side < 2; ++side) {
      std::vector<std::size_t> members;
      for (std::size_t i = 0; i < n; ++i) {
        const bool in_one = i + 1 < n ? ((bits >> i) & 1u) : false;
        if ((side == 1) == in_one) members.push_back(i);
      }
      if (members.empty()) continue;
      std::vector<double> mean(x.cols, 0.0);
      for (std::size_t i : members)
        for (std::size_t j = 0; j < x.cols; ++j) mean[j] += x(i, j);
      for (double& m : mean) m /= static_cast<double>(members.size());
      for (std::size_t i : members)
        for (std::size_t j = 0; j < x.cols; ++j) {
          const double d = x(i, j) - mean[j];
          inertia += d * d;
        }
    }
    best = std::min(best, inertia);
  }
  return best;
}

// Flatten every parameter matrix in enumeration order; pairs with
// bind_from_vars below so finite differences can run through the real
// model graphs.
inline std::vector<gmae::Matrix> flatten_params(gmae::ModelParams& p) {
  std::vector<gmae::Matrix> out;
  p.for_each_param([&](const std::string&, gmae::Matrix& m) { out.push_back(m); });
  return out;
}

inline gmae::BoundModel bind_from_vars(const gmae::ModelParams& p,
                                       const std::vector<gmae::Var>& vars) {
  gmae::BoundModel b;
  b.params = &p;
  std::size_t k = 0;
  auto take = [&](const gmae::Mlp& m) {
    gmae::BoundMlp bm;
    bm.def = &m;
    for (std::size_t l = 0; l < m.w.size(); ++l) {
      bm.w.push_back(vars.at(k++));
      bm.b.push_back(vars.at(k++));
    }
    return bm;
  };
  for (const gmae::Mlp& m : p.enc_spec) b.enc_spec.push_back(take(m));
  for (const gmae::Mlp& m : p.adapter) b.adapter.push_back(take(m));
  if (p.has_trunk()) {
    b.trunk = take(p.trunk);
    b.trunk_bound = true;
  }
  for (const gmae::Mlp& m : p.head_z) b.head_z.push_back(take(m));
  for (const gmae::Mlp& m : p.head_c) b.head_c.push_back(take(m));
  for (const gmae::Mlp& m : p.dec) b.dec.push_back(take(m));
  for (const gmae::Mlp& m : p.disc) b.disc.push_back(take(m));
  return b;
}

}  // namespace testing_oracles
