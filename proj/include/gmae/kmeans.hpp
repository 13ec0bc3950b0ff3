#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "gmae/error.hpp"
#include "gmae/matrix.hpp"

namespace gmae {

struct KmeansResult {
  std::vector<int> assignments;        // n entries in [0, k)
  Matrix centroids;                    // k x d
  double inertia = 0.0;                // sum of squared distances to centroids
  std::vector<double> inertia_history; // per Lloyd iteration, winning restart
  std::size_t restart_used = 0;
};

namespace detail {

inline double sq_dist_row(const Matrix& x, std::size_t i, const Matrix& c,
                          std::size_t k) {
  double d = 0.0;
  for (std::size_t j = 0; j < x.cols; ++j) {
    const double diff = x(i, j) - c(k, j);
    d += diff * diff;
  }
  return d;
}

// Distance-squared weighted seeding. Falls back to a uniform pick when every
// point already coincides with a chosen center.
inline Matrix kmeanspp_seed(const Matrix& x, std::size_t k, std::mt19937_64& rng) {
  const std::size_t n = x.rows;
  Matrix centers(k, x.cols);
  std::uniform_int_distribution<std::size_t> uni(0, n - 1);
  std::size_t first = uni(rng);
  for (std::size_t j = 0; j < x.cols; ++j) centers(0, j) = x(first, j);

  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], sq_dist_row(x, i, centers, c - 1));
      total += d2[i];
    }
    std::size_t pick;
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double r = u(rng), acc = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (r <= acc) {
          pick = i;
          break;
        }
      }
    } else {
      pick = uni(rng);
    }
    for (std::size_t j = 0; j < x.cols; ++j) centers(c, j) = x(pick, j);
  }
  return centers;
}

struct LloydOutcome {
  std::vector<int> assign;
  Matrix centers;
  double inertia = 0.0;
  std::vector<double> history;
};

inline LloydOutcome lloyd(const Matrix& x, Matrix centers, std::size_t max_iters) {
  const std::size_t n = x.rows, k = centers.rows;
  LloydOutcome out;
  out.assign.assign(n, -1);

  for (std::size_t iter = 0; iter < max_iters; ++iter) {
    bool changed = false;
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_d = sq_dist_row(x, i, centers, 0);
      for (std::size_t c = 1; c < k; ++c) {
        const double d = sq_dist_row(x, i, centers, c);
        if (d < best_d) {  // ties keep the lower index
          best_d = d;
          best = static_cast<int>(c);
        }
      }
      if (out.assign[i] != best) {
        out.assign[i] = best;
        changed = true;
      }
      inertia += best_d;
    }
    out.history.push_back(inertia);
    out.inertia = inertia;
    if (!changed && iter > 0) break;

    Matrix sums(k, x.cols);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = static_cast<std::size_t>(out.assign[i]);
      counts[c] += 1;
      for (std::size_t j = 0; j < x.cols; ++j) sums(c, j) += x(i, j);
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        for (std::size_t j = 0; j < x.cols; ++j)
          centers(c, j) = sums(c, j) / static_cast<double>(counts[c]);
      } else {
        // Revive an empty cluster at the point farthest from its center.
        std::size_t far = 0;
        double far_d = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double d =
              sq_dist_row(x, i, centers, static_cast<std::size_t>(out.assign[i]));
          if (d > far_d) {
            far_d = d;
            far = i;
          }
        }
        for (std::size_t j = 0; j < x.cols; ++j) centers(c, j) = x(far, j);
      }
    }
  }
  out.centers = std::move(centers);
  return out;
}

}  // namespace detail

// Standard restarted k-means. Restart r runs from derive_seed(seed, r); the
// lowest-inertia restart wins, earlier restart on ties, so results depend
// only on (x, k, seed, restarts, max_iters).
inline KmeansResult kmeans(const Matrix& x, std::size_t k, std::uint64_t seed,
                           std::size_t restarts = 10, std::size_t max_iters = 300) {
  if (x.rows == 0 || x.cols == 0) throw ContractError("kmeans: empty input");
  if (k == 0) throw ContractError("kmeans: k must be positive");
  if (k > x.rows) throw ContractError("kmeans: k exceeds sample count");
  if (restarts == 0 || max_iters == 0)
    throw ContractError("kmeans: restarts and max_iters must be positive");

  KmeansResult best;

  if (k == 1) {
    best.centroids = Matrix(1, x.cols);
    for (std::size_t i = 0; i < x.rows; ++i)
      for (std::size_t j = 0; j < x.cols; ++j) best.centroids(0, j) += x(i, j);
    for (double& v : best.centroids.data) v /= static_cast<double>(x.rows);
    best.assignments.assign(x.rows, 0);
    for (std::size_t i = 0; i < x.rows; ++i)
      best.inertia += detail::sq_dist_row(x, i, best.centroids, 0);
    best.inertia_history = {best.inertia};
    return best;
  }

  bool have = false;
  for (std::size_t r = 0; r < restarts; ++r) {
    std::mt19937_64 rng(derive_seed(seed, r));
    auto out = detail::lloyd(x, detail::kmeanspp_seed(x, k, rng), max_iters);
    if (!have || out.inertia < best.inertia) {
      have = true;
      best.assignments = std::move(out.assign);
      best.centroids = std::move(out.centers);
      best.inertia = out.inertia;
      best.inertia_history = std::move(out.history);
      best.restart_used = r;
    }
  }
  return best;
}

}  // namespace gmae
