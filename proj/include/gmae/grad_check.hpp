#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "gmae/error.hpp"
#include "gmae/matrix.hpp"
#include "gmae/tape.hpp"

namespace gmae {

// Central-difference gradient verification. `build` must construct the same
// scalar-valued graph for any values of its leaf inputs (pure in the leaf
// values); it is re-invoked on perturbed copies, two evaluations per entry.
//
// Returns the worst relative error over all leaf entries, where errors below
// an absolute floor count as zero: central differences carry roundoff noise
// of order eps*|f|/step, so a true-zero gradient would otherwise divide
// noise by noise.
struct GradCheck {
  double max_rel_err = 0.0;
  std::size_t entries = 0;
};

inline GradCheck finite_difference_check(
    const std::vector<Matrix>& points,
    const std::function<Var(Tape&, const std::vector<Var>&)>& build,
    double step = 1e-5, double abs_floor = 1e-7) {
  if (points.empty()) throw ContractError("finite_difference_check: no leaves");

  auto eval = [&](const std::vector<Matrix>& vals) {
    Tape t;
    std::vector<Var> leaves;
    leaves.reserve(vals.size());
    for (const Matrix& m : vals) leaves.push_back(make_leaf(t, m));
    Var out = build(t, leaves);
    const Matrix& v = out.value();
    if (v.rows != 1 || v.cols != 1)
      throw ContractError("finite_difference_check: build must return a scalar");
    return v(0, 0);
  };

  // Analytic pass.
  Tape t;
  std::vector<Var> leaves;
  for (const Matrix& m : points) leaves.push_back(make_leaf(t, m));
  Var out = build(t, leaves);
  if (out.value().rows != 1 || out.value().cols != 1)
    throw ContractError("finite_difference_check: build must return a scalar");
  t.backward(out.id);
  std::vector<Matrix> analytic;
  analytic.reserve(points.size());
  for (const Var& l : leaves) {
    const Matrix& g = t.grad(l.id);
    analytic.push_back(g.empty() ? zeros_like(l.value()) : g);
  }

  GradCheck res;
  std::vector<Matrix> work = points;
  for (std::size_t p = 0; p < points.size(); ++p) {
    for (std::size_t e = 0; e < points[p].data.size(); ++e) {
      const double orig = work[p].data[e];
      work[p].data[e] = orig + step;
      const double fp = eval(work);
      work[p].data[e] = orig - step;
      const double fm = eval(work);
      work[p].data[e] = orig;
      const double numeric = (fp - fm) / (2.0 * step);
      const double a = analytic[p].data[e];
      const double diff = std::fabs(a - numeric);
      double rel = 0.0;
      if (diff > abs_floor)
        rel = diff / std::max(std::fabs(a), std::fabs(numeric));
      res.max_rel_err = std::max(res.max_rel_err, rel);
      ++res.entries;
    }
  }
  return res;
}

}  // namespace gmae
