#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "gmae/error.hpp"
#include "gmae/matrix.hpp"

namespace gmae {

// Adam with bias correction. Slots are allocated on the first step and keyed
// by position, so the same parameter list (same order, same shapes) must be
// passed on every step.
struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t t = 0;
  std::vector<Matrix> m, v;
};

// grads[i] == nullptr means no gradient reached that parameter this step; it
// is treated as an all-zero gradient (moments still decay).
inline void adam_step(AdamState& st, const std::vector<Matrix*>& params,
                      const std::vector<const Matrix*>& grads) {
  if (params.size() != grads.size())
    throw ContractError("adam_step: params/grads size mismatch");
  if (st.m.empty()) {
    for (Matrix* p : params) {
      st.m.push_back(zeros_like(*p));
      st.v.push_back(zeros_like(*p));
    }
  }
  if (st.m.size() != params.size())
    throw ContractError("adam_step: parameter list changed size across steps");

  st.t += 1;
  const double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.t));
  const double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.t));

  for (std::size_t k = 0; k < params.size(); ++k) {
    Matrix& p = *params[k];
    Matrix& m = st.m[k];
    Matrix& v = st.v[k];
    if (!p.same_shape(m))
      throw ContractError("adam_step: parameter shape changed across steps");
    if (grads[k] && !grads[k]->same_shape(p))
      throw DimError("adam_step: gradient shape does not match parameter");
    for (std::size_t i = 0; i < p.data.size(); ++i) {
      const double g = grads[k] ? grads[k]->data[i] : 0.0;
      m.data[i] = st.beta1 * m.data[i] + (1.0 - st.beta1) * g;
      v.data[i] = st.beta2 * v.data[i] + (1.0 - st.beta2) * g * g;
      const double mhat = m.data[i] / bc1;
      const double vhat = v.data[i] / bc2;
      p.data[i] -= st.lr * mhat / (std::sqrt(vhat) + st.eps);
    }
  }
}

}  // namespace gmae
