#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "gmae/error.hpp"
#include "gmae/matrix.hpp"
#include "gmae/tape.hpp"

namespace gmae {

enum class Activation { linear, relu, sigmoid, tanh };

inline const char* activation_name(Activation a) {
  switch (a) {
    case Activation::linear: return "linear";
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::tanh: return "tanh";
  }
  return "unknown";
}

// Fully connected stack. widths lists every layer boundary including input
// and output, so {3, 512, 256} is two affine layers. `hidden` is applied
// between layers, `output` after the last one.
struct MlpSpec {
  std::vector<std::size_t> widths;
  Activation hidden = Activation::relu;
  Activation output = Activation::linear;

  std::size_t layer_count() const {
    return widths.size() < 2 ? 0 : widths.size() - 1;
  }
};

struct Mlp {
  MlpSpec spec;
  std::vector<Matrix> w;  // per layer, in_dim x out_dim
  std::vector<Matrix> b;  // per layer, 1 x out_dim

  std::size_t in_dim() const { return spec.widths.front(); }
  std::size_t out_dim() const { return spec.widths.back(); }

  std::size_t param_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < w.size(); ++l) n += w[l].size() + b[l].size();
    return n;
  }
};

// Glorot uniform init, biases zero. Entries are drawn layer by layer in
// row-major order from the supplied engine, so one seed pins every weight.
inline Mlp make_mlp(const MlpSpec& spec, std::mt19937_64& rng) {
  if (spec.widths.size() < 2) throw ConfigError("mlp: needs at least two widths");
  for (std::size_t wd : spec.widths)
    if (wd == 0) throw ConfigError("mlp: zero layer width");
  Mlp m;
  m.spec = spec;
  for (std::size_t l = 0; l + 1 < spec.widths.size(); ++l) {
    const std::size_t fan_in = spec.widths[l], fan_out = spec.widths[l + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> u(-limit, limit);
    Matrix wl(fan_in, fan_out);
    for (double& x : wl.data) x = u(rng);
    m.w.push_back(std::move(wl));
    m.b.emplace_back(1, fan_out, 0.0);
  }
  return m;
}

inline Var apply_activation(Var x, Activation a) {
  switch (a) {
    case Activation::linear: return x;
    case Activation::relu: return relu(x);
    case Activation::sigmoid: return sigmoid(x);
    case Activation::tanh: return tanh_v(x);
  }
  throw ContractError("unknown activation");
}

// An Mlp bound onto a tape: its layer matrices registered either as leaves
// (trainable this step) or constants (frozen).
struct BoundMlp {
  const Mlp* def = nullptr;
  std::vector<Var> w, b;
};

inline BoundMlp bind_mlp(Tape& t, const Mlp& m, bool trainable) {
  BoundMlp bm;
  bm.def = &m;
  for (std::size_t l = 0; l < m.w.size(); ++l) {
    bm.w.push_back(trainable ? make_leaf(t, m.w[l]) : make_constant(t, m.w[l]));
    bm.b.push_back(trainable ? make_leaf(t, m.b[l]) : make_constant(t, m.b[l]));
  }
  return bm;
}

inline Var mlp_forward(const BoundMlp& bm, Var x) {
  if (x.value().cols != bm.def->in_dim())
    throw DimError("mlp forward: input width does not match first layer");
  Var h = x;
  const std::size_t L = bm.w.size();
  for (std::size_t l = 0; l < L; ++l) {
    h = add(matmul(h, bm.w[l]), bm.b[l]);
    h = apply_activation(h, l + 1 < L ? bm.def->spec.hidden : bm.def->spec.output);
  }
  return h;
}

}  // namespace gmae
