#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "gmae/error.hpp"
#include "gmae/matrix.hpp"
#include "gmae/mlp.hpp"
#include "gmae/tape.hpp"

namespace gmae {

// Widths that define every network in the model. `hidden` is the encoder
// ladder after the input layer; the decoder mirrors it back out.
struct ModelDims {
  std::vector<std::size_t> view_dims;
  std::size_t d_z = 64;
  std::size_t d_c = 64;
  std::vector<std::size_t> hidden = {512, 256};
  std::vector<std::size_t> disc_hidden = {128};

  std::size_t views() const { return view_dims.size(); }
  std::size_t rep_width() const { return hidden.back(); }
  std::size_t q_width() const { return d_c + views() * d_z; }

  void validate() const {
    if (view_dims.empty()) throw ConfigError("model: no views");
    for (std::size_t d : view_dims)
      if (d == 0) throw ConfigError("model: zero-width view");
    if (d_z == 0 || d_c == 0) throw ConfigError("model: zero representation width");
    if (hidden.empty()) throw ConfigError("model: empty hidden widths");
    for (std::size_t h : hidden)
      if (h == 0) throw ConfigError("model: zero hidden width");
    for (std::size_t h : disc_hidden)
      if (h == 0) throw ConfigError("model: zero discriminator width");
  }
};

// All trainable state. Each view owns a specific encoder, an input adapter
// into the shared encoder, two projection heads, a decoder, and a
// discriminator; the deep layers of the shared encoder (the trunk) are one
// network reused by every view.
struct ModelParams {
  ModelDims dims;
  std::vector<Mlp> enc_spec;    // d_v -> hidden..., relu between, linear out
  std::vector<Mlp> adapter;     // d_v -> hidden[0], single affine
  Mlp trunk;                    // hidden[0] -> ... -> hidden.back(); absent if
                                // hidden has a single entry
  std::vector<Mlp> head_z;      // rep -> d_z, single affine
  std::vector<Mlp> head_c;      // rep -> d_c, single affine
  std::vector<Mlp> dec;         // d_z+d_c -> reverse(hidden) -> d_v
  std::vector<Mlp> disc;        // d_z -> disc_hidden... -> 1, sigmoid out

  bool has_trunk() const { return trunk.spec.widths.size() >= 2; }

  // Stable enumeration of every parameter matrix. Checkpoints, Adam slots
  // and leaf registration all rely on this order.
  template <typename F>
  void for_each_param(F&& fn) {
    for_each_main(fn);
    for_each_disc(fn);
  }
  template <typename F>
  void for_each_main(F&& fn) {
    auto walk = [&](const std::string& name, Mlp& m) {
      for (std::size_t l = 0; l < m.w.size(); ++l) {
        fn(name + ".w" + std::to_string(l), m.w[l]);
        fn(name + ".b" + std::to_string(l), m.b[l]);
      }
    };
    for (std::size_t v = 0; v < enc_spec.size(); ++v)
      walk("enc_spec." + std::to_string(v), enc_spec[v]);
    for (std::size_t v = 0; v < adapter.size(); ++v)
      walk("adapter." + std::to_string(v), adapter[v]);
    if (has_trunk()) walk("trunk", trunk);
    for (std::size_t v = 0; v < head_z.size(); ++v)
      walk("head_z." + std::to_string(v), head_z[v]);
    for (std::size_t v = 0; v < head_c.size(); ++v)
      walk("head_c." + std::to_string(v), head_c[v]);
    for (std::size_t v = 0; v < dec.size(); ++v)
      walk("dec." + std::to_string(v), dec[v]);
  }
  template <typename F>
  void for_each_disc(F&& fn) {
    for (std::size_t v = 0; v < disc.size(); ++v) {
      Mlp& m = disc[v];
      for (std::size_t l = 0; l < m.w.size(); ++l) {
        fn("disc." + std::to_string(v) + ".w" + std::to_string(l), m.w[l]);
        fn("disc." + std::to_string(v) + ".b" + std::to_string(l), m.b[l]);
      }
    }
  }

  std::size_t param_count() {
    std::size_t n = 0;
    for_each_param([&](const std::string&, Matrix& m) { n += m.size(); });
    return n;
  }
};

inline ModelParams make_model(const ModelDims& dims, std::uint64_t seed) {
  dims.validate();
  ModelParams p;
  p.dims = dims;
  std::mt19937_64 rng(seed);
  const std::size_t V = dims.views();

  auto widths_with = [&](std::size_t first, const std::vector<std::size_t>& rest) {
    std::vector<std::size_t> w{first};
    w.insert(w.end(), rest.begin(), rest.end());
    return w;
  };

  for (std::size_t v = 0; v < V; ++v)
    p.enc_spec.push_back(make_mlp({widths_with(dims.view_dims[v], dims.hidden)}, rng));
  for (std::size_t v = 0; v < V; ++v)
    p.adapter.push_back(make_mlp({{dims.view_dims[v], dims.hidden[0]}}, rng));
  if (dims.hidden.size() > 1) p.trunk = make_mlp({dims.hidden}, rng);
  for (std::size_t v = 0; v < V; ++v)
    p.head_z.push_back(make_mlp({{dims.rep_width(), dims.d_z}}, rng));
  for (std::size_t v = 0; v < V; ++v)
    p.head_c.push_back(make_mlp({{dims.rep_width(), dims.d_c}}, rng));
  for (std::size_t v = 0; v < V; ++v) {
    std::vector<std::size_t> w{dims.d_z + dims.d_c};
    w.insert(w.end(), dims.hidden.rbegin(), dims.hidden.rend());
    w.push_back(dims.view_dims[v]);
    p.dec.push_back(make_mlp({w}, rng));
  }
  for (std::size_t v = 0; v < V; ++v) {
    std::vector<std::size_t> w{dims.d_z};
    w.insert(w.end(), dims.disc_hidden.begin(), dims.disc_hidden.end());
    w.push_back(1);
    MlpSpec spec{w};
    spec.output = Activation::sigmoid;
    p.disc.push_back(make_mlp(spec, rng));
  }
  return p;
}

// Which parameter groups become tape leaves when binding.
enum class Trainable { none, main_only, disc_only };

struct BoundModel {
  const ModelParams* params = nullptr;
  std::vector<BoundMlp> enc_spec, adapter, head_z, head_c, dec, disc;
  BoundMlp trunk;
  bool trunk_bound = false;
};

inline BoundModel bind_model(Tape& t, const ModelParams& p, Trainable mode) {
  const bool main_train = mode == Trainable::main_only;
  const bool disc_train = mode == Trainable::disc_only;
  BoundModel b;
  b.params = &p;
  for (const Mlp& m : p.enc_spec) b.enc_spec.push_back(bind_mlp(t, m, main_train));
  for (const Mlp& m : p.adapter) b.adapter.push_back(bind_mlp(t, m, main_train));
  if (p.has_trunk()) {
    b.trunk = bind_mlp(t, p.trunk, main_train);
    b.trunk_bound = true;
  }
  for (const Mlp& m : p.head_z) b.head_z.push_back(bind_mlp(t, m, main_train));
  for (const Mlp& m : p.head_c) b.head_c.push_back(bind_mlp(t, m, main_train));
  for (const Mlp& m : p.dec) b.dec.push_back(bind_mlp(t, m, main_train));
  for (const Mlp& m : p.disc) b.disc.push_back(bind_mlp(t, m, disc_train));
  return b;
}

// Specific path: x -> view-specific encoder -> h_spec.
inline Var encode_specific(const BoundModel& b, std::size_t v, Var x) {
  if (v >= b.enc_spec.size()) throw ContractError("encode_specific: view index out of range");
  return mlp_forward(b.enc_spec[v], x);
}

// Common path: x -> per-view adapter -> shared trunk -> h_shared. The
// adapter is the first layer of the shared encoder, so the boundary
// activation matches the trunk's hidden activation.
inline Var encode_shared(const BoundModel& b, std::size_t v, Var x) {
  if (v >= b.adapter.size()) throw ContractError("encode_shared: view index out of range");
  Var h = mlp_forward(b.adapter[v], x);
  if (b.trunk_bound) {
    h = apply_activation(h, b.trunk.def->spec.hidden);
    h = mlp_forward(b.trunk, h);
  }
  return h;
}

inline Var project_z(const BoundModel& b, std::size_t v, Var h) {
  if (v >= b.head_z.size()) throw ContractError("project_z: view index out of range");
  return mlp_forward(b.head_z[v], h);
}

inline Var project_c(const BoundModel& b, std::size_t v, Var h) {
  if (v >= b.head_c.size()) throw ContractError("project_c: view index out of range");
  return mlp_forward(b.head_c[v], h);
}

// Decoder input is the row-wise concatenation [z | c], z first.
inline Var decode(const BoundModel& b, std::size_t v, Var z, Var c) {
  if (v >= b.dec.size()) throw ContractError("decode: view index out of range");
  return mlp_forward(b.dec[v], concat_cols({z, c}));
}

inline Var discriminate(const BoundModel& b, std::size_t v, Var z) {
  if (v >= b.disc.size()) throw ContractError("discriminate: view index out of range");
  return mlp_forward(b.disc[v], z);
}

// Per-view representations of one full pass, as plain value matrices.
struct Embeddings {
  std::vector<Matrix> z;  // V of N x d_z
  std::vector<Matrix> c;  // V of N x d_c
  Matrix c_star;          // N x d_c, mean of c over views
  Matrix q;               // N x (d_c + V * d_z), [c_star | z_1 | ... | z_V]
};

// Elementwise mean of the per-view common representations.
inline Matrix assemble_consensus(const std::vector<Matrix>& c) {
  if (c.empty()) throw ContractError("assemble_consensus: no views");
  for (const Matrix& m : c)
    if (!m.same_shape(c[0]))
      throw DimError("assemble_consensus: view shapes disagree");
  Matrix out = zeros_like(c[0]);
  for (const Matrix& m : c)
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += m.data[i];
  const double inv = 1.0 / static_cast<double>(c.size());
  for (double& x : out.data) x *= inv;
  return out;
}

// Forward pass with every parameter frozen; used for neighbor refreshes,
// evaluation and exporting representations.
inline Embeddings forward_embeddings(const ModelParams& p,
                                     const std::vector<Matrix>& views) {
  if (views.size() != p.dims.views())
    throw DimError("forward_embeddings: view count does not match model");
  Tape t;
  BoundModel b = bind_model(t, p, Trainable::none);
  Embeddings e;
  std::vector<Var> zs;
  for (std::size_t v = 0; v < views.size(); ++v) {
    Var x = make_constant(t, views[v]);
    Var hs = encode_specific(b, v, x);
    Var hc = encode_shared(b, v, x);
    Var z = project_z(b, v, hs);
    Var c = project_c(b, v, hc);
    e.z.push_back(z.value());
    e.c.push_back(c.value());
    zs.push_back(z);
  }
  e.c_star = assemble_consensus(e.c);
  std::vector<Var> qparts{make_constant(t, e.c_star)};
  for (Var z : zs) qparts.push_back(z);
  e.q = concat_cols(qparts).value();
  return e;
}

}  // namespace gmae
