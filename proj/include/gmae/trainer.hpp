#pragma once

#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gmae/adam.hpp"
#include "gmae/config.hpp"
#include "gmae/error.hpp"
#include "gmae/losses.hpp"
#include "gmae/matrix.hpp"
#include "gmae/model.hpp"
#include "gmae/neighbors.hpp"
#include "gmae/tape.hpp"
#include "gmae/viewset.hpp"

namespace gmae {

// Ordered adversarial pairings (judge view, fake-source view). In "cycle"
// mode each view judges one partner per epoch, rotating through the others
// across epochs; "all_pairs" uses every ordered pair every epoch.
inline std::vector<std::pair<std::size_t, std::size_t>> adversarial_pairs(
    std::size_t views, std::size_t epoch, const std::string& pairing) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  if (views < 2) return out;
  if (pairing == "cycle") {
    const std::size_t shift = epoch % (views - 1);
    for (std::size_t v = 0; v < views; ++v)
      out.emplace_back(v, (v + 1 + shift) % views);
  } else if (pairing == "all_pairs") {
    for (std::size_t v = 0; v < views; ++v)
      for (std::size_t u = 0; u < views; ++u)
        if (u != v) out.emplace_back(v, u);
  } else {
    throw ConfigError("pairing must be \"cycle\" or \"all_pairs\"");
  }
  return out;
}

// One view's presence column from the mask.
inline Matrix mask_column(const ViewSet& data, std::size_t v) {
  Matrix col(data.n(), 1);
  for (std::size_t i = 0; i < data.n(); ++i) col(i, 0) = data.mask(i, v);
  return col;
}

struct MainGraph {
  Var total, ent, q;
  std::vector<Var> rec, cor;      // per view
  std::vector<Var> dis_gen;       // per adversarial pair
  std::vector<Var> z, c;          // per view
  Var c_star;
};

// The full training objective on one tape. The discriminators inside `b`
// must be bound frozen (the generator never updates them directly).
inline MainGraph build_main_graph(
    Tape& t, const BoundModel& b, const ViewSet& data,
    const std::vector<std::vector<std::size_t>>& positives,
    const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
    double alpha, double beta) {
  const std::size_t V = data.v();
  MainGraph g;

  std::vector<Var> masks;
  for (std::size_t v = 0; v < V; ++v)
    masks.push_back(make_constant(t, mask_column(data, v)));

  for (std::size_t v = 0; v < V; ++v) {
    Var x = make_constant(t, data.views[v]);
    Var z = project_z(b, v, encode_specific(b, v, x));
    Var c = project_c(b, v, encode_shared(b, v, x));
    Var xhat = decode(b, v, z, c);
    g.z.push_back(z);
    g.c.push_back(c);
    g.rec.push_back(loss_rec(x, xhat, masks[v]));
    g.cor.push_back(loss_cor(z, c));
  }

  for (const auto& [judge, fake] : pairs)
    g.dis_gen.push_back(
        loss_dis_generator(discriminate(b, judge, g.z[fake]), masks[fake]));

  // Fused representation: consensus first, then each view's specific code.
  Var c_sum = g.c[0];
  for (std::size_t v = 1; v < V; ++v) c_sum = add(c_sum, g.c[v]);
  g.c_star = scale(c_sum, 1.0 / static_cast<double>(V));
  std::vector<Var> qparts{g.c_star};
  for (Var z : g.z) qparts.push_back(z);
  g.q = concat_cols(qparts);
  g.ent = loss_ent(g.q, positives);

  g.total = total_objective(g.rec, g.cor, g.dis_gen, g.ent, alpha, beta);
  return g;
}

struct DiscGraph {
  Var total;
  std::vector<Var> per_pair;
};

// Discriminator objective on detached codes: each judge view scores its own
// samples as real and its partner's as fake. Absent samples stay out of
// both pools.
inline DiscGraph build_disc_graph(
    Tape& t, const BoundModel& b, const std::vector<Matrix>& z_detached,
    const ViewSet& data,
    const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
  DiscGraph g;
  if (pairs.empty()) throw ContractError("disc graph: no adversarial pairs");
  std::vector<Var> z_const, masks;
  for (std::size_t v = 0; v < data.v(); ++v) {
    z_const.push_back(make_constant(t, z_detached[v]));
    masks.push_back(make_constant(t, mask_column(data, v)));
  }
  for (const auto& [judge, fake] : pairs) {
    Var real_scores = discriminate(b, judge, z_const[judge]);
    Var fake_scores = discriminate(b, judge, z_const[fake]);
    g.per_pair.push_back(loss_dis_discriminator(real_scores, fake_scores,
                                                masks[judge], masks[fake]));
  }
  g.total = g.per_pair[0];
  for (std::size_t p = 1; p < g.per_pair.size(); ++p)
    g.total = add(g.total, g.per_pair[p]);
  return g;
}

// Everything logged about one epoch. `epoch` is 1-based in reports; the
// *_sum fields are plain sums of their vectors.
struct EpochStats {
  std::size_t epoch = 0;
  std::vector<double> rec, cor;
  std::vector<double> dis_gen, dis_disc;
  double rec_sum = 0.0, cor_sum = 0.0, dis_gen_sum = 0.0, dis_disc_sum = 0.0;
  double ent = 0.0;
  double total = 0.0;
  double c_align = 0.0;  // mean cross-view distance of the common codes
};

inline void write_epoch_log(std::ostream& out, const EpochStats& s) {
  nlohmann::json j{
      {"epoch", s.epoch},
      {"rec", s.rec},
      {"rec_sum", s.rec_sum},
      {"cor", s.cor},
      {"cor_sum", s.cor_sum},
      {"dis_gen", s.dis_gen},
      {"dis_gen_sum", s.dis_gen_sum},
      {"dis_disc", s.dis_disc},
      {"dis_disc_sum", s.dis_disc_sum},
      {"ent", s.ent},
      {"total", s.total},
      {"c_align", s.c_align},
  };
  out << j.dump() << "\n";
}

// Mean over samples and view pairs of ||c_i^v - c_i^u||_2. Zero for a
// single view. This is the quantity that should shrink as the adversarial
// alignment does its job.
inline double consensus_alignment(const std::vector<Matrix>& c) {
  const std::size_t V = c.size();
  if (V < 2) return 0.0;
  const std::size_t n = c[0].rows;
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t v = 0; v < V; ++v)
    for (std::size_t u = v + 1; u < V; ++u) {
      for (std::size_t i = 0; i < n; ++i) {
        double d2 = 0.0;
        for (std::size_t j = 0; j < c[v].cols; ++j) {
          const double d = c[v](i, j) - c[u](i, j);
          d2 += d * d;
        }
        total += std::sqrt(d2);
      }
      ++pairs;
    }
  return total / static_cast<double>(pairs * n);
}

// Full-batch alternating optimization. Per epoch: refresh neighbor sets on
// the detached fused codes when due, one Adam step on the discriminators
// against detached codes, then one Adam step on everything else with the
// discriminators frozen.
class Trainer {
 public:
  // `data` must already be masked and normalized.
  Trainer(const TrainConfig& cfg, ViewSet data)
      : cfg_(cfg), data_(std::move(data)) {
    validate(cfg_);
    data_.validate();
    if (cfg_.n_omega + 1 >= data_.n())
      throw ConfigError("trainer: n_omega must be far below the sample count");
    if (cfg_.batch_size > 0 && cfg_.batch_size <= cfg_.n_omega + 1)
      throw ConfigError("trainer: batch_size must exceed n_omega + 1");
    ModelDims dims;
    dims.view_dims = data_.view_dims();
    dims.d_z = cfg_.d_z;
    dims.d_c = cfg_.d_c;
    dims.hidden = cfg_.hidden;
    dims.disc_hidden = cfg_.disc_hidden;
    params_ = make_model(dims, derive_seed(cfg_.seed, 10));
    opt_main_.lr = cfg_.learning_rate;
    opt_disc_.lr = cfg_.learning_rate;
  }

  const ModelParams& params() const { return params_; }
  ModelParams& params() { return params_; }
  const ViewSet& data() const { return data_; }
  std::size_t epochs_done() const { return epoch_; }

  Embeddings embeddings() { return forward_embeddings(params_, data_.views); }

  EpochStats train_epoch() {
    // Inputs were validated up front, so a math-domain failure mid-epoch
    // (log of a NaN sum, zero-norm code rows) means the optimization blew
    // up numerically, not that the caller misused the API.
    try {
      return train_epoch_impl();
    } catch (const DomainError& e) {
      throw TrainError("training diverged at epoch " +
                       std::to_string(epoch_ + 1) + ": " + e.what());
    }
  }

 private:
  EpochStats train_epoch_impl() {
    if (cfg_.batch_size > 0 && cfg_.batch_size < data_.n())
      return train_epoch_chunked();
    if (epoch_ % cfg_.neighbor_refresh == 0)
      positives_ = build_neighbor_sets(embeddings().q, cfg_.n_omega);
    EpochStats s = step_on(data_, positives_);
    s.epoch = ++epoch_;
    if (!std::isfinite(s.total))
      throw TrainError("training diverged at epoch " + std::to_string(s.epoch));
    return s;
  }

 private:
  // One discriminator step and one main step on `batch`.
  EpochStats step_on(const ViewSet& batch,
                     const std::vector<std::vector<std::size_t>>& positives) {
    const auto pairs = adversarial_pairs(batch.v(), epoch_, cfg_.pairing);
    EpochStats s;

    if (!pairs.empty()) {
      Embeddings detached = forward_embeddings(params_, batch.views);
      Tape t;
      BoundModel b = bind_model(t, params_, Trainable::disc_only);
      DiscGraph dg = build_disc_graph(t, b, detached.z, batch, pairs);
      t.backward(dg.total.id);
      apply_gradients(t, b, Trainable::disc_only, opt_disc_);
      for (Var p : dg.per_pair) s.dis_disc.push_back(p.value()(0, 0));
    }

    Tape t;
    BoundModel b = bind_model(t, params_, Trainable::main_only);
    MainGraph g = build_main_graph(t, b, batch, positives, pairs,
                                   cfg_.alpha, cfg_.beta);
    t.backward(g.total.id);
    apply_gradients(t, b, Trainable::main_only, opt_main_);

    for (Var r : g.rec) s.rec.push_back(r.value()(0, 0));
    for (Var c : g.cor) s.cor.push_back(c.value()(0, 0));
    for (Var d : g.dis_gen) s.dis_gen.push_back(d.value()(0, 0));
    s.ent = g.ent.value()(0, 0);
    s.total = g.total.value()(0, 0);
    std::vector<Matrix> c_values;
    for (Var c : g.c) c_values.push_back(c.value());
    s.c_align = consensus_alignment(c_values);
    for (double x : s.rec) s.rec_sum += x;
    for (double x : s.cor) s.cor_sum += x;
    for (double x : s.dis_gen) s.dis_gen_sum += x;
    for (double x : s.dis_disc) s.dis_disc_sum += x;
    return s;
  }

  // Consecutive row chunks, each with its own neighbor sets. The logged
  // epoch values are sums over chunks; `ent` and `c_align` are weighted by
  // chunk size so they stay on the full-batch scale.
  EpochStats train_epoch_chunked() {
    const std::size_t n = data_.n(), bs = cfg_.batch_size;
    const bool refresh = epoch_ % cfg_.neighbor_refresh == 0;
    if (refresh) chunk_positives_.clear();

    // Fixed chunk boundaries; a tail too small to hold a neighborhood is
    // merged into the chunk before it so no row is ever skipped.
    std::vector<std::pair<std::size_t, std::size_t>> bounds;
    for (std::size_t begin = 0; begin < n; begin += bs)
      bounds.emplace_back(begin, std::min(begin + bs, n));
    if (bounds.size() > 1 &&
        bounds.back().second - bounds.back().first <= cfg_.n_omega + 1) {
      bounds[bounds.size() - 2].second = n;
      bounds.pop_back();
    }

    EpochStats s;
    for (std::size_t chunk_idx = 0; chunk_idx < bounds.size(); ++chunk_idx) {
      const auto [begin, end] = bounds[chunk_idx];
      ViewSet chunk = slice_rows(data_, begin, end);
      if (refresh || chunk_idx >= chunk_positives_.size()) {
        Embeddings e = forward_embeddings(params_, chunk.views);
        if (chunk_idx < chunk_positives_.size())
          chunk_positives_[chunk_idx] = build_neighbor_sets(e.q, cfg_.n_omega);
        else
          chunk_positives_.push_back(build_neighbor_sets(e.q, cfg_.n_omega));
      }
      EpochStats cs = step_on(chunk, chunk_positives_[chunk_idx]);
      accumulate(s, cs, static_cast<double>(end - begin) / static_cast<double>(n));
    }
    s.total = s.rec_sum + cfg_.alpha * (s.cor_sum + s.dis_gen_sum) +
              cfg_.beta * s.ent;
    s.epoch = ++epoch_;
    if (!std::isfinite(s.total))
      throw TrainError("training diverged at epoch " + std::to_string(s.epoch));
    return s;
  }

  static ViewSet slice_rows(const ViewSet& vs, std::size_t begin, std::size_t end) {
    ViewSet out;
    for (const Matrix& m : vs.views) {
      Matrix s(end - begin, m.cols);
      for (std::size_t i = begin; i < end; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) s(i - begin, j) = m(i, j);
      out.views.push_back(std::move(s));
    }
    if (!vs.labels.empty())
      out.labels.assign(vs.labels.begin() + static_cast<std::ptrdiff_t>(begin),
                        vs.labels.begin() + static_cast<std::ptrdiff_t>(end));
    out.mask = Matrix(end - begin, vs.v());
    for (std::size_t i = begin; i < end; ++i)
      for (std::size_t v = 0; v < vs.v(); ++v)
        out.mask(i - begin, v) = vs.mask(i, v);
    return out;
  }

  static void accumulate(EpochStats& s, const EpochStats& cs, double weight) {
    auto add_vec = [](std::vector<double>& dst, const std::vector<double>& src) {
      if (dst.size() < src.size()) dst.resize(src.size(), 0.0);
      for (std::size_t i = 0; i < src.size(); ++i) dst[i] += src[i];
    };
    add_vec(s.rec, cs.rec);
    add_vec(s.cor, cs.cor);
    add_vec(s.dis_gen, cs.dis_gen);
    add_vec(s.dis_disc, cs.dis_disc);
    s.rec_sum += cs.rec_sum;
    s.cor_sum += cs.cor_sum;
    s.dis_gen_sum += cs.dis_gen_sum;
    s.dis_disc_sum += cs.dis_disc_sum;
    s.ent += weight * cs.ent;
    s.c_align += weight * cs.c_align;
  }

  // Pull gradients off the tape in parameter order and take one Adam step.
  void apply_gradients(const Tape& t, const BoundModel& b, Trainable mode,
                       AdamState& opt) {
    std::vector<Matrix*> slots;
    std::vector<const Matrix*> grads;
    auto collect_mlp = [&](const BoundMlp& bound, Mlp& stored) {
      for (std::size_t l = 0; l < stored.w.size(); ++l) {
        slots.push_back(&stored.w[l]);
        const Matrix& gw = t.grad(bound.w[l].id);
        grads.push_back(gw.empty() ? nullptr : &gw);
        slots.push_back(&stored.b[l]);
        const Matrix& gb = t.grad(bound.b[l].id);
        grads.push_back(gb.empty() ? nullptr : &gb);
      }
    };
    if (mode == Trainable::main_only) {
      for (std::size_t v = 0; v < params_.enc_spec.size(); ++v)
        collect_mlp(b.enc_spec[v], params_.enc_spec[v]);
      for (std::size_t v = 0; v < params_.adapter.size(); ++v)
        collect_mlp(b.adapter[v], params_.adapter[v]);
      if (params_.has_trunk()) collect_mlp(b.trunk, params_.trunk);
      for (std::size_t v = 0; v < params_.head_z.size(); ++v)
        collect_mlp(b.head_z[v], params_.head_z[v]);
      for (std::size_t v = 0; v < params_.head_c.size(); ++v)
        collect_mlp(b.head_c[v], params_.head_c[v]);
      for (std::size_t v = 0; v < params_.dec.size(); ++v)
        collect_mlp(b.dec[v], params_.dec[v]);
    } else {
      for (std::size_t v = 0; v < params_.disc.size(); ++v)
        collect_mlp(b.disc[v], params_.disc[v]);
    }
    adam_step(opt, slots, grads);
  }

  TrainConfig cfg_;
  ViewSet data_;
  ModelParams params_;
  AdamState opt_main_, opt_disc_;
  std::vector<std::vector<std::size_t>> positives_;
  std::vector<std::vector<std::vector<std::size_t>>> chunk_positives_;
  std::size_t epoch_ = 0;
};

struct FitResult {
  ModelParams params;
  std::vector<EpochStats> history;
  Embeddings final_embeddings;
  std::vector<std::size_t> view_dims;
};

// Standard preparation + full training loop. Preparation order matters:
// missing entries are hidden first so normalization statistics only see
// rows that are actually present.
inline FitResult fit(ViewSet data, const TrainConfig& cfg,
                     std::ostream* log = nullptr) {
  validate(cfg);
  if (cfg.missing_ratio > 0.0) apply_missing(data, cfg.missing_ratio, cfg.seed);
  normalize_views(data, cfg.normalize);

  Trainer trainer(cfg, std::move(data));
  FitResult out;
  out.view_dims = trainer.data().view_dims();
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    EpochStats s = trainer.train_epoch();
    if (log) write_epoch_log(*log, s);
    out.history.push_back(std::move(s));
  }
  out.final_embeddings = trainer.embeddings();
  out.params = trainer.params();
  return out;
}

}  // namespace gmae
