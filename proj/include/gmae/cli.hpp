#pragma once

// Command implementations behind the command-line tool. Each cmd_* function
// does the work and throws on failure; run_command maps exceptions onto
// process exit codes. Keeping these out of main() lets the test suite drive
// them in-process.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "gmae/checkpoint.hpp"
#include "gmae/config.hpp"
#include "gmae/error.hpp"
#include "gmae/kmeans.hpp"
#include "gmae/matrix.hpp"
#include "gmae/metrics.hpp"
#include "gmae/model.hpp"
#include "gmae/pca.hpp"
#include "gmae/trainer.hpp"
#include "gmae/viewset.hpp"

namespace gmae {

inline constexpr const char* kToolVersion = "0.1.0";

// Exit codes: 1 bad configuration or shape, 2 file problems, 3 failures of
// the numeric work itself.
template <typename F>
int run_command(F&& body, std::ostream& err = std::cerr) {
  try {
    body();
    return 0;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const TrainError& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

inline std::string resolve_out_dir(const std::string& given, const char* command) {
  if (!given.empty()) return given;
  const char* root = std::getenv("GMAE_OUT_ROOT");
  if (root && *root) return std::string(root) + "/" + command;
  throw ConfigError("no --out given and GMAE_OUT_ROOT is not set");
}

namespace detail {

inline std::string data_hash_hex(const ViewSet& vs) {
  std::uint64_t h = 1469598103934665603ull;
  for (const Matrix& m : vs.views) h = fnv1a(m, h);
  h = fnv1a(vs.mask, h);
  if (!vs.labels.empty())
    h = fnv1a(vs.labels.data(), vs.labels.size() * sizeof(int), h);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline void write_json_file(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << j.dump(2) << "\n";
  if (!out) throw IoError("write failed for " + path);
}

// Wall-clock duration lives only in the manifest; every other output file
// is a pure function of its inputs.
inline void write_manifest(const std::string& dir, const char* command,
                           const std::string& data_hash,
                           std::vector<std::string> outputs, double seconds,
                           nlohmann::json extra = nlohmann::json::object()) {
  nlohmann::json j{{"command", command},
                   {"tool_version", kToolVersion},
                   {"data_hash", data_hash},
                   {"outputs", outputs},
                   {"duration_seconds", seconds}};
  j.update(extra);
  write_json_file(dir + "/manifest.json", j);
}

inline void write_embeddings_csv(const std::string& path, const Matrix& q,
                                 const std::vector<int>& labels) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  for (std::size_t j = 0; j < q.cols; ++j) out << (j ? "," : "") << "q" << j;
  if (!labels.empty()) out << ",label";
  out << "\n";
  char buf[64];
  for (std::size_t i = 0; i < q.rows; ++i) {
    for (std::size_t j = 0; j < q.cols; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", q(i, j));
      out << (j ? "," : "") << buf;
    }
    if (!labels.empty()) out << "," << labels[i];
    out << "\n";
  }
  if (!out) throw IoError("write failed for " + path);
}

struct EmbeddingsFile {
  Matrix q;
  std::vector<int> labels;  // empty when the file has no label column
};

inline EmbeddingsFile read_embeddings_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string header;
  if (!std::getline(in, header)) throw IoError(path + ": empty file");
  auto cols = split_csv_line(header);
  const bool labeled = !cols.empty() && cols.back() == "label";
  in.close();

  Matrix all = load_csv_matrix(path);
  EmbeddingsFile out;
  if (!labeled) {
    out.q = std::move(all);
    return out;
  }
  if (all.cols < 2) throw IoError(path + ": label column but no data columns");
  out.q = Matrix(all.rows, all.cols - 1);
  out.labels.resize(all.rows);
  for (std::size_t i = 0; i < all.rows; ++i) {
    for (std::size_t j = 0; j + 1 < all.cols; ++j) out.q(i, j) = all(i, j);
    out.labels[i] = static_cast<int>(all(i, all.cols - 1));
  }
  return out;
}

// Cluster count precedence: explicit override, then the config, then the
// number of distinct labels in the data.
inline std::size_t resolve_k(std::optional<std::size_t> override_k,
                             std::size_t config_k,
                             const std::vector<int>& labels, std::ostream& warn) {
  std::size_t k = 0;
  if (override_k && *override_k > 0)
    k = *override_k;
  else if (config_k > 0)
    k = config_k;
  else if (!labels.empty())
    k = distinct_labels(labels);
  if (k == 0)
    throw ConfigError("cannot infer cluster count: pass --k, set k in the "
                      "config, or provide labels.csv");
  if (!labels.empty() && k != distinct_labels(labels)) {
    nlohmann::json j{{"warning", "cluster count differs from label classes"},
                     {"k", k},
                     {"label_classes", distinct_labels(labels)}};
    warn << j.dump() << "\n";
  }
  return k;
}

inline nlohmann::json clustering_report(const Matrix& q, std::size_t k,
                                        const std::vector<int>& labels,
                                        std::uint64_t seed) {
  auto km = kmeans(q, k, derive_seed(seed, 20));
  nlohmann::json j{{"k", k}, {"inertia", km.inertia}};
  if (!labels.empty()) {
    auto s = evaluate_clustering(km.assignments, labels);
    j["acc"] = s.acc;
    j["nmi"] = s.nmi;
    j["purity"] = s.purity;
  }
  return j;
}

struct Stopwatch {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
        .count();
  }
};

}  // namespace detail

// ---------------------------------------------------------------------------

struct SynthArgs {
  std::string out_dir;
  SynthSpec spec;
};

inline void cmd_synth(const SynthArgs& args) {
  detail::Stopwatch timer;
  const std::string out = resolve_out_dir(args.out_dir, "synth");
  ViewSet vs = generate_synthetic(args.spec);
  save_viewset(out, vs);
  std::vector<std::string> outputs{"mask.csv", "labels.csv"};
  for (std::size_t v = 0; v < vs.v(); ++v)
    outputs.push_back("view_" + std::to_string(v) + ".csv");
  detail::write_manifest(out, "synth", detail::data_hash_hex(vs), outputs,
                         timer.seconds());
}

struct MaskArgs {
  std::string data_dir, out_dir;
  double ratio = 0.0;
  std::uint64_t seed = 42;
};

inline void cmd_mask(const MaskArgs& args) {
  detail::Stopwatch timer;
  const std::string out = resolve_out_dir(args.out_dir, "mask");
  ViewSet vs = load_viewset(args.data_dir);
  apply_missing(vs, args.ratio, args.seed);
  save_viewset(out, vs);
  std::vector<std::string> outputs{"mask.csv"};
  for (std::size_t v = 0; v < vs.v(); ++v)
    outputs.push_back("view_" + std::to_string(v) + ".csv");
  if (!vs.labels.empty()) outputs.push_back("labels.csv");
  detail::write_manifest(out, "mask", detail::data_hash_hex(vs), outputs,
                         timer.seconds());
}

struct TrainArgs {
  std::string data_dir, out_dir, config_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> missing_ratio;
  std::optional<std::size_t> k;
};

inline TrainConfig resolve_train_config(const TrainArgs& args) {
  TrainConfig cfg =
      args.config_path.empty() ? TrainConfig{} : load_train_config(args.config_path);
  if (args.seed) cfg.seed = *args.seed;
  if (args.missing_ratio) cfg.missing_ratio = *args.missing_ratio;
  if (args.k) cfg.k = *args.k;
  validate(cfg);
  return cfg;
}

inline void cmd_train(const TrainArgs& args, std::ostream& warn = std::cerr) {
  detail::Stopwatch timer;
  TrainConfig cfg = resolve_train_config(args);
  const std::string out = resolve_out_dir(args.out_dir, "train");
  ViewSet raw = load_viewset(args.data_dir);
  const std::string data_hash = detail::data_hash_hex(raw);

  std::filesystem::create_directories(out);
  detail::write_json_file(out + "/config.json", to_json(cfg));

  std::ofstream log(out + "/train_log.jsonl");
  if (!log) throw IoError("cannot open " + out + "/train_log.jsonl for writing");
  FitResult r = fit(raw, cfg, &log);
  log.close();

  save_checkpoint(out + "/checkpoint.bin", cfg, r.view_dims, r.params);
  detail::write_embeddings_csv(out + "/embeddings.csv", r.final_embeddings.q,
                               raw.labels);

  nlohmann::json metrics = detail::clustering_report(
      r.final_embeddings.q,
      detail::resolve_k(std::nullopt, cfg.k, raw.labels, warn), raw.labels,
      cfg.seed);
  metrics["epochs"] = r.history.size();
  if (!r.history.empty()) {
    metrics["final_total"] = r.history.back().total;
    metrics["c_align_first"] = r.history.front().c_align;
    metrics["c_align_final"] = r.history.back().c_align;
  }
  detail::write_json_file(out + "/metrics.json", metrics);

  detail::write_manifest(out, "train", data_hash,
                         {"config.json", "train_log.jsonl", "checkpoint.bin",
                          "embeddings.csv", "metrics.json"},
                         timer.seconds());
}

struct EvalArgs {
  std::string checkpoint_path, data_dir, out_dir;
  std::optional<std::size_t> k;
};

inline void cmd_eval(const EvalArgs& args, std::ostream& warn = std::cerr) {
  detail::Stopwatch timer;
  const std::string out = resolve_out_dir(args.out_dir, "eval");
  Checkpoint ck = load_checkpoint(args.checkpoint_path);
  ViewSet vs = load_viewset(args.data_dir);
  if (vs.view_dims() != ck.view_dims)
    throw DimError("eval: data views do not match the checkpoint");
  const std::string data_hash = detail::data_hash_hex(vs);

  normalize_views(vs, ck.config.normalize);
  Embeddings e = forward_embeddings(ck.params, vs.views);

  std::filesystem::create_directories(out);
  detail::write_embeddings_csv(out + "/embeddings.csv", e.q, vs.labels);
  nlohmann::json metrics = detail::clustering_report(
      e.q, detail::resolve_k(args.k, ck.config.k, vs.labels, warn), vs.labels,
      ck.config.seed);
  detail::write_json_file(out + "/metrics.json", metrics);
  detail::write_manifest(out, "eval", data_hash,
                         {"embeddings.csv", "metrics.json"}, timer.seconds());
}

struct ProjectArgs {
  std::string embeddings_path, out_dir;
};

inline void cmd_project(const ProjectArgs& args) {
  detail::Stopwatch timer;
  const std::string out = resolve_out_dir(args.out_dir, "project");
  detail::EmbeddingsFile emb = detail::read_embeddings_csv(args.embeddings_path);
  Pca2 p = pca_2d(emb.q);

  std::filesystem::create_directories(out);
  std::ofstream proj(out + "/projection.csv");
  if (!proj) throw IoError("cannot open " + out + "/projection.csv for writing");
  proj << "x,y,label\n";
  char buf[64];
  for (std::size_t i = 0; i < p.coords.rows; ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", p.coords(i, 0));
    proj << buf << ",";
    std::snprintf(buf, sizeof buf, "%.17g", p.coords(i, 1));
    proj << buf << "," << (emb.labels.empty() ? -1 : emb.labels[i]) << "\n";
  }
  if (!proj) throw IoError("write failed for " + out + "/projection.csv");

  std::uint64_t h = fnv1a(emb.q);
  char hex[32];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  detail::write_manifest(out, "project", hex, {"projection.csv"}, timer.seconds(),
                         {{"residual_fraction", p.residual_fraction}});
}

// ---------------------------------------------------------------------------

// "lo:hi:step" -> the inclusive arithmetic progression it describes.
inline std::vector<double> parse_range(const std::string& text) {
  std::vector<std::string> parts;
  std::string cur;
  for (char ch : text) {
    if (ch == ':') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  parts.push_back(cur);
  if (parts.size() != 3)
    throw ConfigError("range \"" + text + "\" must look like lo:hi:step");
  double vals[3];
  for (int i = 0; i < 3; ++i) {
    const char* b = parts[i].c_str();
    char* e = nullptr;
    vals[i] = std::strtod(b, &e);
    if (e == b || *e != '\0')
      throw ConfigError("range \"" + text + "\" has a malformed number");
  }
  const double lo = vals[0], hi = vals[1], step = vals[2];
  if (!(step > 0.0)) throw ConfigError("range step must be positive");
  if (hi < lo - 1e-12) throw ConfigError("range is empty: hi below lo");
  std::vector<double> out;
  const auto count = static_cast<std::size_t>((hi - lo) / step + 1e-9) + 1;
  for (std::size_t i = 0; i < count; ++i) out.push_back(lo + static_cast<double>(i) * step);
  return out;
}

inline std::vector<std::size_t> parse_dims_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::string cur;
  auto flush = [&] {
    if (cur.empty()) throw ConfigError("dims list has an empty entry");
    const char* b = cur.c_str();
    char* e = nullptr;
    const long long v = std::strtoll(b, &e, 10);
    if (e == b || *e != '\0' || v <= 0)
      throw ConfigError("dims list entry \"" + cur + "\" is not a positive integer");
    out.push_back(static_cast<std::size_t>(v));
    cur.clear();
  };
  for (char ch : text) {
    if (ch == ',')
      flush();
    else
      cur += ch;
  }
  flush();
  return out;
}

struct SweepArgs {
  std::string data_dir, out_dir, config_path;
  std::string alpha_range, beta_range;  // grid mode when both set
  std::string dims_list;                // dims mode when set
  std::size_t jobs = 1;
};

namespace detail {

struct SweepCell {
  std::string name;
  TrainConfig cfg;
  // filled by the worker:
  nlohmann::json metrics;
};

inline void run_sweep_cells(const ViewSet& data, std::vector<SweepCell>& cells,
                            const std::string& out, std::size_t jobs) {
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      SweepCell& cell = cells[i];
      const std::string cell_dir = out + "/" + cell.name;
      std::filesystem::create_directories(cell_dir);
      write_json_file(cell_dir + "/config.json", to_json(cell.cfg));
      FitResult r = fit(data, cell.cfg);
      nlohmann::json m = clustering_report(
          r.final_embeddings.q,
          resolve_k(std::nullopt, cell.cfg.k, data.labels, std::cerr),
          data.labels, cell.cfg.seed);
      if (!r.history.empty()) m["final_total"] = r.history.back().total;
      m["alpha"] = cell.cfg.alpha;
      m["beta"] = cell.cfg.beta;
      m["d_z"] = cell.cfg.d_z;
      write_json_file(cell_dir + "/metrics.json", m);
      cell.metrics = std::move(m);
    }
  };
  if (jobs <= 1) {
    worker();
    return;
  }
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
}

inline std::string trim_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace detail

inline void cmd_sweep(const SweepArgs& args) {
  detail::Stopwatch timer;
  const bool grid = !args.alpha_range.empty() || !args.beta_range.empty();
  const bool dims = !args.dims_list.empty();
  if (grid == dims)
    throw ConfigError("sweep: pass either --alpha and --beta ranges or --dims");
  if (grid && (args.alpha_range.empty() || args.beta_range.empty()))
    throw ConfigError("sweep: grid mode needs both --alpha and --beta");

  TrainConfig base = args.config_path.empty()
                         ? TrainConfig{}
                         : load_train_config(args.config_path);
  const std::string out = resolve_out_dir(args.out_dir, "sweep");
  ViewSet data = load_viewset(args.data_dir);
  const std::string data_hash = detail::data_hash_hex(data);
  std::filesystem::create_directories(out);

  std::vector<detail::SweepCell> cells;
  if (grid) {
    for (double a : parse_range(args.alpha_range))
      for (double b : parse_range(args.beta_range)) {
        detail::SweepCell cell;
        cell.cfg = base;
        cell.cfg.alpha = a;
        cell.cfg.beta = b;
        cell.name = "a" + detail::trim_number(a) + "_b" + detail::trim_number(b);
        cells.push_back(std::move(cell));
      }
  } else {
    for (std::size_t dim : parse_dims_list(args.dims_list)) {
      detail::SweepCell cell;
      cell.cfg = base;
      cell.cfg.d_z = dim;
      cell.cfg.d_c = dim;
      cell.name = "dim" + std::to_string(dim);
      cells.push_back(std::move(cell));
    }
  }
  for (auto& cell : cells) validate(cell.cfg);

  detail::run_sweep_cells(data, cells, out, args.jobs);

  // Cell order is fixed at construction, so the summary is deterministic
  // no matter how the workers interleave.
  std::ofstream summary(out + "/sweep_summary.csv");
  if (!summary) throw IoError("cannot open " + out + "/sweep_summary.csv");
  char buf[64];
  auto emit = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    summary << buf;
  };
  summary << (grid ? "alpha,beta" : "dim") << ",acc,nmi,purity,final_total\n";
  for (const auto& cell : cells) {
    if (grid) {
      emit(cell.metrics["alpha"].get<double>());
      summary << ",";
      emit(cell.metrics["beta"].get<double>());
    } else {
      summary << cell.metrics["d_z"].get<std::size_t>();
    }
    for (const char* key : {"acc", "nmi", "purity", "final_total"}) {
      summary << ",";
      emit(cell.metrics.value(key, 0.0));
    }
    summary << "\n";
  }
  summary.close();

  std::vector<std::string> outputs{"sweep_summary.csv"};
  for (const auto& cell : cells) outputs.push_back(cell.name + "/metrics.json");
  detail::write_manifest(out, "sweep", data_hash, outputs, timer.seconds());
}

}  // namespace gmae
