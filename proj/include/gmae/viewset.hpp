#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "gmae/error.hpp"
#include "gmae/matrix.hpp"

namespace gmae {

// A multi-view sample table: V feature matrices over the same N rows, an
// optional integer label per row, and a 0/1 availability mask per (row,
// view). Masked entries are zero-filled in the feature matrices; the mask is
// what distinguishes "absent" from "measured zero".
struct ViewSet {
  std::vector<Matrix> views;
  std::vector<int> labels;  // empty when unlabeled
  Matrix mask;              // n x v, entries 0 or 1

  std::size_t n() const { return views.empty() ? 0 : views[0].rows; }
  std::size_t v() const { return views.size(); }

  std::vector<std::size_t> view_dims() const {
    std::vector<std::size_t> d;
    for (const Matrix& m : views) d.push_back(m.cols);
    return d;
  }

  void validate() const {
    if (views.empty()) throw DimError("viewset: no views");
    for (const Matrix& m : views)
      if (m.rows != n()) throw DimError("viewset: views disagree on row count");
    if (!labels.empty() && labels.size() != n())
      throw DimError("viewset: label count does not match rows");
    if (mask.rows != n() || mask.cols != v())
      throw DimError("viewset: mask shape must be rows x views");
    for (double m : mask.data)
      if (m != 0.0 && m != 1.0) throw DimError("viewset: mask entries must be 0 or 1");
  }
};

inline std::size_t distinct_labels(const std::vector<int>& labels) {
  std::vector<int> u(labels);
  std::sort(u.begin(), u.end());
  return static_cast<std::size_t>(std::unique(u.begin(), u.end()) - u.begin());
}

// ---------------------------------------------------------------------------
// CSV persistence. A dataset directory holds view_0.csv .. view_{V-1}.csv
// (header f0,f1,...), optionally labels.csv (header "label") and mask.csv
// (header v0,v1,...). Values are written with 17 significant digits so a
// save/load round trip is bitwise exact.

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

inline double parse_double(const std::string& s, const std::string& file,
                           std::size_t lineno) {
  const char* begin = s.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0')
    throw IoError(file + ":" + std::to_string(lineno) + ": bad number \"" + s + "\"");
  return v;
}

inline Matrix load_csv_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError(path + ": empty file");
  const std::size_t cols = split_csv_line(line).size();

  std::vector<double> data;
  std::size_t rows = 0, lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != cols)
      throw IoError(path + ":" + std::to_string(lineno) + ": expected " +
                    std::to_string(cols) + " columns, got " +
                    std::to_string(cells.size()));
    for (const auto& c : cells) data.push_back(parse_double(c, path, lineno));
    ++rows;
  }
  Matrix m(rows, cols);
  m.data = std::move(data);
  return m;
}

inline void save_csv_matrix(const std::string& path, const Matrix& m,
                            const std::string& col_prefix) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  for (std::size_t j = 0; j < m.cols; ++j)
    out << (j ? "," : "") << col_prefix << j;
  out << "\n";
  char buf[64];
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t j = 0; j < m.cols; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
      out << (j ? "," : "") << buf;
    }
    out << "\n";
  }
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace detail

inline void save_viewset(const std::string& dir, const ViewSet& vs) {
  vs.validate();
  std::filesystem::create_directories(dir);
  for (std::size_t v = 0; v < vs.v(); ++v)
    detail::save_csv_matrix(dir + "/view_" + std::to_string(v) + ".csv",
                            vs.views[v], "f");
  detail::save_csv_matrix(dir + "/mask.csv", vs.mask, "v");
  if (!vs.labels.empty()) {
    std::ofstream out(dir + "/labels.csv");
    if (!out) throw IoError("cannot open " + dir + "/labels.csv for writing");
    out << "label\n";
    for (int y : vs.labels) out << y << "\n";
    if (!out) throw IoError("write failed for " + dir + "/labels.csv");
  }
}

inline ViewSet load_viewset(const std::string& dir) {
  ViewSet vs;
  for (std::size_t v = 0;; ++v) {
    const std::string path = dir + "/view_" + std::to_string(v) + ".csv";
    if (!std::filesystem::exists(path)) break;
    vs.views.push_back(detail::load_csv_matrix(path));
  }
  if (vs.views.empty())
    throw IoError("no view_0.csv found under " + dir);

  const std::string lpath = dir + "/labels.csv";
  if (std::filesystem::exists(lpath)) {
    Matrix lm = detail::load_csv_matrix(lpath);
    if (lm.cols != 1) throw IoError(lpath + ": expected a single label column");
    for (double y : lm.data) {
      if (y != std::floor(y))
        throw IoError(lpath + ": labels must be integers");
      vs.labels.push_back(static_cast<int>(y));
    }
  }

  const std::string mpath = dir + "/mask.csv";
  if (std::filesystem::exists(mpath)) {
    vs.mask = detail::load_csv_matrix(mpath);
  } else {
    vs.mask = Matrix(vs.n(), vs.v(), 1.0);
  }
  vs.validate();
  return vs;
}

// ---------------------------------------------------------------------------
// Normalization. Column statistics are computed over present rows only, so
// zero-filled absentees cannot drag the scale; masked rows are re-zeroed
// afterwards because an affine transform would otherwise move them.

inline void normalize_views(ViewSet& vs, const std::string& mode) {
  vs.validate();
  if (mode == "none") return;
  if (mode != "minmax" && mode != "zscore")
    throw ConfigError("normalize: unknown mode \"" + mode + "\"");

  for (std::size_t v = 0; v < vs.v(); ++v) {
    Matrix& x = vs.views[v];
    for (std::size_t j = 0; j < x.cols; ++j) {
      double lo = 0.0, hi = 0.0, sum = 0.0, sumsq = 0.0;
      std::size_t cnt = 0;
      for (std::size_t i = 0; i < x.rows; ++i) {
        if (vs.mask(i, v) == 0.0) continue;
        const double val = x(i, j);
        if (cnt == 0) lo = hi = val;
        lo = std::min(lo, val);
        hi = std::max(hi, val);
        sum += val;
        sumsq += val * val;
        ++cnt;
      }
      if (cnt == 0) {
        for (std::size_t i = 0; i < x.rows; ++i) x(i, j) = 0.0;
        continue;
      }
      if (mode == "minmax") {
        const double range = hi - lo;
        for (std::size_t i = 0; i < x.rows; ++i)
          x(i, j) = range > 0.0 ? (x(i, j) - lo) / range : 0.0;
      } else {
        const double mean = sum / static_cast<double>(cnt);
        const double var = sumsq / static_cast<double>(cnt) - mean * mean;
        const double sd = var > 0.0 ? std::sqrt(var) : 0.0;
        for (std::size_t i = 0; i < x.rows; ++i)
          x(i, j) = sd > 0.0 ? (x(i, j) - mean) / sd : 0.0;
      }
    }
    for (std::size_t i = 0; i < x.rows; ++i)
      if (vs.mask(i, v) == 0.0)
        for (std::size_t j = 0; j < x.cols; ++j) x(i, j) = 0.0;
  }
}

// ---------------------------------------------------------------------------
// Synthetic benchmark: k well-separated Gaussian blobs observed through one
// orthogonal rotation per view. Cluster means sit on scaled basis vectors
// with pairwise distance `sep`, so `sep/sigma` directly controls difficulty.

struct SynthSpec {
  std::size_t n = 600;
  std::size_t k = 3;
  std::size_t d = 3;
  std::size_t v = 3;
  double sep = 6.0;
  double sigma = 1.0;
  std::uint64_t seed = 42;
};

namespace detail {

// Orthonormal basis from Gram-Schmidt on a Gaussian draw. Re-draws in the
// (measure-zero) event of near dependence.
inline Matrix random_rotation(std::size_t d, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  while (true) {
    Matrix r(d, d);
    for (double& x : r.data) x = g(rng);
    bool ok = true;
    for (std::size_t i = 0; i < d && ok; ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        double dot = 0.0;
        for (std::size_t cc = 0; cc < d; ++cc) dot += r(i, cc) * r(j, cc);
        for (std::size_t cc = 0; cc < d; ++cc) r(i, cc) -= dot * r(j, cc);
      }
      double norm = 0.0;
      for (std::size_t cc = 0; cc < d; ++cc) norm += r(i, cc) * r(i, cc);
      norm = std::sqrt(norm);
      if (norm < 1e-8) {
        ok = false;
        break;
      }
      for (std::size_t cc = 0; cc < d; ++cc) r(i, cc) /= norm;
    }
    if (ok) return r;
  }
}

}  // namespace detail

inline ViewSet generate_synthetic(const SynthSpec& spec) {
  if (spec.n == 0 || spec.k == 0 || spec.d == 0 || spec.v == 0)
    throw ConfigError("synthetic: n, k, d, v must all be positive");
  if (spec.k > spec.d)
    throw ConfigError("synthetic: needs k <= d to place orthogonal cluster means");
  if (spec.n < spec.k) throw ConfigError("synthetic: needs n >= k");

  ViewSet vs;
  vs.labels.resize(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i)
    vs.labels[i] = static_cast<int>(i % spec.k);
  std::mt19937_64 label_rng(derive_seed(spec.seed, 1));
  std::shuffle(vs.labels.begin(), vs.labels.end(), label_rng);

  // Pairwise mean distance is exactly `sep`: |s e_a - s e_b| = s sqrt(2).
  const double scale = spec.sep / std::sqrt(2.0);

  for (std::size_t view = 0; view < spec.v; ++view) {
    std::mt19937_64 rng(derive_seed(spec.seed, 100 + view));
    Matrix rot = detail::random_rotation(spec.d, rng);
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix x(spec.n, spec.d);
    std::vector<double> point(spec.d);
    for (std::size_t i = 0; i < spec.n; ++i) {
      const std::size_t cls = static_cast<std::size_t>(vs.labels[i]);
      for (std::size_t j = 0; j < spec.d; ++j)
        point[j] = (j == cls ? scale : 0.0) + spec.sigma * g(rng);
      // Rows of `rot` are the orthonormal images of the axes.
      for (std::size_t j = 0; j < spec.d; ++j) {
        double acc = 0.0;
        for (std::size_t cc = 0; cc < spec.d; ++cc) acc += point[cc] * rot(cc, j);
        x(i, j) = acc;
      }
    }
    vs.views.push_back(std::move(x));
  }
  vs.mask = Matrix(spec.n, spec.v, 1.0);
  vs.validate();
  return vs;
}

// ---------------------------------------------------------------------------
// Incomplete-data simulation: floor(ratio * n) samples each lose between 1
// and V-1 views, chosen uniformly. Every sample keeps at least one view.

inline void apply_missing(ViewSet& vs, double ratio, std::uint64_t seed) {
  vs.validate();
  if (!(ratio >= 0.0 && ratio < 1.0))
    throw ConfigError("apply_missing: ratio must lie in [0, 1)");
  if (ratio == 0.0) return;
  if (vs.v() < 2)
    throw ConfigError("apply_missing: a single view cannot lose entries");

  const std::size_t affected =
      static_cast<std::size_t>(ratio * static_cast<double>(vs.n()));
  std::mt19937_64 rng(derive_seed(seed, 2));
  std::vector<std::size_t> rows(vs.n());
  std::iota(rows.begin(), rows.end(), 0);
  std::shuffle(rows.begin(), rows.end(), rng);

  std::uniform_int_distribution<std::size_t> how_many(1, vs.v() - 1);
  std::vector<std::size_t> view_ids(vs.v());
  std::iota(view_ids.begin(), view_ids.end(), 0);

  for (std::size_t a = 0; a < affected; ++a) {
    const std::size_t i = rows[a];
    const std::size_t drop = how_many(rng);
    std::shuffle(view_ids.begin(), view_ids.end(), rng);
    for (std::size_t t = 0; t < drop; ++t) {
      const std::size_t v = view_ids[t];
      vs.mask(i, v) = 0.0;
      for (std::size_t j = 0; j < vs.views[v].cols; ++j) vs.views[v](i, j) = 0.0;
    }
  }
}

}  // namespace gmae
