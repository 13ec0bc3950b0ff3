#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "gmae/error.hpp"
#include "gmae/matrix.hpp"

namespace gmae {

// Primitive set of the reverse-mode tape. Fixed on purpose: every forward
// pass and loss in the library composes these and nothing else.
enum class Op {
  leaf,
  constant,
  matmul,
  add,
  subtract,
  multiply,   // elementwise
  relu,
  sigmoid,
  tanh,
  exp,
  log,
  concat_cols,  // row-wise concatenation by columns
  row_l2_sq,    // per-row squared l2 norm, n x d -> n x 1
  abs_sum,      // sum of absolute values of all entries -> 1 x 1
  row_mean,     // per-row mean of entries, n x d -> n x 1
  scale,        // multiply by a compile-time scalar attribute
  cos_rows,     // pairwise cosine similarity of rows, (n x d, m x d) -> n x m
};

inline const char* op_name(Op op) {
  switch (op) {
    case Op::leaf: return "leaf";
    case Op::constant: return "constant";
    case Op::matmul: return "matmul";
    case Op::add: return "add";
    case Op::subtract: return "subtract";
    case Op::multiply: return "elementwise-multiply";
    case Op::relu: return "relu";
    case Op::sigmoid: return "sigmoid";
    case Op::tanh: return "tanh";
    case Op::exp: return "exp";
    case Op::log: return "log";
    case Op::concat_cols: return "row-concat-by-columns";
    case Op::row_l2_sq: return "row-l2-squared";
    case Op::abs_sum: return "elementwise-abs-sum";
    case Op::row_mean: return "row-mean";
    case Op::scale: return "scalar-scale";
    case Op::cos_rows: return "cosine-similarity-rows";
  }
  return "unknown";
}

using NodeId = std::size_t;

struct Node {
  Op op = Op::constant;
  double scalar = 0.0;  // attribute of Op::scale
  std::vector<NodeId> inputs;
  Matrix value;
  Matrix grad;       // filled by backward; empty means "no flow reached it"
  Matrix aux;        // op-specific cache (cos_rows: row norms of both inputs)
  bool needs_grad = false;
};

// Define-by-run tape. apply() validates shapes, computes the value eagerly
// and records the node; backward() replays the recording in reverse.
// Grads are reset at the start of every backward call, so calling it twice
// recomputes rather than accumulates.
class Tape {
 public:
  NodeId leaf(Matrix v) {
    Node n;
    n.op = Op::leaf;
    n.value = std::move(v);
    n.needs_grad = true;
    nodes_.push_back(std::move(n));
    return nodes_.size() - 1;
  }

  NodeId constant(Matrix v) {
    Node n;
    n.op = Op::constant;
    n.value = std::move(v);
    n.needs_grad = false;
    nodes_.push_back(std::move(n));
    return nodes_.size() - 1;
  }

  NodeId apply(Op op, const std::vector<NodeId>& inputs, double scalar = 0.0) {
    for (NodeId id : inputs) check_id(id);
    Node n;
    n.op = op;
    n.scalar = scalar;
    n.inputs = inputs;
    n.value = forward(op, inputs, scalar, n.aux);
    for (NodeId id : inputs) n.needs_grad = n.needs_grad || nodes_[id].needs_grad;
    nodes_.push_back(std::move(n));
    return nodes_.size() - 1;
  }

  const Matrix& value(NodeId id) const {
    check_id(id);
    return nodes_[id].value;
  }

  // Gradient of the last backward root with respect to node `id`. Zero-shaped
  // result means no gradient flowed there (constants, unused branches).
  const Matrix& grad(NodeId id) const {
    check_id(id);
    return nodes_[id].grad;
  }

  std::size_t size() const { return nodes_.size(); }

  void backward(NodeId root) {
    check_id(root);
    const Matrix& rv = nodes_[root].value;
    if (rv.rows != 1 || rv.cols != 1)
      throw ContractError("backward: root node must be a 1x1 scalar");
    for (Node& n : nodes_) n.grad = Matrix();
    nodes_[root].grad = Matrix(1, 1, 1.0);
    for (std::size_t i = nodes_.size(); i-- > 0;) {
      Node& n = nodes_[i];
      if (n.grad.empty() || !n.needs_grad) continue;
      if (n.op == Op::leaf || n.op == Op::constant) continue;
      backward_node(n);
    }
  }

 private:
  std::vector<Node> nodes_;

  void check_id(NodeId id) const {
    if (id >= nodes_.size()) throw ContractError("tape: node id out of range");
  }

  static void check_same_dim(const Matrix& a, const Matrix& b, const char* what) {
    if (!a.same_shape(b))
      throw DimError(std::string(what) + ": operand shapes disagree");
  }

  // Broadcast classes for binary elementwise ops. The second operand may be
  // same-shape, a 1 x m row (replicated down), or an n x 1 column
  // (replicated across).
  enum class Bcast { same, row, col };

  static Bcast bcast_kind(const Matrix& a, const Matrix& b, const char* what) {
    if (a.same_shape(b)) return Bcast::same;
    if (b.rows == 1 && b.cols == a.cols) return Bcast::row;
    if (b.cols == 1 && b.rows == a.rows) return Bcast::col;
    throw DimError(std::string(what) +
                   ": second operand is neither same-shape nor a broadcastable row/column");
  }

  static double bvalue(const Matrix& b, Bcast k, std::size_t i, std::size_t j) {
    switch (k) {
      case Bcast::same: return b(i, j);
      case Bcast::row: return b(0, j);
      case Bcast::col: return b(i, 0);
    }
    return 0.0;
  }

  Matrix forward(Op op, const std::vector<NodeId>& in, double scalar, Matrix& aux) {
    auto arity = [&](std::size_t k) {
      if (in.size() != k)
        throw ContractError(std::string(op_name(op)) + ": wrong number of inputs");
    };
    switch (op) {
      case Op::leaf:
      case Op::constant:
        throw ContractError("leaf/constant nodes are created directly, not applied");

      case Op::matmul: {
        arity(2);
        return matmul_nn(v(in[0]), v(in[1]));
      }
      case Op::add:
      case Op::subtract:
      case Op::multiply: {
        arity(2);
        const Matrix& a = v(in[0]);
        const Matrix& b = v(in[1]);
        Bcast k = bcast_kind(a, b, op_name(op));
        Matrix out(a.rows, a.cols);
        for (std::size_t i = 0; i < a.rows; ++i)
          for (std::size_t j = 0; j < a.cols; ++j) {
            const double x = a(i, j), y = bvalue(b, k, i, j);
            out(i, j) = op == Op::add ? x + y : op == Op::subtract ? x - y : x * y;
          }
        return out;
      }
      case Op::relu: {
        arity(1);
        Matrix out = v(in[0]);
        for (double& x : out.data) x = x > 0.0 ? x : 0.0;
        return out;
      }
      case Op::sigmoid: {
        arity(1);
        Matrix out = v(in[0]);
        for (double& x : out.data) x = 1.0 / (1.0 + std::exp(-x));
        return out;
      }
      case Op::tanh: {
        arity(1);
        Matrix out = v(in[0]);
        for (double& x : out.data) x = std::tanh(x);
        return out;
      }
      case Op::exp: {
        arity(1);
        Matrix out = v(in[0]);
        for (double& x : out.data) x = std::exp(x);
        return out;
      }
      case Op::log: {
        arity(1);
        Matrix out = v(in[0]);
        for (double& x : out.data) {
          if (!(x > 0.0)) throw DomainError("log: nonpositive input");
          x = std::log(x);
        }
        return out;
      }
      case Op::concat_cols: {
        if (in.size() < 1) throw ContractError("row-concat-by-columns: no inputs");
        const std::size_t r = v(in[0]).rows;
        std::size_t total = 0;
        for (NodeId id : in) {
          if (v(id).rows != r)
            throw DimError("row-concat-by-columns: row counts disagree");
          total += v(id).cols;
        }
        Matrix out(r, total);
        for (std::size_t i = 0; i < r; ++i) {
          double* dst = out.row_ptr(i);
          for (NodeId id : in) {
            const Matrix& m = v(id);
            const double* src = m.row_ptr(i);
            for (std::size_t j = 0; j < m.cols; ++j) *dst++ = src[j];
          }
        }
        return out;
      }
      case Op::row_l2_sq: {
        arity(1);
        const Matrix& a = v(in[0]);
        Matrix out(a.rows, 1);
        for (std::size_t i = 0; i < a.rows; ++i) {
          const double* r = a.row_ptr(i);
          double s = 0.0;
          for (std::size_t j = 0; j < a.cols; ++j) s += r[j] * r[j];
          out(i, 0) = s;
        }
        return out;
      }
      case Op::abs_sum: {
        arity(1);
        const Matrix& a = v(in[0]);
        double s = 0.0;
        for (double x : a.data) s += std::fabs(x);
        return Matrix(1, 1, s);
      }
      case Op::row_mean: {
        arity(1);
        const Matrix& a = v(in[0]);
        if (a.cols == 0) throw DimError("row-mean: zero columns");
        Matrix out(a.rows, 1);
        for (std::size_t i = 0; i < a.rows; ++i) {
          const double* r = a.row_ptr(i);
          double s = 0.0;
          for (std::size_t j = 0; j < a.cols; ++j) s += r[j];
          out(i, 0) = s / static_cast<double>(a.cols);
        }
        return out;
      }
      case Op::scale: {
        arity(1);
        Matrix out = v(in[0]);
        for (double& x : out.data) x *= scalar;
        return out;
      }
      case Op::cos_rows: {
        arity(2);
        const Matrix& a = v(in[0]);
        const Matrix& b = v(in[1]);
        if (a.cols != b.cols)
          throw DimError("cosine-similarity-rows: feature dimensions disagree");
        aux = Matrix(1, a.rows + b.rows);
        for (std::size_t i = 0; i < a.rows; ++i) {
          const double* r = a.row_ptr(i);
          double s = 0.0;
          for (std::size_t j = 0; j < a.cols; ++j) s += r[j] * r[j];
          if (s <= 0.0)
            throw DomainError("cosine-similarity-rows: zero-norm row");
          aux(0, i) = std::sqrt(s);
        }
        for (std::size_t i = 0; i < b.rows; ++i) {
          const double* r = b.row_ptr(i);
          double s = 0.0;
          for (std::size_t j = 0; j < b.cols; ++j) s += r[j] * r[j];
          if (s <= 0.0)
            throw DomainError("cosine-similarity-rows: zero-norm row");
          aux(0, a.rows + i) = std::sqrt(s);
        }
        // Four columns per pass: independent accumulator chains hide FMA
        // latency while each entry keeps its plain left-to-right sum.
        Matrix out(a.rows, b.rows);
        for (std::size_t i = 0; i < a.rows; ++i) {
          const double* ar = a.row_ptr(i);
          const double na = aux(0, i);
          double* cr = out.row_ptr(i);
          std::size_t j = 0;
          for (; j + 4 <= b.rows; j += 4) {
            const double* b0 = b.row_ptr(j);
            const double* b1 = b.row_ptr(j + 1);
            const double* b2 = b.row_ptr(j + 2);
            const double* b3 = b.row_ptr(j + 3);
            double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
            for (std::size_t p = 0; p < a.cols; ++p) {
              const double av = ar[p];
              s0 += av * b0[p];
              s1 += av * b1[p];
              s2 += av * b2[p];
              s3 += av * b3[p];
            }
            cr[j] = s0 / (na * aux(0, a.rows + j));
            cr[j + 1] = s1 / (na * aux(0, a.rows + j + 1));
            cr[j + 2] = s2 / (na * aux(0, a.rows + j + 2));
            cr[j + 3] = s3 / (na * aux(0, a.rows + j + 3));
          }
          for (; j < b.rows; ++j) {
            const double* br = b.row_ptr(j);
            double s = 0.0;
            for (std::size_t p = 0; p < a.cols; ++p) s += ar[p] * br[p];
            cr[j] = s / (na * aux(0, a.rows + j));
          }
        }
        return out;
      }
    }
    throw ContractError("forward: unknown op kind");
  }

  const Matrix& v(NodeId id) const { return nodes_[id].value; }

  void acc_grad(NodeId id, const Matrix& g) {
    if (!nodes_[id].needs_grad) return;
    Matrix& dst = nodes_[id].grad;
    if (dst.empty()) {
      dst = g;
      return;
    }
    for (std::size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += g.data[i];
  }

  Matrix& grad_slot(NodeId id) {
    Matrix& dst = nodes_[id].grad;
    if (dst.empty()) dst = zeros_like(nodes_[id].value);
    return dst;
  }

  // For broadcast binary ops: fold an output-shaped gradient onto the shape
  // of the second operand (sum over the replicated axis).
  static Matrix reduce_to(const Matrix& g, const Matrix& like, Bcast k) {
    if (k == Bcast::same) return g;
    Matrix out = zeros_like(like);
    if (k == Bcast::row) {
      for (std::size_t i = 0; i < g.rows; ++i)
        for (std::size_t j = 0; j < g.cols; ++j) out(0, j) += g(i, j);
    } else {
      for (std::size_t i = 0; i < g.rows; ++i)
        for (std::size_t j = 0; j < g.cols; ++j) out(i, 0) += g(i, j);
    }
    return out;
  }

  void backward_node(Node& n) {
    const Matrix& g = n.grad;
    switch (n.op) {
      case Op::leaf:
      case Op::constant:
        return;

      case Op::matmul: {
        const Matrix& a = v(n.inputs[0]);
        const Matrix& b = v(n.inputs[1]);
        if (nodes_[n.inputs[0]].needs_grad)
          matmul_nt_acc(g, b, grad_slot(n.inputs[0]));
        if (nodes_[n.inputs[1]].needs_grad)
          matmul_tn_acc(a, g, grad_slot(n.inputs[1]));
        return;
      }
      case Op::add:
      case Op::subtract: {
        const Matrix& a = v(n.inputs[0]);
        const Matrix& b = v(n.inputs[1]);
        Bcast k = bcast_kind(a, b, op_name(n.op));
        acc_grad(n.inputs[0], g);
        if (nodes_[n.inputs[1]].needs_grad) {
          Matrix gb = reduce_to(g, b, k);
          if (n.op == Op::subtract)
            for (double& x : gb.data) x = -x;
          acc_grad(n.inputs[1], gb);
        }
        return;
      }
      case Op::multiply: {
        const Matrix& a = v(n.inputs[0]);
        const Matrix& b = v(n.inputs[1]);
        Bcast k = bcast_kind(a, b, op_name(n.op));
        if (nodes_[n.inputs[0]].needs_grad) {
          Matrix ga(a.rows, a.cols);
          for (std::size_t i = 0; i < a.rows; ++i)
            for (std::size_t j = 0; j < a.cols; ++j)
              ga(i, j) = g(i, j) * bvalue(b, k, i, j);
          acc_grad(n.inputs[0], ga);
        }
        if (nodes_[n.inputs[1]].needs_grad) {
          Matrix gout(a.rows, a.cols);
          for (std::size_t i = 0; i < a.rows; ++i)
            for (std::size_t j = 0; j < a.cols; ++j) gout(i, j) = g(i, j) * a(i, j);
          acc_grad(n.inputs[1], reduce_to(gout, b, k));
        }
        return;
      }
      case Op::relu: {
        const Matrix& a = v(n.inputs[0]);
        Matrix ga(a.rows, a.cols);
        for (std::size_t i = 0; i < a.data.size(); ++i)
          ga.data[i] = a.data[i] > 0.0 ? g.data[i] : 0.0;
        acc_grad(n.inputs[0], ga);
        return;
      }
      case Op::sigmoid: {
        Matrix ga(n.value.rows, n.value.cols);
        for (std::size_t i = 0; i < ga.data.size(); ++i) {
          const double y = n.value.data[i];
          ga.data[i] = g.data[i] * y * (1.0 - y);
        }
        acc_grad(n.inputs[0], ga);
        return;
      }
      case Op::tanh: {
        Matrix ga(n.value.rows, n.value.cols);
        for (std::size_t i = 0; i < ga.data.size(); ++i) {
          const double y = n.value.data[i];
          ga.data[i] = g.data[i] * (1.0 - y * y);
        }
        acc_grad(n.inputs[0], ga);
        return;
      }
      case Op::exp: {
        Matrix ga(n.value.rows, n.value.cols);
        for (std::size_t i = 0; i < ga.data.size(); ++i)
          ga.data[i] = g.data[i] * n.value.data[i];
        acc_grad(n.inputs[0], ga);
        return;
      }
      case Op::log: {
        const Matrix& a = v(n.inputs[0]);
        Matrix ga(a.rows, a.cols);
        for (std::size_t i = 0; i < ga.data.size(); ++i)
          ga.data[i] = g.data[i] / a.data[i];
        acc_grad(n.inputs[0], ga);
        return;
      }
      case Op::concat_cols: {
        std::size_t off = 0;
        for (NodeId id : n.inputs) {
          const Matrix& m = v(id);
          if (nodes_[id].needs_grad) {
            Matrix gi(m.rows, m.cols);
            for (std::size_t i = 0; i < m.rows; ++i)
              for (std::size_t j = 0; j < m.cols; ++j) gi(i, j) = g(i, off + j);
            acc_grad(id, gi);
          }
          off += m.cols;
        }
        return;
      }
      case Op::row_l2_sq: {
        const Matrix& a = v(n.inputs[0]);
        Matrix ga(a.rows, a.cols);
        for (std::size_t i = 0; i < a.rows; ++i) {
          const double gi = 2.0 * g(i, 0);
          for (std::size_t j = 0; j < a.cols; ++j) ga(i, j) = gi * a(i, j);
        }
        acc_grad(n.inputs[0], ga);
        return;
      }
      case Op::abs_sum: {
        const Matrix& a = v(n.inputs[0]);
        const double gs = g(0, 0);
        Matrix ga(a.rows, a.cols);
        for (std::size_t i = 0; i < a.data.size(); ++i) {
          const double x = a.data[i];
          ga.data[i] = x > 0.0 ? gs : x < 0.0 ? -gs : 0.0;
        }
        acc_grad(n.inputs[0], ga);
        return;
      }
      case Op::row_mean: {
        const Matrix& a = v(n.inputs[0]);
        const double inv = 1.0 / static_cast<double>(a.cols);
        Matrix ga(a.rows, a.cols);
        for (std::size_t i = 0; i < a.rows; ++i) {
          const double gi = g(i, 0) * inv;
          for (std::size_t j = 0; j < a.cols; ++j) ga(i, j) = gi;
        }
        acc_grad(n.inputs[0], ga);
        return;
      }
      case Op::scale: {
        Matrix ga = g;
        for (double& x : ga.data) x *= n.scalar;
        acc_grad(n.inputs[0], ga);
        return;
      }
      case Op::cos_rows: {
        const Matrix& a = v(n.inputs[0]);
        const Matrix& b = v(n.inputs[1]);
        const Matrix& s = n.value;
        const std::size_t nr = a.rows, mr = b.rows, d = a.cols;
        const double* na = n.aux.row_ptr(0);         // |a_i|
        const double* nb = n.aux.row_ptr(0) + nr;    // |b_j|
        if (nodes_[n.inputs[0]].needs_grad) {
          // dA_i = (1/|a_i|) sum_j (g_ij/|b_j|) b_j  -  (sum_j g_ij s_ij) a_i/|a_i|^2
          Matrix w(nr, mr);
          for (std::size_t i = 0; i < nr; ++i)
            for (std::size_t j = 0; j < mr; ++j) w(i, j) = g(i, j) / nb[j];
          Matrix p(nr, d);
          matmul_nn_acc(w, b, p);
          Matrix ga(nr, d);
          for (std::size_t i = 0; i < nr; ++i) {
            double rowdot = 0.0;
            for (std::size_t j = 0; j < mr; ++j) rowdot += g(i, j) * s(i, j);
            const double inv_na = 1.0 / na[i];
            const double coef = rowdot * inv_na * inv_na;
            const double* ar = a.row_ptr(i);
            const double* pr = p.row_ptr(i);
            double* gr = ga.row_ptr(i);
            for (std::size_t j = 0; j < d; ++j)
              gr[j] = pr[j] * inv_na - coef * ar[j];
          }
          acc_grad(n.inputs[0], ga);
        }
        if (nodes_[n.inputs[1]].needs_grad) {
          // dB_j = (1/|b_j|) sum_i (g_ij/|a_i|) a_i  -  (sum_i g_ij s_ij) b_j/|b_j|^2
          Matrix w(nr, mr);
          for (std::size_t i = 0; i < nr; ++i)
            for (std::size_t j = 0; j < mr; ++j) w(i, j) = g(i, j) / na[i];
          Matrix p(mr, d);
          matmul_tn_acc(w, a, p);
          // Row-major prepass for the per-column dots; the strided j-outer
          // form walks whole cache lines for single entries.
          std::vector<double> coldot(mr, 0.0);
          for (std::size_t i = 0; i < nr; ++i) {
            const double* gr = g.row_ptr(i);
            const double* sr = s.row_ptr(i);
            for (std::size_t j = 0; j < mr; ++j) coldot[j] += gr[j] * sr[j];
          }
          Matrix gb(mr, d);
          for (std::size_t j = 0; j < mr; ++j) {
            const double inv_nb = 1.0 / nb[j];
            const double coef = coldot[j] * inv_nb * inv_nb;
            const double* br = b.row_ptr(j);
            const double* pr = p.row_ptr(j);
            double* gr = gb.row_ptr(j);
            for (std::size_t jj = 0; jj < d; ++jj)
              gr[jj] = pr[jj] * inv_nb - coef * br[jj];
          }
          acc_grad(n.inputs[1], gb);
        }
        return;
      }
    }
    throw ContractError("backward: unknown op kind");
  }
};

// Thin handle tying a node id to its tape so expressions read like math.
struct Var {
  Tape* tape = nullptr;
  NodeId id = 0;
  const Matrix& value() const { return tape->value(id); }
};

inline Var make_leaf(Tape& t, Matrix v) { return {&t, t.leaf(std::move(v))}; }
inline Var make_constant(Tape& t, Matrix v) { return {&t, t.constant(std::move(v))}; }

namespace detail {
inline Var apply2(Op op, Var a, Var b) {
  if (a.tape != b.tape) throw ContractError("operands live on different tapes");
  return {a.tape, a.tape->apply(op, {a.id, b.id})};
}
}  // namespace detail

inline Var matmul(Var a, Var b) { return detail::apply2(Op::matmul, a, b); }
inline Var add(Var a, Var b) { return detail::apply2(Op::add, a, b); }
inline Var subtract(Var a, Var b) { return detail::apply2(Op::subtract, a, b); }
inline Var multiply(Var a, Var b) { return detail::apply2(Op::multiply, a, b); }
inline Var cos_rows(Var a, Var b) { return detail::apply2(Op::cos_rows, a, b); }
inline Var relu(Var a) { return {a.tape, a.tape->apply(Op::relu, {a.id})}; }
inline Var sigmoid(Var a) { return {a.tape, a.tape->apply(Op::sigmoid, {a.id})}; }
inline Var tanh_v(Var a) { return {a.tape, a.tape->apply(Op::tanh, {a.id})}; }
inline Var exp_v(Var a) { return {a.tape, a.tape->apply(Op::exp, {a.id})}; }
inline Var log_v(Var a) { return {a.tape, a.tape->apply(Op::log, {a.id})}; }
inline Var row_l2_sq(Var a) { return {a.tape, a.tape->apply(Op::row_l2_sq, {a.id})}; }
inline Var abs_sum(Var a) { return {a.tape, a.tape->apply(Op::abs_sum, {a.id})}; }
inline Var row_mean(Var a) { return {a.tape, a.tape->apply(Op::row_mean, {a.id})}; }
inline Var scale(Var a, double s) { return {a.tape, a.tape->apply(Op::scale, {a.id}, s)}; }

inline Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ContractError("concat_cols: no inputs");
  std::vector<NodeId> ids;
  ids.reserve(parts.size());
  for (const Var& p : parts) {
    if (p.tape != parts[0].tape)
      throw ContractError("operands live on different tapes");
    ids.push_back(p.id);
  }
  return {parts[0].tape, parts[0].tape->apply(Op::concat_cols, ids)};
}

// sum of all entries as a 1x1 node, built from ones-vector matmuls so the
// gradient is exactly 1 everywhere (abs_sum would zero out negatives' flow).
inline Var sum_all(Var a) {
  Tape& t = *a.tape;
  const Matrix& m = a.value();
  Var ones_row = make_constant(t, Matrix(1, m.rows, 1.0));
  Var ones_col = make_constant(t, Matrix(m.cols, 1, 1.0));
  return matmul(matmul(ones_row, a), ones_col);
}

// per-row sum as an n x 1 node.
inline Var row_sum(Var a) {
  Tape& t = *a.tape;
  Var ones_col = make_constant(t, Matrix(a.value().cols, 1, 1.0));
  return matmul(a, ones_col);
}

// |x| entrywise via relu(x) + relu(-x); subgradient 0 at the kink.
inline Var abs_v(Var a) { return add(relu(a), relu(scale(a, -1.0))); }

// max(x, lo) entrywise with gradient passthrough above the floor.
inline Var clamp_min(Var a, double lo) {
  Tape& t = *a.tape;
  const Matrix& m = a.value();
  Var floor_c = make_constant(t, Matrix(m.rows, m.cols, lo));
  return add(relu(subtract(a, floor_c)), floor_c);
}

// min(x, hi) entrywise: hi - relu(hi - x).
inline Var clamp_max(Var a, double hi) {
  Tape& t = *a.tape;
  const Matrix& m = a.value();
  Var ceil_c = make_constant(t, Matrix(m.rows, m.cols, hi));
  return subtract(ceil_c, relu(subtract(ceil_c, a)));
}

}  // namespace gmae
