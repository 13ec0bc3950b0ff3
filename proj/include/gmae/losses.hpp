#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "gmae/error.hpp"
#include "gmae/matrix.hpp"
#include "gmae/tape.hpp"

namespace gmae {

// Probabilities are clamped into [kProbClamp, 1 - kProbClamp] before any log
// so saturated discriminator outputs cannot produce infinities.
inline constexpr double kProbClamp = 1e-12;

// Sum of squared reconstruction errors: sum_i ||x_i - xhat_i||^2.
inline Var loss_rec(Var x, Var xhat) {
  if (!x.value().same_shape(xhat.value()))
    throw DimError("loss_rec: input and reconstruction shapes disagree");
  return sum_all(row_l2_sq(subtract(x, xhat)));
}

// Masked variant: `present` is an N x 1 column of 0/1; absent samples
// contribute nothing to the sum and receive no gradient.
inline Var loss_rec(Var x, Var xhat, Var present) {
  if (!x.value().same_shape(xhat.value()))
    throw DimError("loss_rec: input and reconstruction shapes disagree");
  const Matrix& m = present.value();
  if (m.rows != x.value().rows || m.cols != 1)
    throw DimError("loss_rec: mask must be an N x 1 column");
  return sum_all(multiply(row_l2_sq(subtract(x, xhat)), present));
}

// Decoupling penalty between the specific and common code of each sample:
// sum_i || z_i (c_i - mu_i)^T ||_1 where mu_i is the scalar mean of c_i's
// entries broadcast over the row. The l1 norm of a rank-one outer product
// factorizes, ||u v^T||_1 = ||u||_1 ||v||_1, which is what this builds.
inline Var loss_cor(Var z, Var c) {
  if (z.value().rows != c.value().rows)
    throw DimError("loss_cor: z and c row counts disagree");
  Var cdev = subtract(c, row_mean(c));
  Var z_l1 = row_sum(abs_v(z));
  Var c_l1 = row_sum(abs_v(cdev));
  return sum_all(multiply(z_l1, c_l1));
}

namespace detail {
inline void check_scores(const Matrix& s, const char* what) {
  if (s.cols != 1) throw DimError(std::string(what) + ": scores must be N x 1");
  if (s.rows == 0) throw ContractError(std::string(what) + ": empty score column");
}
inline Var log_clamped(Var p) {
  return log_v(clamp_min(clamp_max(p, 1.0 - kProbClamp), kProbClamp));
}
inline Var ones_minus(Var p) {
  Var one = make_constant(*p.tape, Matrix(p.value().rows, 1, 1.0));
  return subtract(one, p);
}
}  // namespace detail

// Discriminator objective: -sum_i [log D(real_i) + log(1 - D(fake_i))].
inline Var loss_dis_discriminator(Var real_scores, Var fake_scores) {
  detail::check_scores(real_scores.value(), "loss_dis_discriminator");
  detail::check_scores(fake_scores.value(), "loss_dis_discriminator");
  Var lr = sum_all(detail::log_clamped(real_scores));
  Var lf = sum_all(detail::log_clamped(detail::ones_minus(fake_scores)));
  return scale(add(lr, lf), -1.0);
}

// Masked variant; each pool has its own N x 1 presence column.
inline Var loss_dis_discriminator(Var real_scores, Var fake_scores,
                                  Var real_present, Var fake_present) {
  detail::check_scores(real_scores.value(), "loss_dis_discriminator");
  detail::check_scores(fake_scores.value(), "loss_dis_discriminator");
  if (!real_present.value().same_shape(real_scores.value()) ||
      !fake_present.value().same_shape(fake_scores.value()))
    throw DimError("loss_dis_discriminator: mask shape does not match scores");
  Var lr = sum_all(multiply(detail::log_clamped(real_scores), real_present));
  Var lf = sum_all(
      multiply(detail::log_clamped(detail::ones_minus(fake_scores)), fake_present));
  return scale(add(lr, lf), -1.0);
}

// Non-saturating generator objective: -sum_i log D(fake_i).
inline Var loss_dis_generator(Var fake_scores) {
  detail::check_scores(fake_scores.value(), "loss_dis_generator");
  return scale(sum_all(detail::log_clamped(fake_scores)), -1.0);
}

inline Var loss_dis_generator(Var fake_scores, Var fake_present) {
  detail::check_scores(fake_scores.value(), "loss_dis_generator");
  if (!fake_present.value().same_shape(fake_scores.value()))
    throw DimError("loss_dis_generator: mask shape does not match scores");
  return scale(sum_all(multiply(detail::log_clamped(fake_scores), fake_present)), -1.0);
}

// Neighbor affinity m(a, b) = exp(cos(a, b)), range [1/e, e].
inline double similarity_m(const double* a, const double* b, std::size_t d) {
  double aa = 0.0, bb = 0.0, ab = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    aa += a[i] * a[i];
    bb += b[i] * b[i];
    ab += a[i] * b[i];
  }
  if (aa <= 0.0 || bb <= 0.0)
    throw DomainError("similarity_m: zero-norm vector");
  return std::exp(ab / (std::sqrt(aa) * std::sqrt(bb)));
}

inline double similarity_m(const Matrix& q, std::size_t i, std::size_t j) {
  if (i >= q.rows || j >= q.rows) throw ContractError("similarity_m: row out of range");
  return similarity_m(q.row_ptr(i), q.row_ptr(j), q.cols);
}

// Neighbor-contrast loss over representations q (N x D):
//   -(1/N) sum_i sum_{j in pos(i)} log[ m(q_j, q_i) / sum_{k in neg(i)} m(q_k, q_i) ]
// where neg(i) is everything that is neither i itself nor a positive of i.
// Since log m = cos, the numerator terms reduce to plain cosines.
inline Var loss_ent(Var q, const std::vector<std::vector<std::size_t>>& positives) {
  const Matrix& qm = q.value();
  const std::size_t n = qm.rows;
  if (n == 0) throw ContractError("loss_ent: empty representation");
  if (positives.size() != n)
    throw ContractError("loss_ent: positive lists do not cover every sample");

  Matrix pos_mask(n, n, 0.0);
  Matrix neg_mask(n, n, 1.0);
  Matrix pos_count(n, 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (positives[i].empty()) throw ContractError("loss_ent: empty positive set");
    neg_mask(i, i) = 0.0;
    for (std::size_t j : positives[i]) {
      if (j >= n) throw ContractError("loss_ent: positive index out of range");
      if (j == i) throw ContractError("loss_ent: sample listed as its own positive");
      if (pos_mask(i, j) != 0.0)
        throw ContractError("loss_ent: duplicate positive index");
      pos_mask(i, j) = 1.0;
      neg_mask(i, j) = 0.0;
    }
    if (positives[i].size() + 1 >= n)
      throw ContractError("loss_ent: empty negative set");
    pos_count(i, 0) = static_cast<double>(positives[i].size());
  }

  Tape& t = *q.tape;
  Var s = cos_rows(q, q);                       // s(i, k) = cos(q_i, q_k)
  Var m = exp_v(s);                             // m(i, k) in [1/e, e]
  Var pos_c = make_constant(t, std::move(pos_mask));
  Var neg_c = make_constant(t, std::move(neg_mask));
  Var cnt_c = make_constant(t, std::move(pos_count));
  Var numer = row_sum(multiply(s, pos_c));      // sum of cosines to positives
  Var denom = log_v(row_sum(multiply(m, neg_c)));
  Var per_sample = subtract(numer, multiply(denom, cnt_c));
  return scale(sum_all(per_sample), -1.0 / static_cast<double>(n));
}

// Full objective: J = sum_v rec_v + alpha * (sum_v cor_v + sum_v dis_v)
//                     + beta * ent,
// with dis_v the generator-side adversarial term.
inline Var total_objective(const std::vector<Var>& rec, const std::vector<Var>& cor,
                           const std::vector<Var>& dis_gen, Var ent, double alpha,
                           double beta) {
  if (rec.empty()) throw ContractError("total_objective: no views");
  if (cor.size() != rec.size() || dis_gen.size() != rec.size())
    throw ContractError("total_objective: per-view term counts disagree");
  auto sum_terms = [](const std::vector<Var>& terms) {
    Var acc = terms[0];
    for (std::size_t i = 1; i < terms.size(); ++i) acc = add(acc, terms[i]);
    return acc;
  };
  Var j = sum_terms(rec);
  j = add(j, scale(add(sum_terms(cor), sum_terms(dis_gen)), alpha));
  j = add(j, scale(ent, beta));
  return j;
}

}  // namespace gmae
