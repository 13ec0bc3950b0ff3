#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "gmae/grad_check.hpp"
#include "gmae/losses.hpp"
#include "gmae/neighbors.hpp"
#include "gmae/tape.hpp"
#include "helpers.hpp"

using namespace gmae;
using testing_oracles::naive_loss_ent;
using testing_oracles::random_matrix;

TEST_CASE("reconstruction loss on a one-row example", "[losses]") {
  Tape t;
  Var x = make_constant(t, Matrix::from_rows({{1, 2}}));
  Var xhat = make_leaf(t, Matrix::from_rows({{0, 0}}));
  CHECK(loss_rec(x, xhat).value()(0, 0) == 5.0);
}

TEST_CASE("reconstruction loss vanishes on perfect output", "[losses]") {
  std::mt19937_64 rng(3);
  Matrix m = random_matrix(rng, 4, 3);
  Tape t;
  CHECK(loss_rec(make_constant(t, m), make_leaf(t, m)).value()(0, 0) == 0.0);
}

TEST_CASE("masked reconstruction ignores absent samples entirely", "[losses]") {
  Tape t;
  Var x = make_constant(t, Matrix::from_rows({{1, 2}, {3, 4}}));
  Var xhat = make_leaf(t, Matrix::from_rows({{0, 0}, {0, 0}}));

  Var all_absent = make_constant(t, Matrix(2, 1, 0.0));
  CHECK(loss_rec(x, xhat, all_absent).value()(0, 0) == 0.0);

  Var first_only = make_constant(t, Matrix::from_rows({{1}, {0}}));
  Var l = loss_rec(x, xhat, first_only);
  CHECK(l.value()(0, 0) == 5.0);
  t.backward(l.id);
  const Matrix& g = t.grad(xhat.id);
  CHECK(g(0, 0) != 0.0);
  CHECK(g(1, 0) == 0.0);  // no gradient through the masked row
  CHECK(g(1, 1) == 0.0);
}

TEST_CASE("reconstruction loss is invariant to row permutation", "[losses]") {
  std::mt19937_64 rng(5);
  Matrix x = random_matrix(rng, 6, 4);
  Matrix y = random_matrix(rng, 6, 4);
  std::vector<std::size_t> perm{3, 1, 5, 0, 4, 2};
  Matrix xp(6, 4), yp(6, 4);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      xp(i, j) = x(perm[i], j);
      yp(i, j) = y(perm[i], j);
    }
  Tape t;
  double a = loss_rec(make_constant(t, x), make_leaf(t, y)).value()(0, 0);
  double b = loss_rec(make_constant(t, xp), make_leaf(t, yp)).value()(0, 0);
  CHECK(a == Catch::Approx(b).epsilon(1e-12));
}

TEST_CASE("decoupling loss on the worked one-sample example", "[losses]") {
  // z = [1, 0], c = [2, 4]: mean 3, deviations [-1, 1], l1 norms 1 and 2.
  Tape t;
  Var z = make_leaf(t, Matrix::from_rows({{1, 0}}));
  Var c = make_leaf(t, Matrix::from_rows({{2, 4}}));
  CHECK(loss_cor(z, c).value()(0, 0) == Catch::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("decoupling loss vanishes when either factor degenerates", "[losses]") {
  Tape t;
  Var z = make_leaf(t, Matrix::from_rows({{1, -2}, {3, 4}}));
  Var c_const = make_leaf(t, Matrix::from_rows({{5, 5, 5}, {-1, -1, -1}}));
  CHECK(loss_cor(z, c_const).value()(0, 0) == 0.0);

  Var z_zero = make_leaf(t, Matrix(2, 2, 0.0));
  Var c = make_leaf(t, random_matrix(*[] { static std::mt19937_64 r(9); return &r; }(), 2, 3));
  CHECK(loss_cor(z_zero, c).value()(0, 0) == 0.0);
}

TEST_CASE("decoupling loss ignores per-sample constant shifts of c", "[losses]") {
  std::mt19937_64 rng(11);
  Matrix z = random_matrix(rng, 5, 3);
  Matrix c = random_matrix(rng, 5, 4);
  Matrix c_shift = c;
  for (std::size_t i = 0; i < 5; ++i) {
    const double s = 0.37 * static_cast<double>(i + 1);
    for (std::size_t j = 0; j < 4; ++j) c_shift(i, j) += s;
  }
  Tape t;
  double a = loss_cor(make_leaf(t, z), make_leaf(t, c)).value()(0, 0);
  double b = loss_cor(make_leaf(t, z), make_leaf(t, c_shift)).value()(0, 0);
  CHECK(a == Catch::Approx(b).epsilon(1e-9));
}

TEST_CASE("discriminator loss at the uninformative fixed point", "[losses]") {
  const std::size_t n = 7;
  Tape t;
  Var real = make_leaf(t, Matrix(n, 1, 0.5));
  Var fake = make_leaf(t, Matrix(n, 1, 0.5));
  CHECK(loss_dis_discriminator(real, fake).value()(0, 0) ==
        Catch::Approx(2.0 * n * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("discriminator loss on a confident single pair", "[losses]") {
  Tape t;
  Var real = make_leaf(t, Matrix(1, 1, 0.9));
  Var fake = make_leaf(t, Matrix(1, 1, 0.1));
  // -(log 0.9 + log 0.9)
  CHECK(loss_dis_discriminator(real, fake).value()(0, 0) ==
        Catch::Approx(-2.0 * std::log(0.9)).epsilon(1e-12));
}

TEST_CASE("saturated scores stay finite through the clamp", "[losses]") {
  Tape t;
  Var real = make_leaf(t, Matrix(2, 1, 1.0));
  Var fake = make_leaf(t, Matrix(2, 1, 0.0));
  const double v = loss_dis_discriminator(real, fake).value()(0, 0);
  CHECK(std::isfinite(v));
  CHECK(v == Catch::Approx(0.0).margin(1e-9));

  Var bad_fake = make_leaf(t, Matrix(1, 1, 1.0));
  const double w = loss_dis_discriminator(make_leaf(t, Matrix(1, 1, 0.5)), bad_fake)
                       .value()(0, 0);
  CHECK(std::isfinite(w));
}

TEST_CASE("generator loss values", "[losses]") {
  Tape t;
  const std::size_t n = 4;
  Var even = make_leaf(t, Matrix(n, 1, 0.5));
  CHECK(loss_dis_generator(even).value()(0, 0) ==
        Catch::Approx(n * std::log(2.0)).epsilon(1e-12));

  Var two = make_leaf(t, Matrix::from_rows({{0.25}, {0.5}}));
  CHECK(loss_dis_generator(two).value()(0, 0) ==
        Catch::Approx(-(std::log(0.25) + std::log(0.5))).epsilon(1e-12));
}

TEST_CASE("masked adversarial pools drop absent samples", "[losses]") {
  Tape t;
  Var real = make_leaf(t, Matrix::from_rows({{0.9}, {0.2}}));
  Var fake = make_leaf(t, Matrix::from_rows({{0.1}, {0.8}}));
  Var keep_first = make_constant(t, Matrix::from_rows({{1}, {0}}));
  const double masked =
      loss_dis_discriminator(real, fake, keep_first, keep_first).value()(0, 0);
  CHECK(masked == Catch::Approx(-2.0 * std::log(0.9)).epsilon(1e-12));

  const double gen = loss_dis_generator(fake, keep_first).value()(0, 0);
  CHECK(gen == Catch::Approx(-std::log(0.1)).epsilon(1e-12));
}

TEST_CASE("neighbor affinity reference values and range", "[losses]") {
  Matrix q = Matrix::from_rows({{1, 0}, {0, 1}, {-2, 0}, {3, 0}});
  CHECK(similarity_m(q, 0, 3) == Catch::Approx(std::exp(1.0)).epsilon(1e-12));
  CHECK(similarity_m(q, 0, 1) == Catch::Approx(1.0).epsilon(1e-12));
  CHECK(similarity_m(q, 0, 2) == Catch::Approx(std::exp(-1.0)).epsilon(1e-12));

  std::mt19937_64 rng(13);
  for (int i = 0; i < 200; ++i) {
    Matrix r = random_matrix(rng, 2, 5);
    bool ok = true;
    for (std::size_t row = 0; row < 2; ++row) {
      double s = 0.0;
      for (std::size_t j = 0; j < 5; ++j) s += r(row, j) * r(row, j);
      ok = ok && s > 0.0;
    }
    if (!ok) continue;
    const double m = similarity_m(r, 0, 1);
    CHECK(m >= std::exp(-1.0) - 1e-12);
    CHECK(m <= std::exp(1.0) + 1e-12);
  }

  Matrix zero = Matrix::from_rows({{0, 0}, {1, 1}});
  CHECK_THROWS_AS(similarity_m(zero, 0, 1), DomainError);
}

TEST_CASE("neighbor contrast over identical rows reduces to log 2", "[losses]") {
  // Four identical rows, one positive each: every affinity is e, two
  // negatives per sample, so each term is log(e / 2e) = -log 2.
  Matrix q(4, 3, 0.0);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 3; ++j) q(i, j) = 0.7;
  auto pos = build_neighbor_sets(q, 1);
  Tape t;
  Var l = loss_ent(make_leaf(t, q), pos);
  CHECK(l.value()(0, 0) == Catch::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("neighbor contrast on the three-row basis example", "[losses]") {
  // Rows e1, e1, e2 with one positive each. Samples 0 and 1 contribute
  // log(e / 1) = 1; sample 2 pairs with sample 0 by the tie rule and its
  // single negative has the same affinity, contributing 0. Total -2/3.
  Matrix q = Matrix::from_rows({{1, 0}, {1, 0}, {0, 1}});
  auto pos = build_neighbor_sets(q, 1);
  REQUIRE(pos[0] == std::vector<std::size_t>{1});
  REQUIRE(pos[1] == std::vector<std::size_t>{0});
  REQUIRE(pos[2] == std::vector<std::size_t>{0});
  Tape t;
  Var l = loss_ent(make_leaf(t, q), pos);
  CHECK(l.value()(0, 0) == Catch::Approx(-2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("neighbor contrast matches an independent direct evaluation", "[losses]") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t n = 6 + trial % 5;
    const std::size_t n_omega = 1 + trial % 3;
    Matrix q = random_matrix(rng, n, 4);
    for (std::size_t i = 0; i < n; ++i) q(i, 0) += 2.5;  // keep norms up
    auto pos = build_neighbor_sets(q, n_omega);
    Tape t;
    const double lib = loss_ent(make_leaf(t, q), pos).value()(0, 0);
    const double oracle = naive_loss_ent(q, pos);
    CHECK(lib == Catch::Approx(oracle).epsilon(1e-10));
  }
}

TEST_CASE("neighbor contrast validates its positive lists", "[losses]") {
  Matrix q = Matrix::from_rows({{1, 0}, {0, 1}, {1, 1}, {2, 1}});
  Tape t;
  Var v = make_leaf(t, q);
  CHECK_THROWS_AS(loss_ent(v, {{1}, {0}, {3}}), ContractError);         // short list
  CHECK_THROWS_AS(loss_ent(v, {{0}, {0}, {0}, {0}}), ContractError);    // self positive
  CHECK_THROWS_AS(loss_ent(v, {{9}, {0}, {0}, {0}}), ContractError);    // out of range
  CHECK_THROWS_AS(loss_ent(v, {{1, 1}, {0}, {0}, {0}}), ContractError); // duplicate
  CHECK_THROWS_AS(loss_ent(v, {{1, 2, 3}, {0}, {0}, {0}}), ContractError);  // no negatives
  CHECK_THROWS_AS(loss_ent(v, {{}, {0}, {0}, {0}}), ContractError);     // empty positives
}

TEST_CASE("total objective composes with the published weights", "[losses]") {
  Tape t;
  auto one = [&](double x) { return make_leaf(t, Matrix(1, 1, x)); };
  Var j = total_objective({one(1.0)}, {one(2.0)}, {one(3.0)}, one(4.0), 0.01, 0.01);
  CHECK(j.value()(0, 0) == Catch::Approx(1.09).epsilon(1e-12));
}

TEST_CASE("total objective reduces to reconstruction at zero weights", "[losses]") {
  Tape t;
  auto one = [&](double x) { return make_leaf(t, Matrix(1, 1, x)); };
  Var j = total_objective({one(1.25), one(0.5)}, {one(9.0), one(7.0)},
                          {one(3.0), one(2.0)}, one(11.0), 0.0, 0.0);
  CHECK(j.value()(0, 0) == 1.75);

  Var zero = total_objective({one(0.0)}, {one(0.0)}, {one(0.0)}, one(0.0), 0.4, 0.7);
  CHECK(zero.value()(0, 0) == 0.0);
}

TEST_CASE("every loss passes finite-difference checks", "[losses][fd]") {
  constexpr double kTol = 1e-4;
  std::mt19937_64 rng(23);

  SECTION("reconstruction") {
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
      const std::size_t n = 2 + i % 4, d = 2 + i % 3;
      Matrix x = random_matrix(rng, n, d);
      Matrix xh = random_matrix(rng, n, d);
      Matrix mask(n, 1, 1.0);
      if (i % 2) mask(0, 0) = 0.0;
      auto r = finite_difference_check(
          {x, xh}, [&mask](Tape& t, const std::vector<Var>& l) {
            return loss_rec(l[0], l[1], make_constant(t, mask));
          });
      worst = std::max(worst, r.max_rel_err);
    }
    CHECK(worst < kTol);
  }

  SECTION("decoupling") {
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
      const std::size_t n = 2 + i % 4;
      // Stay away from the abs kink: entries and row deviations not near 0.
      Matrix z = random_matrix(rng, n, 3);
      Matrix c = random_matrix(rng, n, 4);
      for (double& x : z.data)
        if (std::fabs(x) < 0.05) x += 0.2;
      for (double& x : c.data) x = x < 0 ? x - 0.5 : x + 0.5;
      auto r = finite_difference_check({z, c}, [](Tape&, const std::vector<Var>& l) {
        return loss_cor(l[0], l[1]);
      });
      worst = std::max(worst, r.max_rel_err);
    }
    CHECK(worst < kTol);
  }

  SECTION("adversarial") {
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
      const std::size_t n = 1 + i % 5;
      Matrix real = random_matrix(rng, n, 1, 0.1, 0.9);
      Matrix fake = random_matrix(rng, n, 1, 0.1, 0.9);
      auto r1 = finite_difference_check(
          {real, fake}, [](Tape&, const std::vector<Var>& l) {
            return loss_dis_discriminator(l[0], l[1]);
          });
      auto r2 = finite_difference_check({fake}, [](Tape&, const std::vector<Var>& l) {
        return loss_dis_generator(l[0]);
      });
      worst = std::max({worst, r1.max_rel_err, r2.max_rel_err});
    }
    CHECK(worst < kTol);
  }

  SECTION("neighbor contrast") {
    double worst = 0.0;
    for (int i = 0; i < 10; ++i) {
      const std::size_t n = 5 + i % 3;
      Matrix q = random_matrix(rng, n, 4);
      for (std::size_t r = 0; r < n; ++r) q(r, 0) += 2.5;
      auto pos = build_neighbor_sets(q, 2);
      auto r = finite_difference_check({q}, [&pos](Tape&, const std::vector<Var>& l) {
        return loss_ent(l[0], pos);
      });
      worst = std::max(worst, r.max_rel_err);
    }
    CHECK(worst < kTol);
  }
}

TEST_CASE("entropy identity holds on discrete prototype draws", "[losses][theorem]") {
  // Rows drawn uniform over two antipodal prototypes, exact-match positives.
  // The loss should equal -N_omega * MI + N_omega * log N within a few
  // percent, with MI the plug-in mutual information of the neighbor pairs.
  const std::size_t n = 512, n_omega = 5;
  auto draw = testing_oracles::draw_antipodal_prototypes(n, 6, 4242);
  auto pos = build_neighbor_sets(draw.q, n_omega);

  // Exact-match positives: every neighbor shares the sample's prototype.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j : pos[i]) REQUIRE(draw.labels[j] == draw.labels[i]);

  Tape t;
  const double lhs = loss_ent(make_leaf(t, draw.q), pos).value()(0, 0);
  const double mi = testing_oracles::plugin_neighbor_mi(draw.labels, pos);
  const double rhs = -static_cast<double>(n_omega) * mi +
                     static_cast<double>(n_omega) * std::log(static_cast<double>(n));
  CHECK(std::fabs(lhs - rhs) / std::fabs(rhs) < 0.05);
}
