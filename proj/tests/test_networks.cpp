#include <catch2/catch_amalgamated.hpp>

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "gmae/adam.hpp"
#include "gmae/checkpoint.hpp"
#include "gmae/config.hpp"
#include "gmae/matrix.hpp"
#include "gmae/model.hpp"
#include "gmae/tape.hpp"

#include "helpers.hpp"

using namespace gmae;

namespace {

ModelDims small_dims() {
  ModelDims d;
  d.view_dims = {3, 4};
  d.d_z = 5;
  d.d_c = 6;
  d.hidden = {8, 7};
  d.disc_hidden = {9};
  return d;
}

std::uint64_t hash_params(ModelParams& p) {
  std::uint64_t h = 1469598103934665603ull;
  p.for_each_param([&](const std::string& name, Matrix& m) {
    h = fnv1a(name.data(), name.size(), h);
    h = fnv1a(m, h);
  });
  return h;
}

void zero_params(ModelParams& p) {
  p.for_each_param([](const std::string&, Matrix& m) {
    std::fill(m.data.begin(), m.data.end(), 0.0);
  });
}

std::filesystem::path temp_file(const char* stem) {
  return std::filesystem::temp_directory_path() /
         (std::string(stem) + "_" + std::to_string(::getpid()) + ".bin");
}

}  // namespace

TEST_CASE("init is reproducible per seed and seed-sensitive", "[networks]") {
  auto a = make_model(small_dims(), 7);
  auto b = make_model(small_dims(), 7);
  auto c = make_model(small_dims(), 8);
  CHECK(hash_params(a) == hash_params(b));
  CHECK(hash_params(a) != hash_params(c));
}

TEST_CASE("init zeroes every bias and bounds every weight", "[networks]") {
  auto p = make_model(small_dims(), 11);
  std::size_t weight_layers = 0;
  auto check_mlp = [&](const Mlp& m) {
    for (std::size_t l = 0; l < m.w.size(); ++l) {
      for (double x : m.b[l].data) CHECK(x == 0.0);
      const double limit = std::sqrt(
          6.0 / static_cast<double>(m.spec.widths[l] + m.spec.widths[l + 1]));
      double biggest = 0.0;
      for (double x : m.w[l].data) {
        CHECK(std::abs(x) <= limit);
        biggest = std::max(biggest, std::abs(x));
      }
      // A healthy draw fills a good part of its range.
      CHECK(biggest > 0.2 * limit);
      ++weight_layers;
    }
  };
  for (const Mlp& m : p.enc_spec) check_mlp(m);
  for (const Mlp& m : p.adapter) check_mlp(m);
  check_mlp(p.trunk);
  for (const Mlp& m : p.head_z) check_mlp(m);
  for (const Mlp& m : p.head_c) check_mlp(m);
  for (const Mlp& m : p.dec) check_mlp(m);
  for (const Mlp& m : p.disc) check_mlp(m);
  CHECK(weight_layers == 2 * 2 + 2 + 1 + 2 + 2 + 2 * 3 + 2 * 2);
}

TEST_CASE("parameter count matches shape arithmetic", "[networks]") {
  auto dims = small_dims();
  auto p = make_model(dims, 3);
  auto affine = [](std::size_t in, std::size_t out) { return in * out + out; };
  std::size_t expect = 0;
  for (std::size_t dv : dims.view_dims) {
    expect += affine(dv, 8) + affine(8, 7);          // specific encoder
    expect += affine(dv, 8);                         // adapter
    expect += affine(7, 5) + affine(7, 6);           // heads
    expect += affine(11, 7) + affine(7, 8) + affine(8, dv);  // decoder
    expect += affine(5, 9) + affine(9, 1);           // discriminator
  }
  expect += affine(8, 7);                            // shared trunk, once
  CHECK(p.param_count() == expect);
}

TEST_CASE("single hidden width model has no trunk", "[networks]") {
  ModelDims d;
  d.view_dims = {2, 2};
  d.d_z = 2;
  d.d_c = 2;
  d.hidden = {4};
  auto p = make_model(d, 1);
  CHECK_FALSE(p.has_trunk());
  // Shared path collapses to just the adapter.
  Tape t;
  auto b = bind_model(t, p, Trainable::none);
  Var x = make_constant(t, Matrix(1, 2, 0.5));
  Var h = encode_shared(b, 0, x);
  CHECK(h.value().cols == 4);
}

TEST_CASE("zeroed parameters map any input to zero codes", "[networks]") {
  auto p = make_model(small_dims(), 5);
  zero_params(p);
  std::mt19937_64 rng(99);
  Tape t;
  auto b = bind_model(t, p, Trainable::none);
  Var x = make_constant(t, testing_oracles::random_matrix(rng, 4, 3));
  Var z = project_z(b, 0, encode_specific(b, 0, x));
  for (double v : z.value().data) CHECK(v == 0.0);
}

TEST_CASE("two-layer forward matches a hand computation", "[networks]") {
  // widths {2, 2, 2}: affine, relu, affine. Weights chosen so the relu
  // actually clips one unit.
  ModelDims d;
  d.view_dims = {2};
  d.d_z = 2;
  d.d_c = 2;
  d.hidden = {2, 2};
  auto p = make_model(d, 1);
  zero_params(p);
  Mlp& enc = p.enc_spec[0];
  enc.w[0] = Matrix::from_rows({{1.0, -1.0}, {2.0, 0.5}});
  enc.b[0] = Matrix::from_rows({{0.25, -2.0}});
  enc.w[1] = Matrix::from_rows({{1.0, 3.0}, {-1.0, 2.0}});
  enc.b[1] = Matrix::from_rows({{0.5, 0.5}});

  Tape t;
  auto b = bind_model(t, p, Trainable::none);
  Var x = make_constant(t, Matrix::from_rows({{1.0, 2.0}}));
  Var h = encode_specific(b, 0, x);
  // layer 1: [1*1+2*2+0.25, 1*-1+2*0.5-2] = [5.25, -2], relu -> [5.25, 0]
  // layer 2: [5.25*1+0*-1+0.5, 5.25*3+0*2+0.5] = [5.75, 16.25]
  CHECK(h.value()(0, 0) == Catch::Approx(5.75).margin(1e-15));
  CHECK(h.value()(0, 1) == Catch::Approx(16.25).margin(1e-15));
}

TEST_CASE("rows pass through the network independently", "[networks]") {
  auto p = make_model(small_dims(), 21);
  std::mt19937_64 rng(4);
  Matrix batch = testing_oracles::random_matrix(rng, 5, 3);

  Tape t;
  auto b = bind_model(t, p, Trainable::none);
  Matrix full = project_z(b, 0, encode_specific(b, 0, make_constant(t, batch))).value();

  for (std::size_t i = 0; i < batch.rows; ++i) {
    Matrix one(1, batch.cols);
    for (std::size_t j = 0; j < batch.cols; ++j) one(0, j) = batch(i, j);
    Tape ti;
    auto bi = bind_model(ti, p, Trainable::none);
    Matrix out = project_z(bi, 0, encode_specific(bi, 0, make_constant(ti, one))).value();
    for (std::size_t j = 0; j < out.cols; ++j) CHECK(out(0, j) == full(i, j));
  }
}

TEST_CASE("forward commutes with row permutations", "[networks]") {
  auto p = make_model(small_dims(), 22);
  std::mt19937_64 rng(5);
  Matrix batch = testing_oracles::random_matrix(rng, 6, 3);
  std::vector<std::size_t> perm = {3, 0, 5, 1, 4, 2};
  Matrix shuffled(6, 3);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 3; ++j) shuffled(i, j) = batch(perm[i], j);

  Tape t1, t2;
  auto b1 = bind_model(t1, p, Trainable::none);
  auto b2 = bind_model(t2, p, Trainable::none);
  Matrix out = project_c(b1, 0, encode_shared(b1, 0, make_constant(t1, batch))).value();
  Matrix out_p = project_c(b2, 0, encode_shared(b2, 0, make_constant(t2, shuffled))).value();
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < out.cols; ++j)
      CHECK(out_p(i, j) == out(perm[i], j));
}

TEST_CASE("decoder reads z in the leading columns and c after", "[networks]") {
  ModelDims d;
  d.view_dims = {2};
  d.d_z = 2;
  d.d_c = 2;
  d.hidden = {3};
  auto p = make_model(d, 1);
  zero_params(p);
  Mlp& dec = p.dec[0];  // widths {4, 3, 2}

  SECTION("column 0 of the decoder input is the first z coordinate") {
    dec.w[0](0, 0) = 1.0;        // only input column 0 feeds the hidden unit
    dec.w[1](0, 0) = 1.0;        // hidden unit 0 feeds output 0
    Tape t;
    auto b = bind_model(t, p, Trainable::none);
    Var z = make_constant(t, Matrix::from_rows({{7.0, 0.0}}));
    Var c = make_constant(t, Matrix::from_rows({{0.0, 0.0}}));
    CHECK(decode(b, 0, z, c).value()(0, 0) == 7.0);

    Var z0 = make_constant(t, Matrix::from_rows({{0.0, 0.0}}));
    Var c7 = make_constant(t, Matrix::from_rows({{7.0, 0.0}}));
    CHECK(decode(b, 0, z0, c7).value()(0, 0) == 0.0);
  }
  SECTION("column d_z of the decoder input is the first c coordinate") {
    dec.w[0](2, 0) = 1.0;
    dec.w[1](0, 0) = 1.0;
    Tape t;
    auto b = bind_model(t, p, Trainable::none);
    Var z = make_constant(t, Matrix::from_rows({{7.0, 0.0}}));
    Var c = make_constant(t, Matrix::from_rows({{9.0, 0.0}}));
    CHECK(decode(b, 0, z, c).value()(0, 0) == 9.0);
  }
}

TEST_CASE("discriminator scores live in (0,1), zero net scores 0.5", "[networks]") {
  auto p = make_model(small_dims(), 31);
  std::mt19937_64 rng(6);
  Tape t;
  auto b = bind_model(t, p, Trainable::none);
  Var z = make_constant(t, testing_oracles::random_matrix(rng, 8, 5));
  Matrix scores = discriminate(b, 0, z).value();
  CHECK(scores.rows == 8);
  CHECK(scores.cols == 1);
  for (double s : scores.data) {
    CHECK(s > 0.0);
    CHECK(s < 1.0);
  }

  zero_params(p);
  Tape t2;
  auto b2 = bind_model(t2, p, Trainable::none);
  Var z2 = make_constant(t2, testing_oracles::random_matrix(rng, 3, 5));
  for (double s : discriminate(b2, 0, z2).value().data) CHECK(s == 0.5);
}

TEST_CASE("shared trunk is the same network for every view", "[networks]") {
  ModelDims d;
  d.view_dims = {1, 1};
  d.d_z = 1;
  d.d_c = 1;
  d.hidden = {1, 1};
  auto p = make_model(d, 1);
  zero_params(p);
  p.adapter[0].w[0](0, 0) = 2.0;
  p.adapter[1].w[0](0, 0) = -3.0;
  p.adapter[1].b[0](0, 0) = 1.0;
  p.trunk.w[0](0, 0) = 5.0;
  p.trunk.b[0](0, 0) = 0.25;

  Tape t;
  auto b = bind_model(t, p, Trainable::none);
  Var x = make_constant(t, Matrix(1, 1, 1.0));
  // view 0: relu(2) * 5 + 0.25; view 1: relu(-2) * 5 + 0.25
  CHECK(encode_shared(b, 0, x).value()(0, 0) == 10.25);
  CHECK(encode_shared(b, 1, x).value()(0, 0) == 0.25);

  // One trunk edit moves both views.
  p.trunk.b[0](0, 0) = 1.0;
  Tape t2;
  auto b2 = bind_model(t2, p, Trainable::none);
  Var x2 = make_constant(t2, Matrix(1, 1, 1.0));
  CHECK(encode_shared(b2, 0, x2).value()(0, 0) == 11.0);
  CHECK(encode_shared(b2, 1, x2).value()(0, 0) == 1.0);
}

TEST_CASE("fused representation is [consensus | per-view codes]", "[networks]") {
  auto dims = small_dims();
  auto p = make_model(dims, 17);
  std::mt19937_64 rng(12);
  std::vector<Matrix> views{testing_oracles::random_matrix(rng, 9, 3),
                            testing_oracles::random_matrix(rng, 9, 4)};
  Embeddings e = forward_embeddings(p, views);

  REQUIRE(e.q.rows == 9);
  REQUIRE(e.q.cols == dims.d_c + 2 * dims.d_z);
  REQUIRE(e.z.size() == 2);
  REQUIRE(e.c.size() == 2);

  Matrix want = assemble_consensus(e.c);
  for (std::size_t i = 0; i < 9; ++i) {
    for (std::size_t j = 0; j < dims.d_c; ++j) {
      CHECK(e.c_star(i, j) == want(i, j));
      CHECK(e.q(i, j) == e.c_star(i, j));
    }
    for (std::size_t v = 0; v < 2; ++v)
      for (std::size_t j = 0; j < dims.d_z; ++j)
        CHECK(e.q(i, dims.d_c + v * dims.d_z + j) == e.z[v](i, j));
  }
}

TEST_CASE("consensus is the elementwise mean of the views", "[networks]") {
  Matrix a = Matrix::from_rows({{0.0, 2.0}});
  Matrix b = Matrix::from_rows({{2.0, 0.0}});
  Matrix mean = assemble_consensus({a, b});
  CHECK(mean(0, 0) == 1.0);
  CHECK(mean(0, 1) == 1.0);

  Matrix solo = assemble_consensus({a});
  CHECK(solo(0, 0) == a(0, 0));
  CHECK(solo(0, 1) == a(0, 1));

  Matrix same = assemble_consensus({b, b, b});
  CHECK(same(0, 0) == 2.0);
  CHECK(same(0, 1) == 0.0);

  CHECK_THROWS_AS(assemble_consensus({}), ContractError);
  CHECK_THROWS_AS(assemble_consensus({a, Matrix(2, 2)}), DimError);
}

TEST_CASE("view index and width contracts are enforced", "[networks]") {
  auto p = make_model(small_dims(), 2);
  Tape t;
  auto b = bind_model(t, p, Trainable::none);
  Var x = make_constant(t, Matrix(1, 3, 0.0));
  CHECK_THROWS_AS(encode_specific(b, 2, x), ContractError);
  CHECK_THROWS_AS(encode_specific(b, 1, x), DimError);  // view 1 expects 4 cols
  CHECK_THROWS_AS(forward_embeddings(p, {Matrix(1, 3)}), DimError);
}

TEST_CASE("first optimizer step moves weights by the step size", "[networks]") {
  Matrix p = Matrix::from_rows({{1.0, -2.0, 3.0}});
  Matrix g = Matrix::from_rows({{0.5, -1.5, 2.0}});
  AdamState st;
  st.lr = 1e-3;
  adam_step(st, {&p}, {&g});
  // With fresh moments the bias-corrected update is lr * g / (|g| + eps),
  // i.e. a signed step of almost exactly lr.
  CHECK(p(0, 0) == Catch::Approx(1.0 - 1e-3).epsilon(1e-6));
  CHECK(p(0, 1) == Catch::Approx(-2.0 + 1e-3).epsilon(1e-6));
  CHECK(p(0, 2) == Catch::Approx(3.0 - 1e-3).epsilon(1e-6));
  CHECK(st.t == 1);
}

TEST_CASE("optimizer leaves parameters alone when no gradient flows", "[networks]") {
  Matrix p = Matrix::from_rows({{1.0, -2.0}});
  const Matrix before = p;
  AdamState st;
  adam_step(st, {&p}, {nullptr});
  adam_step(st, {&p}, {nullptr});
  CHECK(st.t == 2);
  for (std::size_t i = 0; i < p.data.size(); ++i) CHECK(p.data[i] == before.data[i]);
}

TEST_CASE("optimizer updates are per-parameter", "[networks]") {
  Matrix a = Matrix::from_rows({{1.0}});
  Matrix b = Matrix::from_rows({{2.0}});
  Matrix ga = Matrix::from_rows({{1.0}});
  AdamState st;
  adam_step(st, {&a, &b}, {&ga, nullptr});
  CHECK(a(0, 0) != 1.0);
  CHECK(b(0, 0) == 2.0);
}

TEST_CASE("optimizer trajectories are reproducible", "[networks]") {
  auto run = [] {
    std::mt19937_64 rng(14);
    Matrix p = testing_oracles::random_matrix(rng, 3, 4);
    AdamState st;
    st.lr = 5e-3;
    for (int step = 0; step < 25; ++step) {
      Matrix g = testing_oracles::random_matrix(rng, 3, 4);
      adam_step(st, {&p}, {&g});
    }
    return fnv1a(p);
  };
  CHECK(run() == run());
}

TEST_CASE("optimizer rejects shape and list changes", "[networks]") {
  Matrix a = Matrix::from_rows({{1.0}});
  Matrix b = Matrix::from_rows({{2.0}});
  Matrix g = Matrix::from_rows({{1.0}});
  Matrix g_bad(2, 2, 1.0);
  AdamState st;
  adam_step(st, {&a}, {&g});
  CHECK_THROWS_AS(adam_step(st, {&a, &b}, {&g, &g}), ContractError);
  CHECK_THROWS_AS(adam_step(st, {&a}, {&g_bad}), DimError);
}

TEST_CASE("checkpoints round-trip bitwise", "[networks]") {
  auto path = temp_file("gmae_ckpt_roundtrip");
  TrainConfig cfg;
  cfg.d_z = 5;
  cfg.d_c = 6;
  cfg.hidden = {8, 7};
  cfg.disc_hidden = {9};
  cfg.alpha = 0.03;
  cfg.seed = 123;

  auto dims = small_dims();
  auto p = make_model(dims, 123);
  // Perturb away from the init so load cannot pass by re-seeding alone.
  p.head_z[0].w[0](0, 0) = 42.5;
  p.disc[1].b[0](0, 0) = -7.25;
  const std::uint64_t before = hash_params(p);

  save_checkpoint(path.string(), cfg, dims.view_dims, p);
  Checkpoint ck = load_checkpoint(path.string());
  CHECK(hash_params(ck.params) == before);
  CHECK(ck.view_dims == dims.view_dims);
  CHECK(ck.config.alpha == 0.03);
  CHECK(ck.config.seed == 123);
  CHECK(ck.config.hidden == std::vector<std::size_t>{8, 7});

  // Saving the loaded model again reproduces the file byte for byte.
  auto path2 = temp_file("gmae_ckpt_roundtrip2");
  save_checkpoint(path2.string(), ck.config, ck.view_dims, ck.params);
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  std::string s1((std::istreambuf_iterator<char>(f1)), {});
  std::string s2((std::istreambuf_iterator<char>(f2)), {});
  CHECK(s1 == s2);
  CHECK_FALSE(s1.empty());

  std::filesystem::remove(path);
  std::filesystem::remove(path2);
}

TEST_CASE("corrupt checkpoints are rejected", "[networks]") {
  auto path = temp_file("gmae_ckpt_corrupt");
  TrainConfig cfg;
  cfg.d_z = 5;
  cfg.d_c = 6;
  cfg.hidden = {8, 7};
  cfg.disc_hidden = {9};
  auto dims = small_dims();
  auto p = make_model(dims, 9);
  save_checkpoint(path.string(), cfg, dims.view_dims, p);

  std::ifstream in(path, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), {});
  in.close();
  REQUIRE(bytes.size() > 64);

  auto write_variant = [&](std::string data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
  };

  SECTION("missing file") {
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_checkpoint(path.string()), IoError);
  }
  SECTION("bad magic") {
    std::string bad = bytes;
    bad[0] = 'X';
    write_variant(bad);
    CHECK_THROWS_AS(load_checkpoint(path.string()), IoError);
  }
  SECTION("unsupported version") {
    std::string bad = bytes;
    bad[4] = 9;
    write_variant(bad);
    CHECK_THROWS_AS(load_checkpoint(path.string()), IoError);
  }
  SECTION("truncated tensor data") {
    write_variant(bytes.substr(0, bytes.size() / 2));
    CHECK_THROWS_AS(load_checkpoint(path.string()), IoError);
  }
  std::filesystem::remove(path);
}

TEST_CASE("binding mode controls which parameters receive gradients", "[networks]") {
  ModelDims d;
  d.view_dims = {2};
  d.d_z = 2;
  d.d_c = 2;
  d.hidden = {3};
  d.disc_hidden = {2};
  auto p = make_model(d, 44);
  std::mt19937_64 rng(45);
  Matrix x = testing_oracles::random_matrix(rng, 4, 2);

  SECTION("main pass: encoders train, discriminator stays frozen") {
    Tape t;
    auto b = bind_model(t, p, Trainable::main_only);
    Var score = discriminate(b, 0, project_z(b, 0, encode_specific(b, 0, make_constant(t, x))));
    t.backward(sum_all(score).id);
    CHECK_FALSE(t.grad(b.enc_spec[0].w[0].id).empty());
    CHECK_FALSE(t.grad(b.head_z[0].w[0].id).empty());
    CHECK(t.grad(b.disc[0].w[0].id).empty());
    CHECK(t.grad(b.disc[0].b[0].id).empty());
  }
  SECTION("discriminator pass: only the discriminator trains", "") {
    Tape t;
    auto b = bind_model(t, p, Trainable::disc_only);
    Var score = discriminate(b, 0, project_z(b, 0, encode_specific(b, 0, make_constant(t, x))));
    t.backward(sum_all(score).id);
    CHECK_FALSE(t.grad(b.disc[0].w[0].id).empty());
    CHECK(t.grad(b.enc_spec[0].w[0].id).empty());
    CHECK(t.grad(b.head_z[0].w[0].id).empty());
  }
}

TEST_CASE("config json round-trips and rejects bad input", "[networks]") {
  TrainConfig c;
  c.alpha = 0.05;
  c.hidden = {32, 16};
  c.pairing = "all_pairs";
  TrainConfig back = train_config_from_json(to_json(c));
  CHECK(back.alpha == 0.05);
  CHECK(back.hidden == std::vector<std::size_t>{32, 16});
  CHECK(back.pairing == "all_pairs");
  CHECK(back.seed == 42);

  CHECK_THROWS_AS(train_config_from_json({{"alhpa", 0.1}}), ConfigError);
  CHECK_THROWS_AS(train_config_from_json({{"missing_ratio", 1.0}}), ConfigError);
  CHECK_THROWS_AS(train_config_from_json({{"pairing", "ring"}}), ConfigError);
  CHECK_THROWS_AS(train_config_from_json({{"learning_rate", 0.0}}), ConfigError);
  CHECK_THROWS_AS(train_config_from_json({{"hidden", nlohmann::json::array()}}), ConfigError);
  CHECK_THROWS_AS(train_config_from_json(nlohmann::json::array()), ConfigError);

  // Unknown-key errors name the offender.
  try {
    train_config_from_json({{"epohcs", 10}});
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("epohcs") != std::string::npos);
  }
}
