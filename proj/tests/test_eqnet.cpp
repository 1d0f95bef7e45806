//
// Project UniMoMo - Copyright 2026 UniMoMo Developers.
// SPDX-License-Identifier: Apache-2.0
//

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <doctest.h>

#include "testutil.hpp"
#include "unimomo/eqnet.hpp"
#include "unimomo/errors.hpp"

namespace {

using namespace unimomo;  // NOLINT
namespace ut = unimomo::test;

Vec3 rotate(const std::vector<double>& r, const Vec3& v) {
  return Vec3{r[0] * v[0] + r[1] * v[1] + r[2] * v[2],
              r[3] * v[0] + r[4] * v[1] + r[5] * v[2],
              r[6] * v[0] + r[7] * v[1] + r[8] * v[2]};
}

// Applies a rotation to every 3-row block of a (3n, c) vector-channel tensor.
Tensor rotate_channels(const std::vector<double>& r, const Tensor& v) {
  Tensor out(v.rows(), v.cols());
  for (std::size_t b = 0; b + 2 < v.rows(); b += 3)
    for (std::size_t c = 0; c < v.cols(); ++c) {
      const double x = v(b, c), y = v(b + 1, c), z = v(b + 2, c);
      out(b, c) = r[0] * x + r[1] * y + r[2] * z;
      out(b + 1, c) = r[3] * x + r[4] * y + r[5] * z;
      out(b + 2, c) = r[6] * x + r[7] * y + r[8] * z;
    }
  return out;
}

EqNetConfig small_config() {
  EqNetConfig cfg;
  cfg.hidden_size = 64;
  cfg.n_layers = 3;
  cfg.n_heads = 4;
  cfg.n_rbf = 16;
  cfg.cutoff = 6.0;
  cfg.edge_embed_size = 32;
  cfg.vector_channels = 8;
  return cfg;
}

struct Fixture {
  EqNetConfig cfg;
  ParamStore store;
  std::vector<Vec3> coords;
  std::vector<int> context;
  std::vector<BondSpec> bonds;
  EdgeList edges;
  EqFeatures features;
};

Fixture make_fixture(std::uint64_t seed, const EqNetConfig& cfg,
                     std::size_t n_nodes) {
  Fixture fx;
  fx.cfg = cfg;
  const auto xyz = ut::random_vector(seed, 3 * n_nodes, -2.0, 2.0);
  for (std::size_t i = 0; i < n_nodes; ++i)
    fx.coords.push_back(Vec3{xyz[3 * i], xyz[3 * i + 1], xyz[3 * i + 2]});
  fx.context.assign(n_nodes, 0);
  for (std::size_t i = n_nodes / 2; i < n_nodes; ++i)
    fx.context[i] = 1;
  if (n_nodes >= 3) {
    fx.bonds.push_back({0, 1, 1});
    fx.bonds.push_back({1, 2, 2});
  }
  fx.edges = build_edges(fx.coords, fx.context, fx.bonds, cfg.cutoff);
  fx.features.scalars =
      Tensor(n_nodes, cfg.hidden_size,
             ut::random_vector(seed + 1, n_nodes * cfg.hidden_size));
  fx.features.vectors =
      Tensor(3 * n_nodes, cfg.vector_channels,
             ut::random_vector(seed + 2, 3 * n_nodes * cfg.vector_channels));
  fx.features.coords = fx.coords;
  return fx;
}

std::set<std::tuple<std::size_t, std::size_t, int>> edge_set(
    const EdgeList& e) {
  std::set<std::tuple<std::size_t, std::size_t, int>> s;
  for (std::size_t i = 0; i < e.size(); ++i)
    s.insert({e.src[i], e.dst[i], e.type[i]});
  return s;
}

}  // namespace

TEST_CASE("eqnet config validation") {
  EqNetConfig cfg;  // defaults
  CHECK_NOTHROW(cfg.validate());

  EqNetConfig bad = cfg;
  bad.hidden_size = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.n_rbf = 1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.cutoff = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.hidden_size = 510;  // not divisible by 8 heads
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.vector_channels = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("radial basis embedding fixtures") {
  EqNetConfig cfg;
  cfg.n_rbf = 64;
  cfg.cutoff = 10.0;
  const double spacing = cfg.cutoff / 63.0;

  // A distance sitting exactly on a center produces 1.0 in that component.
  const auto at_center = rbf_embed(3.0 * spacing, cfg);
  REQUIRE(at_center.size() == 64);
  CHECK(at_center[3] == 1.0);

  const auto at_zero = rbf_embed(0.0, cfg);
  CHECK(at_zero[0] == 1.0);

  // Full vector against a direct reimplementation of the formula.
  const double d = cfg.cutoff / 2.0;
  const auto got = rbf_embed(d, cfg);
  for (std::size_t k = 0; k < 64; ++k) {
    const double delta = d - spacing * static_cast<double>(k);
    const double want = std::exp(-delta * delta / (2.0 * spacing * spacing));
    CHECK(std::abs(got[k] - want) <= 1e-12);
    CHECK(got[k] > 0.0);
    CHECK(got[k] <= 1.0);
  }

  // The tape's fused version matches the scalar helper row by row.
  Tape tape;
  const std::vector<double> ds = {0.37, 5.0, 9.99};
  const Value v =
      tape.rbf(tape.constant(Tensor::column(ds)), cfg.n_rbf, cfg.cutoff);
  const Tensor& tv = tape.val(v);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto want = rbf_embed(ds[i], cfg);
    for (std::size_t k = 0; k < 64; ++k)
      CHECK(std::abs(tv(i, k) - want[k]) <= 1e-15);
  }
}

TEST_CASE("edge construction") {
  SUBCASE("k-nearest selection on a line") {
    // Four collinear points, spacing 1.0, cutoff 2.5, k=2. Node 0 reaches
    // nodes 1 and 2 only; node 3 likewise on its side; symmetrized union:
    // (0,1) (0,2) (1,2) (1,3) (2,3).
    std::vector<Vec3> coords = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}};
    std::vector<int> ctx(4, 0);
    const EdgeList e = build_edges(coords, ctx, {}, 2.5, 2);
    const auto s = edge_set(e);
    CHECK(s.size() == 10);  // five pairs, both directions
    CHECK(s.count({0, 1, kEdgeTypeSpatial}) == 1);
    CHECK(s.count({1, 0, kEdgeTypeSpatial}) == 1);
    CHECK(s.count({0, 2, kEdgeTypeSpatial}) == 1);
    CHECK(s.count({1, 2, kEdgeTypeSpatial}) == 1);
    CHECK(s.count({1, 3, kEdgeTypeSpatial}) == 1);
    CHECK(s.count({2, 3, kEdgeTypeSpatial}) == 1);
    CHECK(s.count({0, 3, kEdgeTypeSpatial}) == 0);  // beyond cutoff
  }

  SUBCASE("bonds survive beyond the cutoff and carry their order") {
    std::vector<Vec3> coords = {{0, 0, 0}, {5, 0, 0}, {40, 0, 0}};
    std::vector<int> ctx(3, 0);
    const EdgeList e = build_edges(coords, ctx, {{0, 1, 2}}, 2.0);
    const auto s = edge_set(e);
    CHECK(s.size() == 2);
    CHECK(s.count({0, 1, 2}) == 1);
    CHECK(s.count({1, 0, 2}) == 1);  // node 2 is isolated
  }

  SUBCASE("context typing") {
    std::vector<Vec3> coords = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}};
    std::vector<int> ctx = {0, 0, 1, 1};
    const EdgeList e = build_edges(coords, ctx, {{0, 1, 1}}, 5.0);
    const auto s = edge_set(e);
    CHECK(s.count({0, 1, 1}) == 1);                  // bonded pair keeps order
    CHECK(s.count({2, 3, kEdgeTypeSpatialAlt}) == 1);
    CHECK(s.count({0, 2, kEdgeTypeCross}) == 1);
    CHECK(s.count({1, 3, kEdgeTypeCross}) == 1);
  }

  SUBCASE("symmetry and degree bounds on a random cloud") {
    const std::size_t n = 30, k = 5;
    const auto xyz = ut::random_vector(91, 3 * n, -1.5, 1.5);
    std::vector<Vec3> coords;
    for (std::size_t i = 0; i < n; ++i)
      coords.push_back(Vec3{xyz[3 * i], xyz[3 * i + 1], xyz[3 * i + 2]});
    std::vector<int> ctx(n, 0);
    const EdgeList e = build_edges(coords, ctx, {}, 10.0, k);
    const auto s = edge_set(e);
    CHECK(s.size() == e.size());  // no duplicates
    for (const auto& t : s)
      CHECK(s.count({std::get<1>(t), std::get<0>(t), std::get<2>(t)}) == 1);
    // Each node contributes at most k unordered selections, so the pair
    // count is bounded by n*k; with 30 points in a small box and k=5 the
    // neighbor lists are full, so every node must select exactly k.
    CHECK(s.size() <= 2 * n * k);
    CHECK(s.size() >= n * k);
  }

  SUBCASE("validation") {
    std::vector<Vec3> coords = {{0, 0, 0}, {1, 0, 0}};
    std::vector<int> ctx = {0, 0};
    CHECK_THROWS_AS(build_edges(coords, {0}, {}, 5.0), ConfigError);
    CHECK_THROWS_AS(build_edges(coords, {0, 2}, {}, 5.0), ConfigError);
    CHECK_THROWS_AS(build_edges(coords, ctx, {}, 0.0), ConfigError);
    CHECK_THROWS_AS(build_edges(coords, ctx, {}, 5.0, 0), ConfigError);
    CHECK_THROWS_AS(build_edges(coords, ctx, {{0, 2, 1}}, 5.0), DataError);
    CHECK_THROWS_AS(build_edges(coords, ctx, {{0, 0, 1}}, 5.0), DataError);
    CHECK_THROWS_AS(build_edges(coords, ctx, {{0, 1, 4}}, 5.0), DataError);
  }
}

TEST_CASE("forward input validation") {
  const EqNetConfig cfg = small_config();
  ParamStore store;
  RandomStream rng(7);
  const EqNet net(store, "net", cfg, rng);
  Fixture fx = make_fixture(11, cfg, 6);

  SUBCASE("shape mismatches are configuration errors") {
    EqFeatures bad = fx.features;
    bad.scalars = Tensor(6, cfg.hidden_size + 1);
    CHECK_THROWS_AS(net.forward(bad, fx.edges), ConfigError);
    bad = fx.features;
    bad.vectors = Tensor(3 * 6, cfg.vector_channels + 1);
    CHECK_THROWS_AS(net.forward(bad, fx.edges), ConfigError);
  }

  SUBCASE("non-finite inputs name the offending node") {
    EqFeatures bad = fx.features;
    bad.coords[2][1] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_WITH_AS(net.forward(bad, fx.edges),
                         doctest::Contains("node 2"), NumericError);
    bad = fx.features;
    bad.scalars(1, 3) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_WITH_AS(net.forward(bad, fx.edges),
                         doctest::Contains("node 1"), NumericError);
    bad = fx.features;
    bad.vectors(3 * 4 + 2, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_WITH_AS(net.forward(bad, fx.edges),
                         doctest::Contains("node 4"), NumericError);
  }

  SUBCASE("broken edge lists are data errors") {
    EdgeList bad = fx.edges;
    bad.src[0] = 99;
    CHECK_THROWS_AS(net.forward(fx.features, bad), DataError);
    bad = fx.edges;
    bad.src[0] = bad.dst[0];
    CHECK_THROWS_AS(net.forward(fx.features, bad), DataError);
    bad = fx.edges;
    bad.type[0] = 17;
    CHECK_THROWS_AS(net.forward(fx.features, bad), DataError);
  }
}

TEST_CASE("single node without edges") {
  const EqNetConfig cfg = small_config();
  ParamStore store;
  RandomStream rng(3);
  const EqNet net(store, "net", cfg, rng);

  EqFeatures in;
  in.scalars = Tensor(1, cfg.hidden_size,
                      ut::random_vector(21, cfg.hidden_size));
  in.vectors = Tensor(3, cfg.vector_channels);  // zero vectors
  in.coords = {Vec3{1.0, -2.0, 0.5}};
  const EdgeList edges = build_edges(in.coords, {0}, {}, cfg.cutoff);
  CHECK(edges.size() == 0);

  const EqFeatures out = net.forward(in, edges);
  // Zero vectors stay exactly zero under a bias-free vector path.
  for (double v : out.vectors.vec())
    CHECK(v == 0.0);
  // Scalars still run through the residual stack.
  double change = 0.0;
  for (std::size_t j = 0; j < cfg.hidden_size; ++j) {
    CHECK(std::isfinite(out.scalars(0, j)));
    change = std::max(change, std::abs(out.scalars(0, j) - in.scalars(0, j)));
  }
  CHECK(change > 0.0);

  // With no edges the vector output is linear in the vector input (scalars
  // do not see the vectors), so doubling the input doubles the output.
  EqFeatures in1 = in;
  in1.vectors = Tensor(3, cfg.vector_channels,
                       ut::random_vector(22, 3 * cfg.vector_channels));
  EqFeatures in2 = in1;
  for (double& v : in2.vectors.vec())
    v *= 2.0;
  const EqFeatures out1 = net.forward(in1, edges);
  const EqFeatures out2 = net.forward(in2, edges);
  for (std::size_t i = 0; i < out1.vectors.size(); ++i)
    CHECK(std::abs(out2.vectors.vec()[i] - 2.0 * out1.vectors.vec()[i]) <=
          1e-12);
  // And the scalar trajectory is unaffected by the vector input.
  CHECK(ut::max_abs_diff(out1.scalars.vec(), out.scalars.vec()) <= 1e-15);
}

TEST_CASE("rigid motion equivariance over 20 random motions") {
  const EqNetConfig cfg = small_config();
  ParamStore store;
  RandomStream rng(41);
  const EqNet net(store, "net", cfg, rng);
  const Fixture fx = make_fixture(101, cfg, 9);
  const EqFeatures base = net.forward(fx.features, fx.edges);

  for (int trial = 0; trial < 20; ++trial) {
    const auto r = ut::random_rotation(500 + trial);
    const auto tvec = ut::random_vector(700 + trial, 3, -5.0, 5.0);

    EqFeatures moved = fx.features;
    for (std::size_t i = 0; i < moved.coords.size(); ++i) {
      const Vec3 rc = rotate(r, fx.coords[i]);
      moved.coords[i] =
          Vec3{rc[0] + tvec[0], rc[1] + tvec[1], rc[2] + tvec[2]};
    }
    moved.vectors = rotate_channels(r, fx.features.vectors);

    // Edge construction commutes with rigid motions (distances unchanged).
    const EdgeList moved_edges =
        build_edges(moved.coords, fx.context, fx.bonds, cfg.cutoff);
    REQUIRE(edge_set(moved_edges) == edge_set(fx.edges));

    const EqFeatures out = net.forward(moved, moved_edges);
    CHECK(ut::max_rel_diff(out.scalars.vec(), base.scalars.vec()) <= 1e-4);
    const Tensor want = rotate_channels(r, base.vectors);
    CHECK(ut::max_rel_diff(out.vectors.vec(), want.vec()) <= 1e-4);
  }
}

TEST_CASE("reflection equivariance") {
  const EqNetConfig cfg = small_config();
  ParamStore store;
  RandomStream rng(43);
  const EqNet net(store, "net", cfg, rng);
  const Fixture fx = make_fixture(103, cfg, 8);
  const EqFeatures base = net.forward(fx.features, fx.edges);

  // Mirror through the yz plane: an improper transformation.
  const std::vector<double> mirror = {-1, 0, 0, 0, 1, 0, 0, 0, 1};
  EqFeatures moved = fx.features;
  for (auto& c : moved.coords)
    c[0] = -c[0];
  moved.vectors = rotate_channels(mirror, fx.features.vectors);
  const EdgeList moved_edges =
      build_edges(moved.coords, fx.context, fx.bonds, cfg.cutoff);
  const EqFeatures out = net.forward(moved, moved_edges);
  CHECK(ut::max_rel_diff(out.scalars.vec(), base.scalars.vec()) <= 1e-4);
  const Tensor want = rotate_channels(mirror, base.vectors);
  CHECK(ut::max_rel_diff(out.vectors.vec(), want.vec()) <= 1e-4);
}

TEST_CASE("pure translation leaves scalars and vectors unchanged") {
  const EqNetConfig cfg = small_config();
  ParamStore store;
  RandomStream rng(47);
  const EqNet net(store, "net", cfg, rng);
  const Fixture fx = make_fixture(107, cfg, 7);
  const EqFeatures base = net.forward(fx.features, fx.edges);

  EqFeatures moved = fx.features;
  for (auto& c : moved.coords) {
    c[0] += 17.25;
    c[1] -= 8.5;
    c[2] += 3.75;
  }
  const EqFeatures out = net.forward(moved, fx.edges);
  CHECK(ut::max_rel_diff(out.scalars.vec(), base.scalars.vec()) <= 1e-9);
  CHECK(ut::max_rel_diff(out.vectors.vec(), base.vectors.vec()) <= 1e-9);
}

TEST_CASE("permutation equivariance") {
  const EqNetConfig cfg = small_config();
  ParamStore store;
  RandomStream rng(53);
  const EqNet net(store, "net", cfg, rng);
  const std::size_t n = 8;
  const Fixture fx = make_fixture(113, cfg, n);
  const EqFeatures base = net.forward(fx.features, fx.edges);

  const std::vector<std::size_t> perm = {3, 1, 4, 0, 5, 2, 7, 6};
  EqFeatures moved;
  moved.scalars = Tensor(n, cfg.hidden_size);
  moved.vectors = Tensor(3 * n, cfg.vector_channels);
  moved.coords.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    moved.coords[perm[i]] = fx.coords[i];
    for (std::size_t j = 0; j < cfg.hidden_size; ++j)
      moved.scalars(perm[i], j) = fx.features.scalars(i, j);
    for (std::size_t k = 0; k < 3; ++k)
      for (std::size_t c = 0; c < cfg.vector_channels; ++c)
        moved.vectors(3 * perm[i] + k, c) = fx.features.vectors(3 * i + k, c);
  }
  EdgeList redges;
  for (std::size_t e = 0; e < fx.edges.size(); ++e) {
    redges.src.push_back(perm[fx.edges.src[e]]);
    redges.dst.push_back(perm[fx.edges.dst[e]]);
    redges.type.push_back(fx.edges.type[e]);
  }

  const EqFeatures out = net.forward(moved, redges);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < cfg.hidden_size; ++j)
      CHECK(std::abs(out.scalars(perm[i], j) - base.scalars(i, j)) <= 1e-10);
    for (std::size_t k = 0; k < 3; ++k)
      for (std::size_t c = 0; c < cfg.vector_channels; ++c)
        CHECK(std::abs(out.vectors(3 * perm[i] + k, c) -
                       base.vectors(3 * i + k, c)) <= 1e-10);
  }
}

TEST_CASE("forward is deterministic") {
  const EqNetConfig cfg = small_config();
  ParamStore store;
  RandomStream rng(59);
  const EqNet net(store, "net", cfg, rng);
  const Fixture fx = make_fixture(127, cfg, 6);
  const EqFeatures a = net.forward(fx.features, fx.edges);
  const EqFeatures b = net.forward(fx.features, fx.edges);
  CHECK(a.scalars.vec() == b.scalars.vec());
  CHECK(a.vectors.vec() == b.vectors.vec());
}

TEST_CASE("parameter gradients match central finite differences") {
  EqNetConfig cfg;
  cfg.hidden_size = 8;
  cfg.n_layers = 2;
  cfg.n_heads = 2;
  cfg.n_rbf = 4;
  cfg.cutoff = 5.0;
  cfg.edge_embed_size = 8;
  cfg.vector_channels = 3;

  ParamStore store;
  RandomStream rng(61);
  const EqNet net(store, "net", cfg, rng);

  const std::size_t n = 5;
  const Fixture fx = make_fixture(131, cfg, n);
  const Tensor scalars0 = fx.features.scalars;
  const Tensor vectors0 = fx.features.vectors;

  const auto loss = [&](bool backward) {
    Tape tape;
    const Value h0 = tape.constant(scalars0);
    const Value v0 = tape.constant(vectors0);
    const EqNet::TapeOut out = net.run(tape, h0, v0, fx.coords, fx.edges);
    const Value l =
        tape.scale(tape.add(tape.sum_all(tape.square(out.scalars)),
                            tape.sum_all(tape.square(out.vectors))),
                   0.01);
    if (backward)
      tape.backward(l);
    return tape.val(l).item();
  };

  const double worst = ut::param_gradcheck(store, loss, 1e-3);
  CHECK(worst <= 1e-2);
}
