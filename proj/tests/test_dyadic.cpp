#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ehinet/dyadic.hpp"
#include "ehinet/spaces.hpp"

using namespace ehinet;

namespace {
Space path_space(int n) { return generate({SpaceKind::Path, n, 0}); }
}  // namespace

TEST_CASE("decomposition on the unit path matches the hand greedy") {
  auto s = path_space(5);  // diam 4, scales 4, 0.5, ...
  auto d = build_decomposition(s.metric, 0, 8.0);
  // N_0: greedy 4-separated from 0: {0, 4}
  REQUIRE(d.nets[0] == std::vector<Index>{0, 4});
  CHECK(d.k0 == 0);
  // scale(1) = 0.5 < 1: every point joins the net
  REQUIRE(d.k_max == 1);
  CHECK(d.nets[1].size() == 5);
  // cubes at level 0: nearest-center cells, tie at vertex 2 broken to the
  // lower point index
  CHECK(d.center_of[0][0] == 0);
  CHECK(d.center_of[0][1] == 0);
  CHECK(d.center_of[0][2] == 0);  // tie 0 vs 4 -> 0
  CHECK(d.center_of[0][3] == 4);
  CHECK(d.center_of[0][4] == 4);
  CHECK(verify_decomposition(d, s.metric).all_pass());
}

TEST_CASE("single point space") {
  Eigen::MatrixXd d0(1, 1);
  d0 << 0.0;
  auto m = PointMetric::from_matrix({7}, {}, d0);
  auto d = build_decomposition(m, 0, 8.0);
  CHECK(d.k_max == 0);
  CHECK(d.k0 == DyadicDecomposition::kNeverSplits);
  CHECK(verify_decomposition(d, m).all_pass());
}

TEST_CASE("A below 8 is rejected; unknown root is rejected") {
  auto s = path_space(9);
  CHECK_THROWS(build_decomposition(s.metric, 0, 4.0));
  CHECK_THROWS(build_decomposition(s.metric, 99, 8.0));
}

TEST_CASE("determinism: identical inputs give identical decompositions") {
  auto s = generate({SpaceKind::Gasket, 0, 3});
  auto d1 = build_decomposition(s.metric, 0, 8.0);
  auto d2 = build_decomposition(s.metric, 0, 8.0);
  CHECK(d1.nets == d2.nets);
  CHECK(d1.parent == d2.parent);
  CHECK(d1.center_of == d2.center_of);
}

TEST_CASE("verify_decomposition passes on the acceptance spaces") {
  for (auto spec : {SpaceSpec{SpaceKind::Path, 100, 0}, SpaceSpec{SpaceKind::Grid, 16, 0},
                    SpaceSpec{SpaceKind::Gasket, 0, 4}, SpaceSpec{SpaceKind::Vicsek, 0, 2}}) {
    auto s = generate(spec);
    auto d = build_decomposition(s.metric, 0, 8.0);
    auto rep = verify_decomposition(d, s.metric);
    for (auto& check : rep.checks) {
      INFO(check.name, " ", check.witness);
      CHECK(check.pass);
    }
    CHECK(rep.measured_CM >= 1);
  }
}

TEST_CASE("corrupted parent map is caught with a witness") {
  auto s = generate({SpaceKind::Gasket, 0, 3});
  auto d = build_decomposition(s.metric, 0, 8.0);
  REQUIRE(d.k_max >= 1);
  // Reroute one fine net point to a wrong parent.
  auto& par = d.parent[d.k_max];
  Index victim = -1;
  for (size_t i = 0; i < par.size(); ++i)
    if (d.nets[d.k_max][i] != par[i]) {  // not its own parent
      victim = static_cast<Index>(i);
      break;
    }
  REQUIRE(victim >= 0);
  Index wrong = d.nets[d.k_max - 1].back();
  if (par[victim] == wrong) wrong = d.nets[d.k_max - 1].front();
  par[victim] = wrong;
  // Rebuild cube membership bottom-up from the corrupted parents.
  const Index n = s.metric.size();
  for (int k = d.k_max - 1; k >= 0; --k) {
    std::vector<Index> parent_of_net(n, -1);
    const auto& fine = d.nets[k + 1];
    for (size_t i = 0; i < fine.size(); ++i) parent_of_net[fine[i]] = d.parent[k + 1][i];
    for (Index p = 0; p < n; ++p) d.center_of[k][p] = parent_of_net[d.center_of[k + 1][p]];
  }
  auto rep = verify_decomposition(d, s.metric);
  CHECK(!rep.all_pass());
}

TEST_CASE("grid 32x32 inner/outer constants hold exactly") {
  auto s = generate({SpaceKind::Grid, 32, 0});
  auto d = build_decomposition(s.metric, 0, 8.0);
  auto rep = verify_decomposition(d, s.metric);
  const auto* c = rep.find("c_inner_outer_ball");
  REQUIRE(c != nullptr);
  CHECK(c->pass);
  // Root persistence
  const auto* h = rep.find("h_root_cube");
  REQUIRE(h != nullptr);
  CHECK(h->pass);
}

TEST_CASE("cube lookup consistency") {
  auto s = generate({SpaceKind::Vicsek, 0, 2});
  auto d = build_decomposition(s.metric, 0, 8.0);
  for (int k = 0; k < d.k_max; ++k) {
    for (Index q : d.nets[k]) {
      for (Index p : d.cube_members(k, q)) CHECK(d.center_of[k][p] == q);
      // union of successor cubes = this cube
      std::vector<char> mark(s.metric.size(), 0);
      for (Index y : d.successors(k, q))
        for (Index p : d.cube_members(k + 1, y)) mark[p] = 1;
      for (Index p : d.cube_members(k, q)) CHECK(mark[p] == 1);
    }
  }
}

TEST_CASE("cube capacities: path closed form at the finest level") {
  auto s = path_space(200);
  auto d = build_decomposition(s.metric, 0, 8.0);
  auto caps = cube_capacities(d, s.net, s.metric);
  REQUIRE(caps.has_level(d.k_max));
  // At the finest level the cube is the single vertex {x} and the ball is
  // x +- scale(k-1); interior point capacity is the series-parallel sum of
  // the two arms: 1/ceil(gap) each side.
  int k = d.k_max;
  double ball_r = d.scale(k - 1);
  REQUIRE(ball_r != std::floor(ball_r));  // non-integer radius: clean arms
  // Each arm from x to the first vertex outside the open ball carries
  // floor(r) + 1 unit edges in series; two arms in parallel.
  int arm_edges = static_cast<int>(std::floor(ball_r)) + 1;
  for (Index x : d.nets[k]) {
    if (x < arm_edges || x > 199 - arm_edges) continue;  // skip clipped ends
    if (d.cube_members(k, x).size() != 1) continue;
    CHECK(caps.at(k, x) == doctest::Approx(2.0 / arm_edges).epsilon(1e-9));
  }
  CHECK(caps.delta_hat > 0.0);
  CHECK(caps.C1_within >= 1.0);
  CHECK(caps.S_max >= 2);
}

TEST_CASE("sibling symmetry: identical geometry gives identical capacities") {
  // Uniform cycle: every vertex sees the same geometry, so same-level
  // capacities agree across net points whose cubes are singletons.
  const int n = 64;
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i) edges.push_back({i, (i + 1) % n, 1.0});
  Network net = Network::create(n, edges, Eigen::VectorXd::Ones(n));
  PointMetric metric = graph_metric(net, {});
  auto d = build_decomposition(metric, 0, 8.0);
  auto caps = cube_capacities(d, net, metric);
  int k = d.k_max;
  REQUIRE(caps.has_level(k));
  double ref = -1.0;
  for (Index x : d.nets[k]) {
    if (d.cube_members(k, x).size() != 1) continue;
    if (ref < 0) ref = caps.at(k, x);
    CHECK(caps.at(k, x) == doctest::Approx(ref).epsilon(1e-10));
  }
}

TEST_CASE("ESP surplus is positive on the gasket") {
  auto s = generate({SpaceKind::Gasket, 0, 4});
  auto d = build_decomposition(s.metric, 0, 8.0);
  auto caps = cube_capacities(d, s.net, s.metric);
  // All covered consecutive level pairs must show strict surplus.
  for (int k = caps.k_min; k < d.k_max; ++k) {
    if (!caps.has_level(k) || !caps.has_level(k + 1)) continue;
    CHECK(caps.delta_by_level[k] > 0.0);
  }
}
