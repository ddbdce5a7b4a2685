#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "ehinet/network.hpp"
#include "ehinet/spaces.hpp"

using namespace ehinet;

TEST_CASE("path generator") {
  auto s = generate({SpaceKind::Path, 5, 0});
  CHECK(s.net.size() == 5);
  CHECK(s.net.edges().size() == 4);
  CHECK(s.metric.diameter() == doctest::Approx(4.0));
  for (const Edge& e : s.net.edges()) CHECK(e.c == 1.0);
}

TEST_CASE("gasket counts and resistance renormalization oracle") {
  for (int level = 0; level <= 4; ++level) {
    auto s = generate({SpaceKind::Gasket, 0, level});
    // 3 (3^n + 1) / 2 vertices, 3^(n+1) edges
    Index pow3 = 1;
    for (int i = 0; i < level; ++i) pow3 *= 3;
    CHECK(s.net.size() == 3 * (pow3 + 1) / 2);
    CHECK(static_cast<Index>(s.net.edges().size()) == 3 * pow3);
    CHECK(s.metric.diameter() == doctest::Approx(1.0));
  }
  auto g1 = generate({SpaceKind::Gasket, 0, 1});
  CHECK(effective_resistance(g1.net, g1.landmarks.at("A1"), g1.landmarks.at("A2")) ==
        doctest::Approx(10.0 / 9.0).epsilon(1e-12));
}

TEST_CASE("gasket fractal measure sums to the cell count") {
  auto s = generate({SpaceKind::Gasket, 0, 3, 8, MetricKind::Euclidean, MeasureScheme::Fractal});
  // every smallest cell spreads mass 3 * 3^-n; total = 3^n cells * 3 * 3^-n = 3
  CHECK(s.net.measure().sum() == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("vicsek tree structure") {
  for (int level = 0; level <= 3; ++level) {
    auto s = generate({SpaceKind::Vicsek, 0, level});
    Index pow5 = 1;
    for (int i = 0; i < level; ++i) pow5 *= 5;
    CHECK(s.net.size() == 4 * pow5 + 1);
    CHECK(static_cast<Index>(s.net.edges().size()) == s.net.size() - 1);  // tree
  }
}

TEST_CASE("joined gasket-square-segment space reproduces the junction geometry") {
  auto s = generate({SpaceKind::JoinedGsq, 9, 3, 8, MetricKind::Graph});
  // Components glued: connected by Network::create; A4 sits on the square's
  // right side midpoint and carries the segment.
  Index a4 = s.landmarks.at("A4");
  Index a3 = s.landmarks.at("A3");
  CHECK(a4 != a3);

  // Cut-vertex audit: removing A3 and the gasket bottom row must disconnect
  // the segment side from the square's interior only through A4. Check that
  // A4 is a cut vertex between the segment interior and the square interior.
  const Network& net = s.net;
  std::set<Index> blocked{a4};
  // BFS from the segment neighbor of A4 avoiding A4.
  Index seg_neighbor = -1;
  for (auto& [w, c] : net.neighbors(a4)) {
    // segment vertices have positions to the right of x = 1 or above the square
    const auto& p = s.metric.positions()[w];
    if (p[0] > 1.0 + 1e-9) seg_neighbor = w;
  }
  REQUIRE(seg_neighbor >= 0);
  std::vector<char> seen(net.size(), 0);
  seen[a4] = 1;
  std::vector<Index> stack{seg_neighbor};
  seen[seg_neighbor] = 1;
  bool reaches_square_interior = false;
  while (!stack.empty()) {
    Index u = stack.back();
    stack.pop_back();
    const auto& p = s.metric.positions()[u];
    if (p[1] < -1e-9 && p[0] < 1.0 - 1e-9) reaches_square_interior = true;
    for (auto& [w, c] : net.neighbors(u))
      if (!seen[w]) {
        seen[w] = 1;
        stack.push_back(w);
      }
  }
  // The segment escapes into the rest of the space only through the gasket
  // apex A3, never directly into the square: the walk from the segment into
  // the square interior must pass A3's side (it can, via the gasket bottom),
  // so reachability holds, but A4's square-side neighbors are the only
  // direct contact. Verify the direct contact count.
  int square_neighbors_of_a4 = 0;
  for (auto& [w, c] : net.neighbors(a4)) {
    const auto& p = s.metric.positions()[w];
    if (p[0] <= 1.0 + 1e-9 && p[1] <= 1e-9) square_neighbors_of_a4++;
  }
  CHECK(square_neighbors_of_a4 >= 2);  // grid neighbors up/down/left
  CHECK(reaches_square_interior);      // glued space is connected around the loop
}

TEST_CASE("vicsek interval join") {
  // Cable conductances make the graph metric read off geometric length:
  // the attached interval has total length 1.
  auto s = generate({SpaceKind::VicsekInterval, 0, 2, 6, MetricKind::Graph,
                     MeasureScheme::Fractal, ConductanceScheme::Cable});
  Index end = s.landmarks.at("interval_end");
  Index attach = s.landmarks.at("corner11");
  CHECK(s.metric.dist(attach, end) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("subdivision preserves effective resistances exactly") {
  auto s = generate({SpaceKind::Gasket, 0, 3});
  auto sub = subdivide(s, 4);
  CHECK(sub.net.size() == s.net.size() + 3 * static_cast<Index>(s.net.edges().size()));
  for (auto& [name, v] : s.landmarks) {
    for (auto& [name2, w] : s.landmarks) {
      if (v == w) continue;
      double r0 = effective_resistance(s.net, v, w);
      double r1 = effective_resistance(sub.net, sub.landmarks.at(name), sub.landmarks.at(name2));
      CHECK(r1 == doctest::Approx(r0).epsilon(1e-10));
    }
  }

  // single unit edge, factor 4: conductance 4 per piece, end-to-end 1
  Space edge;
  edge.net = Network::create(2, {{0, 1, 1.0}}, Eigen::VectorXd::Ones(2));
  edge.metric = graph_metric(edge.net, {{0.0, 0.0}, {1.0, 0.0}});
  auto esub = subdivide(edge, 4);
  CHECK(esub.net.size() == 5);
  for (const Edge& e : esub.net.edges()) CHECK(e.c == doctest::Approx(4.0));
  CHECK(effective_resistance(esub.net, 0, 1) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("perturbation determinism and certificates") {
  auto s = generate({SpaceKind::Gasket, 0, 2});
  PerturbCertificate c1, c2;
  Network p1 = perturb(s.net, 2.0, 99, &c1);
  Network p2 = perturb(s.net, 2.0, 99, &c2);
  for (size_t i = 0; i < p1.edges().size(); ++i)
    CHECK(p1.edges()[i].c == p2.edges()[i].c);
  CHECK(c1.max_multiplier == c2.max_multiplier);
  CHECK(c1.max_multiplier <= 2.0);
  CHECK(c1.min_multiplier >= 0.5);

  Network id = perturb(s.net, 1.0, 7);
  for (size_t i = 0; i < id.edges().size(); ++i) CHECK(id.edges()[i].c == s.net.edges()[i].c);
}

TEST_CASE("generators are pure functions of the spec") {
  auto a = generate({SpaceKind::Vicsek, 0, 2});
  auto b = generate({SpaceKind::Vicsek, 0, 2});
  CHECK(a.net.size() == b.net.size());
  CHECK((a.metric.matrix() - b.metric.matrix()).cwiseAbs().maxCoeff() == 0.0);
  for (size_t i = 0; i < a.net.edges().size(); ++i) {
    CHECK(a.net.edges()[i].u == b.net.edges()[i].u);
    CHECK(a.net.edges()[i].c == b.net.edges()[i].c);
  }
}
