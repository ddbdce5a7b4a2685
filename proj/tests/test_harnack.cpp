#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "ehinet/harnack.hpp"
#include "ehinet/spaces.hpp"

using namespace ehinet;

TEST_CASE("harnack constant on the path interior") {
  auto p = generate({SpaceKind::Path, 5, 0});
  // inner ball = {1,2,3}: omega(x,4) = x/4 gives ratio 3
  auto v = harnack_constant(p.net, p.metric, 2, 2.0, 0.75);
  CHECK(!v.infinite);
  CHECK(v.value == doctest::Approx(3.0).epsilon(1e-12));
  // single inner vertex
  CHECK(harnack_constant(p.net, p.metric, 2, 2.0, 0.4).value == 1.0);
  // ball covers everything
  CHECK(harnack_constant(p.net, p.metric, 2, 10.0, 0.5).whole_space);
  CHECK_THROWS(harnack_constant(p.net, p.metric, 2, 2.0, 1.5));
}

TEST_CASE("extreme-ray value matches brute force over boundary data") {
  auto g = generate({SpaceKind::Grid, 9, 0});
  Index c = g.landmarks.at("center");
  double R = 4.2;
  auto v = harnack_constant(g.net, g.metric, c, R, 0.5);
  REQUIRE(!v.infinite);

  auto B = g.metric.ball(c, R);
  auto inner = g.metric.ball(c, 0.5 * R);
  HarmonicMeasure hm = harmonic_measure(g.net, B);
  REQUIRE(hm.boundary.size() <= 200);

  // brute force over all (u, v, z) triples
  double brute = 1.0;
  for (size_t zi = 0; zi < hm.boundary.size(); ++zi)
    for (Index u : inner)
      for (Index w : inner) {
        auto lu = std::lower_bound(hm.domain.begin(), hm.domain.end(), u) - hm.domain.begin();
        auto lw = std::lower_bound(hm.domain.begin(), hm.domain.end(), w) - hm.domain.begin();
        double a = hm.omega(lu, zi), b = hm.omega(lw, zi);
        if (b > 0.0) brute = std::max(brute, a / b);
      }
  CHECK(v.value == doctest::Approx(brute).epsilon(1e-9));

  // random nonnegative boundary data never exceeds the extremal constant
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    Eigen::VectorXd data = Eigen::VectorXd::Zero(g.net.size());
    for (Index z : hm.boundary) data[z] = uni(rng) < 0.3 ? 0.0 : uni(rng);
    if (data.maxCoeff() == 0.0) data[hm.boundary[0]] = 1.0;
    Eigen::VectorXd h = harmonic_extend(g.net, B, data);
    double mx = 0.0, mn = std::numeric_limits<double>::infinity();
    for (Index u : inner) {
      mx = std::max(mx, h[u]);
      mn = std::min(mn, h[u]);
    }
    if (mn > 0.0) CHECK(mx / mn <= v.value * (1.0 + 1e-9));
  }
}

TEST_CASE("harnack constant is nonincreasing as the inner ball shrinks") {
  auto g = generate({SpaceKind::Gasket, 0, 4});
  Index x = 30;
  double R = 0.4;
  double prev = std::numeric_limits<double>::infinity();
  for (double delta : {0.9, 0.7, 0.5, 0.3, 0.1}) {
    auto v = harnack_constant(g.net, g.metric, x, R, delta);
    REQUIRE(!v.infinite);
    CHECK(v.value <= prev * (1.0 + 1e-12));
    prev = v.value;
  }
}

TEST_CASE("ehi scan on the path and the single edge") {
  auto p = generate({SpaceKind::Path, 64, 0});
  auto rep = ehi_scan(p.net, p.metric, 0.5, {});
  CHECK(!rep.any_infinite);
  CHECK(rep.global_max < 3.0);  // one-dimensional Harnack constant at delta 1/2
  CHECK(rep.global_max > 2.0);

  auto edge = generate({SpaceKind::Path, 2, 0});
  auto rep2 = ehi_scan(edge.net, edge.metric, 0.5, {});
  CHECK(rep2.global_max == 1.0);
}

TEST_CASE("ehi scan matched-depth maxima are level-invariant on gaskets") {
  // The discrete gasket is exactly self-similar: the per-scale max at a
  // fixed depth r/resolution agrees across refinement levels (balls away
  // from the global diameter).
  std::map<int, std::map<double, double>> by_level;  // level -> depth -> max
  for (int lvl = 4; lvl <= 5; ++lvl) {
    auto g = generate({SpaceKind::Gasket, 0, lvl});
    auto rep = ehi_scan(g.net, g.metric, 0.5, {});
    for (size_t si = 0; si < rep.scales.size(); ++si) {
      if (rep.scales[si] > 0.26) continue;  // keep away from the diameter
      double depth = rep.scales[si] / g.metric.resolution();
      by_level[lvl][depth] = rep.per_scale_max[si];
    }
  }
  int compared = 0;
  for (auto& [depth, v4] : by_level[4]) {
    auto it = by_level[5].find(depth);
    if (it == by_level[5].end()) continue;
    CHECK(v4 == doctest::Approx(it->second).epsilon(1e-9));
    ++compared;
  }
  CHECK(compared >= 2);
}

TEST_CASE("check_hg on the path has ratio 1 at the center") {
  auto p = generate({SpaceKind::Path, 11, 0});
  std::vector<Index> D;
  for (Index v = 1; v <= 9; ++v) D.push_back(v);
  // path Green g_D(5, y) = min(y,5)... peaks at 5 and decays monotonically,
  // so sup outside B(5,2) equals inf on the closed ball boundary.
  auto rep = check_hg(p.net, p.metric, 5, 2.0, D, 2.0);
  CHECK(!rep.infinite);
  CHECK(rep.ratio == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("check_hg flags disconnected domains") {
  // A folded path: vertices 0..8 on a U-shape, so vertex 8 is metrically
  // adjacent to 1 but the domain D (which omits the fold 4,5) splits into
  // two components. The closed inner ball around x0 = 1 then contains a
  // vertex with zero Green value while the annulus still carries positive
  // ones: the infinite sentinel must fire.
  const int n = 9;
  std::vector<Edge> edges;
  for (int i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1, 1.0});
  Network net = Network::create(n, edges, Eigen::VectorXd::Ones(n));
  std::vector<std::vector<double>> pos = {{0, 0}, {1, 0}, {2, 0}, {3, 0}, {4, 0},
                                          {4, 1}, {3, 1}, {2, 1}, {1, 1}};
  Eigen::MatrixXd d(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      d(i, j) = std::hypot(pos[i][0] - pos[j][0], pos[i][1] - pos[j][1]);
  auto metric = PointMetric::from_matrix({0, 1, 2, 3, 4, 5, 6, 7, 8}, pos, d);
  std::vector<Index> D{0, 1, 2, 3, 6, 7, 8};
  auto rep = check_hg(net, metric, 1, 1.2, D, 2.0);
  CHECK(rep.infinite);
}

TEST_CASE("green lemmas report on the path") {
  auto p = generate({SpaceKind::Path, 65, 0});
  auto rep = check_green_lemmas(p.net, p.metric, {4, 2.0, 0.5, 0});
  for (auto& e : rep.entries) {
    INFO(e.name, " ", e.witness);
    CHECK(e.unconditional_ok);
  }
  const auto* low = rep.find("cap_vs_green_lower");
  REQUIRE(low != nullptr);
  CHECK(low->cases > 0);
  CHECK(low->constant <= 1.0 + 1e-10);  // g * Cap <= 1 with zero slack
  const auto* maxp = rep.find("maximum_principles");
  REQUIRE(maxp != nullptr);
  CHECK(maxp->cases > 0);
}

TEST_CASE("green lemmas report on the gasket") {
  auto g = generate({SpaceKind::Gasket, 0, 4});
  auto rep = check_green_lemmas(g.net, g.metric, {4, 2.0, 0.5, 0});
  for (auto& e : rep.entries) {
    INFO(e.name, " ", e.witness);
    CHECK(e.unconditional_ok);
  }
  const auto* annulus = rep.find("annulus_comparability");
  REQUIRE(annulus != nullptr);
  CHECK(annulus->cases > 0);
  CHECK(std::isfinite(annulus->constant));
}

TEST_CASE("capacity lemmas: telescoping exact, constants finite") {
  auto g = generate({SpaceKind::Gasket, 0, 4});
  auto d = build_decomposition(g.metric, 0, 8.0);
  CapacityLemmasConfig cfg;
  cfg.max_centers = 5;
  cfg.decomp = &d;
  auto rep = check_capacity_lemmas(g.net, g.metric, cfg);
  for (auto& e : rep.entries) {
    INFO(e.name, " ", e.witness);
    CHECK(e.unconditional_ok);
  }
  const auto* tel = rep.find("capacity_chain_telescoping");
  REQUIRE(tel != nullptr);
  CHECK(tel->cases > 0);
  const auto* cubes = rep.find("cube_subadditivity_surplus");
  REQUIRE(cubes != nullptr);
  CHECK(cubes->cases > 0);
  CHECK(cubes->constant > 0.0);  // strict surplus measured
}

TEST_CASE("alternating telescoping bound holds exactly on the path") {
  // Closed-form series resistances: each annulus capacitor on the path is a
  // parallel pair of arms; the alternating sum must stay below the direct
  // resistance with zero slack.
  auto p = generate({SpaceKind::Path, 129, 0});
  Index x = 64;
  for (double r : {2.0, 3.5, 5.0}) {
    std::vector<double> radii{r, 2 * r, 4 * r, 8 * r};
    double alt = 0.0;
    for (size_t i = 0; i + 1 < radii.size(); i += 2) {
      auto outer = p.metric.ball(x, radii[i + 1]);
      auto inner = p.metric.ball(x, radii[i]);
      alt += 1.0 / capacity(p.net, outer, inner).value;
    }
    double direct =
        1.0 / capacity(p.net, p.metric.ball(x, radii.back()), p.metric.ball(x, r)).value;
    CHECK(alt <= direct * (1.0 + 1e-10));
  }
}

TEST_CASE("chaining bound along an rbc chain") {
  auto p = generate({SpaceKind::Path, 33, 0});
  auto chain = rbc_chain(p.metric, 16, 8.0, 10, 22, 0.25, 2.0);
  REQUIRE(chain.has_value());
  auto res = check_chaining(p.net, p.metric, *chain, 4.0);
  if (res.evaluated) {
    CHECK(res.pass);
    CHECK(res.chain_probability >= res.step_product - 1e-12);
  }
  auto g = generate({SpaceKind::Gasket, 0, 4});
  Index corner = g.landmarks.at("A1");
  auto gchain = rbc_chain(g.metric, corner, 0.25, corner, 40, 0.3, 2.0);
  if (gchain.has_value()) {
    auto gres = check_chaining(g.net, g.metric, *gchain, 4.0);
    if (gres.evaluated) CHECK(gres.pass);
  }
}

TEST_CASE("stability: lambda 1 is the identity") {
  auto g = generate({SpaceKind::Gasket, 0, 3});
  StabilityOptions opt;
  opt.scan_max_centers = 10;
  opt.pi_max_centers = 4;
  opt.random_functions = 10;
  auto rep = stability_experiment(g.net, g.metric, 1.0, 7, 2, opt);
  CHECK(rep.edgewise_ok);
  CHECK(rep.max_harnack_ratio == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rep.max_cap_ratio == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rep.max_pi_ratio == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("stability: lambda 2 keeps constants within bounded ratios") {
  auto g = generate({SpaceKind::Gasket, 0, 3});
  StabilityOptions opt;
  opt.scan_max_centers = 12;
  opt.pi_max_centers = 4;
  opt.random_functions = 20;
  auto rep = stability_experiment(g.net, g.metric, 2.0, 11, 3, opt);
  CHECK(rep.edgewise_ok);
  CHECK(rep.max_harnack_ratio < 10.0);
  CHECK(rep.max_cap_ratio < 10.0);
  CHECK(rep.max_pi_ratio < 10.0);
  for (auto& t : rep.trials) {
    CHECK(t.energy_ratio_low >= 0.5 - 1e-9);
    CHECK(t.energy_ratio_high <= 2.0 + 1e-9);
  }
}
