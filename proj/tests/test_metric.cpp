#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "ehinet/point_metric.hpp"
#include "ehinet/spaces.hpp"

using namespace ehinet;

namespace {

PointMetric path_metric(int n) {
  Eigen::MatrixXd d(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) d(i, j) = std::abs(i - j);
  std::vector<std::int64_t> ids(n);
  for (int i = 0; i < n; ++i) ids[i] = i;
  return PointMetric::from_matrix(ids, {}, d);
}

// Independent greedy packing used as the md_constant oracle.
int packing_oracle(const PointMetric& s, Index x, double R) {
  std::vector<Index> kept;
  for (Index y = 0; y < s.size(); ++y) {
    if (!(s.dist(x, y) < R)) continue;
    bool far = true;
    for (Index k : kept) far = far && !(s.dist(k, y) < R / 2.0);
    if (far) kept.push_back(y);
  }
  return static_cast<int>(kept.size());
}

}  // namespace

TEST_CASE("metric validation rejects broken inputs") {
  Eigen::MatrixXd d(3, 3);
  d << 0, 1, 5, 1, 0, 1, 5, 1, 0;  // 5 > 1 + 1
  std::vector<std::int64_t> ids{0, 1, 2};
  CHECK_THROWS(PointMetric::from_matrix(ids, {}, d));

  d << 0, 1, 2, 1, 0, 1, 2, 1, 0;
  CHECK_NOTHROW(PointMetric::from_matrix(ids, {}, d));

  d(1, 1) = 0.5;
  CHECK_THROWS(PointMetric::from_matrix(ids, {}, d));
}

TEST_CASE("ball basics on the path") {
  auto s = path_metric(5);
  CHECK(s.ball(2, 1.5) == std::vector<Index>{1, 2, 3});
  CHECK(s.ball(0, 100.0).size() == 5);           // r > diam -> everything
  CHECK(s.ball(3, 1.0) == std::vector<Index>{3});  // r at the resolution
  CHECK_THROWS(s.ball(-1, 1.0));
}

TEST_CASE("ball monotone in the radius") {
  auto space = generate({SpaceKind::Gasket, 0, 3});
  for (Index x = 0; x < space.metric.size(); x += 7) {
    std::vector<Index> prev;
    auto radii = space.metric.dyadic_radii();
    for (auto it = radii.rbegin(); it != radii.rend(); ++it) {
      auto cur = space.metric.ball(x, *it);
      for (Index v : prev) {
        bool found = std::find(cur.begin(), cur.end(), v) != cur.end();
        CHECK(found);
      }
      prev = cur;
    }
  }
}

TEST_CASE("md constant on paths and grids") {
  auto p = path_metric(101);
  int c = md_constant(p, 1 << 20);
  CHECK(c <= 5);  // interval of length 2R holds at most 5 points R/2-separated
  CHECK(c >= 3);

  auto single = path_metric(2);
  CHECK(md_constant(path_metric(2), 10) >= 1);

  // 32 x 32 grid with the L-inf metric, exhaustive oracle comparison.
  const int k = 32;
  Eigen::MatrixXd d(k * k, k * k);
  for (int a = 0; a < k * k; ++a)
    for (int b = 0; b < k * k; ++b)
      d(a, b) = std::max(std::abs(a % k - b % k), std::abs(a / k - b / k));
  std::vector<std::int64_t> ids(k * k);
  for (int i = 0; i < k * k; ++i) ids[i] = i;
  auto grid = PointMetric::from_matrix(ids, {}, d);
  int got = md_constant(grid, static_cast<std::int64_t>(grid.size()) *
                                  static_cast<std::int64_t>(grid.dyadic_radii().size()));
  int want = 0;
  for (Index x = 0; x < grid.size(); ++x)
    for (double r : grid.dyadic_radii()) want = std::max(want, packing_oracle(grid, x, r));
  CHECK(got == want);
}

TEST_CASE("md constant monotone under point removal") {
  auto space = generate({SpaceKind::Gasket, 0, 2});
  const auto& full = space.metric;
  int base = md_constant(full, 1 << 20);
  std::mt19937 rng(7);
  for (int trial = 0; trial < 4; ++trial) {
    std::vector<Index> keep;
    for (Index v = 0; v < full.size(); ++v)
      if (rng() % 4 != 0) keep.push_back(v);
    if (keep.size() < 2) continue;
    Eigen::MatrixXd d(keep.size(), keep.size());
    std::vector<std::int64_t> ids;
    for (size_t i = 0; i < keep.size(); ++i) {
      ids.push_back(i);
      for (size_t j = 0; j < keep.size(); ++j) d(i, j) = full.dist(keep[i], keep[j]);
    }
    auto sub = PointMetric::from_matrix(ids, {}, d);
    CHECK(md_constant(sub, 1 << 20) <= base);
  }
}

TEST_CASE("rbc chains on the path") {
  auto s = path_metric(9);
  auto chain = rbc_chain(s, 4, 4.0, 0, 8, 0.3, 2.0);
  REQUIRE(chain.has_value());
  CHECK(chain->length() <= 8);
  CHECK(chain_is_valid(s, *chain));
  for (size_t i = 1; i < chain->centers.size(); ++i)
    CHECK(s.dist(chain->centers[i - 1], chain->centers[i]) < 1.2);

  auto trivial = rbc_chain(s, 4, 4.0, 3, 3, 0.3, 2.0);
  REQUIRE(trivial.has_value());
  CHECK(trivial->length() == 0);
}

TEST_CASE("rbc chain failure across disconnected clusters") {
  // Two clusters far apart: no eps R chain between them.
  Eigen::MatrixXd d(4, 4);
  d << 0, 1, 10, 10.5, 1, 0, 10.5, 10, 10, 10.5, 0, 1, 10.5, 10, 1, 0;
  auto s = PointMetric::from_matrix({0, 1, 2, 3}, {}, d);
  auto chain = rbc_chain(s, 0, 10.4, 0, 2, 0.2, 1.2);
  CHECK(!chain.has_value());
}

TEST_CASE("regularized chain respects the inner-radius constraint") {
  auto s = path_metric(33);
  RbcOptions opt;
  opt.inner_radius = 8.0;
  auto chain = rbc_chain(s, 16, 16.0, 16, 31, 0.25, 2.0, opt);
  REQUIRE(chain.has_value());
  int j = -1;
  for (size_t i = 0; i < chain->centers.size(); ++i)
    if (s.dist(16, chain->centers[i]) < 8.0) j = static_cast<int>(i);
  for (int i = 0; i <= j; ++i)
    for (Index p : s.ball(chain->centers[i], chain->step_radius))
      CHECK(s.dist(16, p) < 2.0 * 8.0);
}

TEST_CASE("uniform perfectness") {
  auto p = path_metric(101);
  auto rep = uniform_perfectness(p, 4.0);
  CHECK(rep.holds);
  CHECK(rep.checked > 0);

  // Two-point space: annulus B(0, .9) minus B(0, .45) is empty.
  Eigen::MatrixXd d(2, 2);
  d << 0, 1, 1, 0;
  auto two = PointMetric::from_matrix({0, 1}, {}, d);
  CHECK(!annulus_nonempty(two, 0, 0.9, 2.0));

  // Connected unit-edge graph metric: discreteness slack keeps annuli busy.
  auto gs = generate({SpaceKind::Gasket, 0, 3, 8, MetricKind::Graph});
  CHECK(uniform_perfectness(gs.metric, 4.0).holds);
}

TEST_CASE("qs distortion identity and squares") {
  auto p = path_metric(20);
  auto env_id = qs_distortion(p, p, 1 << 22);
  CHECK(env_id.is_finite);
  for (auto& [t, s] : env_id.sample_ratios) CHECK(s == doctest::Approx(t).epsilon(1e-12));

  // d2 = d1^2 with d1 the snowflaked path metric (diameter 1); both sides
  // are genuine metrics and the envelope is exactly t^2 on samples.
  const int n = 30;
  Eigen::MatrixXd d1(n, n), d2(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      d2(i, j) = std::abs(i - j) / double(n - 1);
      d1(i, j) = std::sqrt(d2(i, j));
    }
  std::vector<std::int64_t> ids(n);
  for (int i = 0; i < n; ++i) ids[i] = i;
  auto m1 = PointMetric::from_matrix(ids, {}, d1);
  auto m2 = PointMetric::from_matrix(ids, {}, d2);
  auto env = qs_distortion(m1, m2, 1 << 22);
  CHECK(env.is_finite);
  for (auto& [t, s] : env.sample_ratios) CHECK(s <= t * t * (1 + 1e-9));
}

TEST_CASE("qs distortion flags the truncated metric") {
  const int n = 60;  // long chain so the truncation bites
  Eigen::MatrixXd d1(n, n), d2(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      d1(i, j) = std::abs(i - j);
      d2(i, j) = i == j ? 0.0 : std::min(1.0, d1(i, j));
    }
  std::vector<std::int64_t> ids(n);
  for (int i = 0; i < n; ++i) ids[i] = i;
  auto m1 = PointMetric::from_matrix(ids, {}, d1);
  auto m2 = PointMetric::from_matrix(ids, {}, d2);
  auto env = qs_distortion(m1, m2, 1 << 22);
  CHECK(!env.is_finite);
}
