#include "ehinet/point_metric.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <random>
#include <stdexcept>
#include <unordered_map>

#include "ehinet/parallel.hpp"

namespace ehinet {

namespace {
constexpr double kTriangleTol = 1e-9;  // relative

void validate_metric(const Eigen::MatrixXd& d, int threads) {
  const Index n = static_cast<Index>(d.rows());
  if (d.cols() != n) throw std::invalid_argument("distance matrix not square");
  for (Index i = 0; i < n; ++i) {
    if (d(i, i) != 0.0) throw std::invalid_argument("nonzero diagonal in metric");
    for (Index j = i + 1; j < n; ++j) {
      double dij = d(i, j);
      if (!(dij > 0.0) || !std::isfinite(dij))
        throw std::invalid_argument("non-positive or non-finite distance between distinct points");
      if (dij != d(j, i)) {
        if (std::abs(dij - d(j, i)) > kTriangleTol * std::max(1.0, dij))
          throw std::invalid_argument("asymmetric distance matrix");
      }
    }
  }

  std::atomic<bool> bad{false};
  if (n <= 2000) {
    // d(i,k) <= d(i,j) + d(j,k) for all triples; for fixed (i,j) check the
    // whole k-row at once: max_k (d(i,k) - d(j,k)) <= d(i,j).
    par::parallel_for(
        n,
        [&](std::int64_t ii) {
          if (bad.load(std::memory_order_relaxed)) return;
          Index i = static_cast<Index>(ii);
          for (Index j = 0; j < n; ++j) {
            if (j == i) continue;
            double slack = kTriangleTol * std::max(1.0, d(i, j));
            double worst = (d.row(i) - d.row(j)).maxCoeff();
            if (worst > d(i, j) + slack) bad.store(true, std::memory_order_relaxed);
          }
        },
        threads);
  } else {
    const std::int64_t wanted = 1'000'000;
    std::mt19937_64 rng(0x9e3779b97f4a7c15ULL);
    std::uniform_int_distribution<Index> pick(0, n - 1);
    for (std::int64_t s = 0; s < wanted && !bad.load(); ++s) {
      Index i = pick(rng), j = pick(rng), k = pick(rng);
      double slack = kTriangleTol * std::max(1.0, d(i, j));
      if (d(i, k) > d(i, j) + d(j, k) + slack) bad.store(true);
    }
  }
  if (bad.load()) throw std::invalid_argument("triangle inequality violated");
}
}  // namespace

PointMetric PointMetric::from_matrix(std::vector<std::int64_t> ids,
                                     std::vector<std::vector<double>> positions,
                                     Eigen::MatrixXd dist, int threads) {
  PointMetric m;
  if (static_cast<Index>(ids.size()) != static_cast<Index>(dist.rows()))
    throw std::invalid_argument("ids/matrix size mismatch");
  if (!positions.empty() && positions.size() != ids.size())
    throw std::invalid_argument("positions/ids size mismatch");
  validate_metric(dist, threads);
  m.ids_ = std::move(ids);
  {
    std::unordered_map<std::int64_t, Index> seen;
    for (Index i = 0; i < m.size(); ++i)
      if (!seen.emplace(m.ids_[i], i).second)
        throw std::invalid_argument("duplicate point id");
  }
  m.positions_ = std::move(positions);
  m.dist_ = std::move(dist);
  const Index n = m.size();
  m.diam_ = 0.0;
  m.resolution_ = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) {
      m.diam_ = std::max(m.diam_, m.dist_(i, j));
      m.resolution_ = std::min(m.resolution_, m.dist_(i, j));
    }
  if (n < 2) m.resolution_ = 0.0;
  return m;
}

Index PointMetric::index_of(std::int64_t id) const {
  for (Index i = 0; i < size(); ++i)
    if (ids_[i] == id) return i;
  throw std::invalid_argument("unknown point id " + std::to_string(id));
}

std::vector<Index> PointMetric::ball(Index x, double r) const {
  if (x < 0 || x >= size()) throw std::invalid_argument("unknown point index");
  if (!(r > 0.0)) throw std::invalid_argument("ball radius must be positive");
  std::vector<Index> out;
  for (Index y = 0; y < size(); ++y)
    if (dist_(x, y) < r) out.push_back(y);
  return out;
}

std::vector<Index> PointMetric::closed_ball(Index x, double r) const {
  if (x < 0 || x >= size()) throw std::invalid_argument("unknown point index");
  std::vector<Index> out;
  for (Index y = 0; y < size(); ++y)
    if (dist_(x, y) <= r) out.push_back(y);
  return out;
}

std::vector<double> PointMetric::dyadic_radii() const {
  std::vector<double> out;
  if (diam_ <= 0.0) return out;
  double lo = resolution_ > 0.0 ? resolution_ : diam_;
  int jmax = static_cast<int>(std::ceil(std::log2(diam_ / lo)));
  for (int j = 0; j <= jmax; ++j) out.push_back(diam_ * std::pow(2.0, -j));
  return out;
}

bool chain_is_valid(const PointMetric& space, const ChainOfBalls& chain) {
  if (chain.centers.empty()) return false;
  for (size_t i = 1; i < chain.centers.size(); ++i)
    if (!(space.dist(chain.centers[i - 1], chain.centers[i]) < chain.step_radius))
      return false;
  // B(z_i, step) subset of B(host, host_radius):
  // every point within step of z_i must lie within host_radius of the host.
  for (Index z : chain.centers)
    for (Index p : space.ball(z, chain.step_radius))
      if (!(space.dist(chain.host_center, p) < chain.host_radius)) return false;
  return true;
}

namespace {
int greedy_packing_count(const PointMetric& space, Index x, double R) {
  std::vector<Index> kept;
  for (Index y = 0; y < space.size(); ++y) {
    if (!(space.dist(x, y) < R)) continue;
    bool ok = true;
    for (Index k : kept)
      if (space.dist(k, y) < R / 2.0) {
        ok = false;
        break;
      }
    if (ok) kept.push_back(y);
  }
  return static_cast<int>(kept.size());
}
}  // namespace

int md_constant(const PointMetric& space, std::int64_t samples, int threads) {
  if (samples < 1) throw std::invalid_argument("samples must be >= 1");
  const Index n = space.size();
  if (n == 0) return 0;
  std::vector<double> radii = space.dyadic_radii();
  if (radii.empty()) return 1;  // single point

  std::vector<std::pair<Index, double>> jobs;
  std::int64_t total = static_cast<std::int64_t>(n) * static_cast<std::int64_t>(radii.size());
  if (total <= samples) {
    jobs.reserve(total);
    for (Index x = 0; x < n; ++x)
      for (double r : radii) jobs.emplace_back(x, r);
  } else {
    std::mt19937_64 rng(0x51a1ed5eedULL);
    std::uniform_int_distribution<Index> px(0, n - 1);
    std::uniform_int_distribution<size_t> pr(0, radii.size() - 1);
    jobs.reserve(samples);
    for (std::int64_t s = 0; s < samples; ++s) jobs.emplace_back(px(rng), radii[pr(rng)]);
  }

  std::vector<int> counts(jobs.size(), 0);
  par::parallel_for(
      static_cast<std::int64_t>(jobs.size()),
      [&](std::int64_t i) { counts[i] = greedy_packing_count(space, jobs[i].first, jobs[i].second); },
      threads);
  return *std::max_element(counts.begin(), counts.end());
}

std::optional<ChainOfBalls> rbc_chain(const PointMetric& space, Index x0, double R,
                                      Index x, Index y, double eps, double K,
                                      const RbcOptions& opt) {
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("eps must be in (0,1)");
  if (!(K > 1.0)) throw std::invalid_argument("K must be > 1");
  if (!(R > 0.0)) throw std::invalid_argument("R must be positive");
  const double stepR = eps * R;
  const double hostR = K * R;

  // Vertex set: points of B(x0, K R) whose eps R-ball stays inside B(x0, K R).
  const Index n = space.size();
  std::vector<char> eligible(n, 0);
  for (Index z = 0; z < n; ++z) {
    if (!(space.dist(x0, z) < hostR)) continue;
    bool inside = true;
    for (Index p = 0; p < n; ++p)
      if (space.dist(z, p) < stepR && !(space.dist(x0, p) < hostR)) {
        inside = false;
        break;
      }
    eligible[z] = inside ? 1 : 0;
  }
  if (!eligible[x] || !eligible[y]) return std::nullopt;
  if (x == y) {
    ChainOfBalls c{{x}, stepR, x0, hostR};
    return c;
  }

  std::vector<Index> prev(n, -1);
  std::vector<char> seen(n, 0);
  std::deque<Index> queue;
  queue.push_back(x);
  seen[x] = 1;
  while (!queue.empty()) {
    Index u = queue.front();
    queue.pop_front();
    if (u == y) break;
    for (Index v = 0; v < n; ++v) {
      if (seen[v] || !eligible[v]) continue;
      if (space.dist(u, v) < stepR) {
        seen[v] = 1;
        prev[v] = u;
        queue.push_back(v);
      }
    }
  }
  if (!seen[y]) return std::nullopt;

  ChainOfBalls chain;
  chain.step_radius = stepR;
  chain.host_center = x0;
  chain.host_radius = hostR;
  for (Index v = y; v != -1; v = prev[v]) chain.centers.push_back(v);
  std::reverse(chain.centers.begin(), chain.centers.end());

  if (opt.inner_radius) {
    // Regularized variant: indices up to the last chain point inside
    // B(x, r) must keep their ball within B(x, K r).
    double r = *opt.inner_radius;
    int j = -1;
    for (size_t i = 0; i < chain.centers.size(); ++i)
      if (space.dist(x, chain.centers[i]) < r) j = static_cast<int>(i);
    for (int i = 0; i <= j; ++i)
      for (Index p : space.ball(chain.centers[i], stepR))
        if (!(space.dist(x, p) < K * r)) return std::nullopt;
  }
  return chain;
}

UniformPerfectnessReport uniform_perfectness(const PointMetric& space, double C) {
  if (!(C > 1.0)) throw std::invalid_argument("C must be > 1");
  UniformPerfectnessReport rep;
  rep.C = C;
  const Index n = space.size();
  for (double r : space.dyadic_radii()) {
    if (r / C < space.resolution()) continue;
    for (Index x = 0; x < n; ++x) {
      bool complement = false;
      int annulus = 0;
      for (Index yy = 0; yy < n; ++yy) {
        double d = space.dist(x, yy);
        if (!(d < r)) complement = true;
        else if (!(d < r / C)) ++annulus;
      }
      if (!complement) continue;
      ++rep.checked;
      if (rep.worst_annulus_count < 0 || annulus < rep.worst_annulus_count) {
        rep.worst_annulus_count = annulus;
        rep.worst_center = x;
        rep.worst_radius = r;
      }
      if (annulus == 0) rep.holds = false;
    }
  }
  return rep;
}

bool annulus_nonempty(const PointMetric& space, Index x, double r, double C) {
  for (Index y = 0; y < space.size(); ++y) {
    double d = space.dist(x, y);
    if (d < r && !(d < r / C)) return true;
  }
  return false;
}

double DistortionEnvelope::eta_at(double t) const {
  double best = 0.0;
  for (const auto& [tt, s] : sample_ratios) {
    if (tt > t) break;
    best = std::max(best, s);
  }
  return best;
}

DistortionEnvelope qs_distortion(const PointMetric& d1, const PointMetric& d2,
                                 std::int64_t sample_budget, int threads) {
  if (d1.size() != d2.size()) throw std::invalid_argument("metrics live on different point sets");
  const Index n = d1.size();
  DistortionEnvelope env;
  if (n < 3) return env;

  std::vector<std::pair<double, double>> raw;
  std::int64_t cube = static_cast<std::int64_t>(n) * n * n;
  auto add_triple = [&](Index x, Index a, Index b) {
    if (x == b || a == b || x == a) return;
    double t = d1.dist(x, a) / d1.dist(x, b);
    double s = d2.dist(x, a) / d2.dist(x, b);
    raw.emplace_back(t, s);
  };
  if (cube <= sample_budget) {
    std::vector<std::vector<std::pair<double, double>>> per(n);
    par::parallel_for(
        n,
        [&](std::int64_t xi) {
          auto& bucket = per[xi];
          Index x = static_cast<Index>(xi);
          for (Index a = 0; a < n; ++a)
            for (Index b = 0; b < n; ++b) {
              if (x == b || a == b || x == a) continue;
              bucket.emplace_back(d1.dist(x, a) / d1.dist(x, b),
                                  d2.dist(x, a) / d2.dist(x, b));
            }
        },
        threads);
    for (auto& bucket : per) raw.insert(raw.end(), bucket.begin(), bucket.end());
  } else {
    std::mt19937_64 rng(0xd15707710ULL);
    std::uniform_int_distribution<Index> pick(0, n - 1);
    raw.reserve(sample_budget);
    for (std::int64_t s = 0; s < sample_budget; ++s) add_triple(pick(rng), pick(rng), pick(rng));
  }

  std::sort(raw.begin(), raw.end());
  env.sample_ratios.reserve(raw.size());
  double running = 0.0;
  for (auto& [t, s] : raw) {
    running = std::max(running, s);
    if (!env.sample_ratios.empty() && env.sample_ratios.back().first == t)
      env.sample_ratios.back().second = running;
    else
      env.sample_ratios.emplace_back(t, running);
  }

  // Power-law gate on the envelope tails: eta_hat must decay at the smallest
  // sampled ratio (else eta(0+) > 0 and no distortion gauge exists) and stay
  // polynomial at the largest. Exponent window [1/16, 16]. Mid-range ratios
  // say nothing about the gauge and are left alone.
  constexpr double kMaxPower = 16.0;
  env.low_exponent = 1.0;
  env.high_exponent = 1.0;
  if (!env.sample_ratios.empty()) {
    auto [t_lo, s_lo] = env.sample_ratios.front();
    if (t_lo > 0.0 && t_lo < 0.5 && s_lo > 0.0)
      env.low_exponent = std::log(s_lo) / std::log(t_lo);
    auto [t_hi, s_hi] = env.sample_ratios.back();
    if (t_hi > 2.0 && s_hi > 1.0) env.high_exponent = std::log(s_hi) / std::log(t_hi);
  }
  env.is_finite =
      env.low_exponent >= 1.0 / kMaxPower && env.high_exponent <= kMaxPower;
  return env;
}

}  // namespace ehinet
