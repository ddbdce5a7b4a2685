#include "ehinet/harnack.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "ehinet/parallel.hpp"
#include "ehinet/remetric.hpp"
#include "ehinet/spaces.hpp"

namespace ehinet {

namespace {

// Connected-component labels of the subgraph induced on `set`.
std::vector<Index> component_labels(const Network& net, const std::vector<Index>& set) {
  std::vector<Index> label(net.size(), -1);
  std::vector<char> in(net.size(), 0);
  for (Index v : set) in[v] = 1;
  Index next = 0;
  for (Index v : set) {
    if (label[v] >= 0) continue;
    std::deque<Index> q{v};
    label[v] = next;
    while (!q.empty()) {
      Index u = q.front();
      q.pop_front();
      for (auto& [w, c] : net.neighbors(u))
        if (in[w] && label[w] < 0) {
          label[w] = next;
          q.push_back(w);
        }
    }
    ++next;
  }
  return label;
}

std::vector<Index> stride_centers(Index n, int max_centers) {
  std::vector<Index> centers;
  if (max_centers <= 0 || max_centers >= n) {
    centers.resize(n);
    for (Index i = 0; i < n; ++i) centers[i] = i;
    return centers;
  }
  Index stride = std::max<Index>(1, n / max_centers);
  for (Index x = 0; x < n; x += stride) centers.push_back(x);
  return centers;
}

double lsq_slope(const std::vector<double>& lx, const std::vector<double>& ly) {
  size_t m = lx.size();
  if (m < 2) return 0.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < m; ++i) {
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  double denom = m * sxx - sx * sx;
  if (std::abs(denom) < 1e-30) return 0.0;
  return (m * sxy - sx * sy) / denom;
}

}  // namespace

HarnackValue harnack_constant(const Network& net, const PointMetric& space, Index x,
                              double R, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must be in (0,1)");
  if (net.size() != space.size()) throw std::invalid_argument("network/metric size mismatch");
  auto B = space.ball(x, R);
  HarnackValue out;
  if (static_cast<Index>(B.size()) == net.size()) {
    out.whole_space = true;  // no boundary: harmonic = constant, C_H = 1
    return out;
  }
  auto inner = space.ball(x, delta * R);
  if (inner.size() <= 1) return out;  // single inner vertex: ratio 1

  auto comp = component_labels(net, B);
  HarmonicMeasure hm = harmonic_measure(net, B);
  std::vector<Index> inner_local;
  for (Index v : inner) {
    auto it = std::lower_bound(hm.domain.begin(), hm.domain.end(), v);
    inner_local.push_back(static_cast<Index>(it - hm.domain.begin()));
  }

  double best = 1.0;
  for (size_t zj = 0; zj < hm.boundary.size(); ++zj) {
    Index z = hm.boundary[zj];
    // Components of B reachable from this boundary vertex.
    std::set<Index> feeds;
    for (auto& [w, c] : net.neighbors(z))
      if (comp[w] >= 0) feeds.insert(comp[w]);
    double mx = -1.0, mn = std::numeric_limits<double>::infinity();
    bool any_pos = false, any_zero = false;
    for (size_t i = 0; i < inner.size(); ++i) {
      bool positive = feeds.count(comp[inner[i]]) > 0;
      if (!positive) {
        any_zero = true;
        continue;
      }
      any_pos = true;
      double w = hm.omega(inner_local[i], static_cast<Eigen::Index>(zj));
      mx = std::max(mx, w);
      mn = std::min(mn, w);
    }
    if (any_pos && any_zero) {
      out.infinite = true;
      return out;
    }
    if (any_pos && mn > 0.0) best = std::max(best, mx / mn);
  }
  out.value = best;
  return out;
}

HarnackReport ehi_scan(const Network& net, const PointMetric& space, double delta,
                       const ScanOptions& opt) {
  HarnackReport rep;
  rep.delta = delta;
  const Index n = space.size();
  auto centers = stride_centers(n, opt.max_centers);

  double lo = opt.min_radius > 0.0 ? opt.min_radius : space.resolution();
  double hi = opt.max_radius > 0.0 ? opt.max_radius : space.diameter();
  for (double r : space.dyadic_radii())
    if (r >= lo && r <= hi) rep.scales.push_back(r);

  struct Job {
    Index x;
    size_t scale_idx;
  };
  std::vector<Job> jobs;
  for (Index x : centers)
    for (size_t s = 0; s < rep.scales.size(); ++s) jobs.push_back({x, s});
  std::vector<BallRecord> records(jobs.size());
  std::vector<char> keep(jobs.size(), 0);

  par::parallel_for(
      static_cast<std::int64_t>(jobs.size()),
      [&](std::int64_t ji) {
        auto [x, si] = jobs[ji];
        double R = rep.scales[si];
        if (static_cast<Index>(space.ball(x, R).size()) == n) return;  // needs a boundary
        BallRecord rec;
        rec.center = x;
        rec.radius = R;
        rec.value = harnack_constant(net, space, x, R, delta);
        records[ji] = rec;
        keep[ji] = 1;
      },
      opt.threads);

  rep.per_scale_max.assign(rep.scales.size(), 1.0);
  rep.per_scale_infinite.assign(rep.scales.size(), 0);
  std::vector<char> scale_seen(rep.scales.size(), 0);
  for (size_t ji = 0; ji < jobs.size(); ++ji) {
    if (!keep[ji]) continue;
    rep.balls.push_back(records[ji]);
    size_t si = jobs[ji].scale_idx;
    const HarnackValue& v = records[ji].value;
    if (v.infinite) {
      rep.per_scale_infinite[si]++;
      rep.any_infinite = true;
    } else {
      rep.per_scale_max[si] = std::max(rep.per_scale_max[si], v.value);
      scale_seen[si] = 1;
      rep.global_max = std::max(rep.global_max, v.value);
    }
  }

  std::vector<double> lx, ly;
  for (size_t si = 0; si < rep.scales.size(); ++si)
    if (scale_seen[si]) {
      lx.push_back(std::log(rep.scales[si]));
      ly.push_back(std::log(rep.per_scale_max[si]));
    }
  rep.trend_slope = lsq_slope(lx, ly);
  return rep;
}

HGReport check_hg(const Network& net, const PointMetric& space, Index x0, double R,
                  const std::vector<Index>& D, double K_G) {
  HGReport rep;
  rep.center = x0;
  rep.R = R;
  rep.K_G = K_G;
  std::vector<char> inD(net.size(), 0);
  for (Index v : D) inD[v] = 1;
  for (Index v : space.ball(x0, K_G * R))
    if (!inD[v]) throw std::invalid_argument("check_hg: B(x0, K_G R) not inside D");

  DomainSolver solver(net, D);
  Eigen::VectorXd g = green_column(solver, x0);
  auto comp = component_labels(net, solver.domain());

  double sup_out = 0.0;
  double inf_in = std::numeric_limits<double>::infinity();
  bool zero_in = false;
  for (size_t i = 0; i < solver.domain().size(); ++i) {
    Index v = solver.domain()[i];
    double d = space.dist(x0, v);
    if (!(d < R)) sup_out = std::max(sup_out, g[i]);  // D minus the open ball
    if (d <= R && v != x0) {
      if (comp[v] == comp[x0])
        inf_in = std::min(inf_in, g[i]);
      else
        zero_in = true;
    }
  }
  if (zero_in && sup_out > 0.0) {
    rep.infinite = true;
    return rep;
  }
  if (!std::isfinite(inf_in) || inf_in <= 0.0) {
    rep.ratio = sup_out > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
    rep.infinite = sup_out > 0.0;
    return rep;
  }
  rep.ratio = sup_out / inf_in;
  return rep;
}

bool LemmaReport::all_unconditional_ok() const {
  for (const auto& e : entries)
    if (!e.unconditional_ok) return false;
  return true;
}

const LemmaEntry* LemmaReport::find(const std::string& name) const {
  for (const auto& e : entries)
    if (e.name == name) return &e;
  return nullptr;
}

namespace {

// Minimum of a Green column over the inner ring of the ball B(x, r).
double green_ring_min(const Network& net, const PointMetric& space,
                      const DomainSolver& solver, const Eigen::VectorXd& g, Index x,
                      double r) {
  auto ring = inner_boundary(net, space.ball(x, r));
  double mn = std::numeric_limits<double>::infinity();
  for (Index v : ring) {
    Index i = solver.local(v);
    if (i >= 0) mn = std::min(mn, g[i]);
  }
  return mn;
}

}  // namespace

LemmaReport check_green_lemmas(const Network& net, const PointMetric& space,
                               const GreenLemmasConfig& cfg) {
  LemmaReport rep;
  const Index n = space.size();
  auto centers = stride_centers(n, cfg.max_centers);
  const double K = cfg.K;
  const double K1 = K + 1.0;

  LemmaEntry annulus{"annulus_comparability", true, 1.0, 0, ""};
  LemmaEntry pairwise{"pairwise_comparability", true, 1.0, 0, ""};
  LemmaEntry capgreen_low{"cap_vs_green_lower", true, 0.0, 0, ""};
  LemmaEntry capgreen{"cap_vs_green_constant", true, 1.0, 0, ""};
  LemmaEntry domain_double{"green_domain_doubling", true, 1.0, 0, ""};
  LemmaEntry decay{"green_decay_exponent", true, 0.0, 0, ""};
  LemmaEntry maxp{"maximum_principles", true, 0.0, 0, ""};

  for (Index x0 : centers) {
    for (double R : space.dyadic_radii()) {
      // Domain window for the comparability statements.
      auto D = space.ball(x0, 2.0 * K1 * R);
      if (static_cast<Index>(D.size()) == n) continue;
      if (space.ball(x0, K1 * R).size() == D.size()) continue;
      DomainSolver solver(net, D);
      Eigen::VectorXd g = green_column(solver, x0);
      auto comp = component_labels(net, solver.domain());

      // Annulus comparability at delta = 1/2 over B(x0,R) \ B(x0, R/2).
      {
        double mx = 0.0, mn = std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < solver.domain().size(); ++i) {
          Index v = solver.domain()[i];
          if (comp[v] != comp[x0]) continue;
          double d = space.dist(x0, v);
          if (d < R && !(d < cfg.delta * R)) {
            mx = std::max(mx, g[i]);
            mn = std::min(mn, g[i]);
          }
        }
        if (mx > 0.0 && std::isfinite(mn) && mn > 0.0) {
          annulus.constant = std::max(annulus.constant, mx / mn);
          annulus.cases++;
        }
      }

      // Pairwise comparability over separated pairs in B(x0, R); needs the
      // Green submatrix, so restrict to small balls.
      {
        auto B = space.ball(x0, R);
        if (B.size() >= 2 && B.size() <= 80) {
          double mx = 0.0, mn = std::numeric_limits<double>::infinity();
          for (Index a : B) {
            Eigen::VectorXd ga = green_column(solver, a);
            for (Index b : B) {
              if (space.dist(a, b) < R / 4.0) continue;
              Index ib = solver.local(b);
              if (ib < 0 || comp[b] != comp[a]) continue;
              double val = ga[ib];
              if (val > 0.0) {
                mx = std::max(mx, val);
                mn = std::min(mn, val);
              }
            }
          }
          if (mx > 0.0 && std::isfinite(mn)) {
            pairwise.constant = std::max(pairwise.constant, mx / mn);
            pairwise.cases++;
          }
        }
      }

      // Capacity vs Green at radius r = R (lower half unconditional).
      {
        double KG = 2.0 * K + 1.0;
        bool window_ok = true;
        for (Index v : space.ball(x0, KG * R))
          if (solver.local(v) < 0) window_ok = false;
        if (window_ok) {
          double gmin = green_ring_min(net, space, solver, g, x0, R);
          if (std::isfinite(gmin) && gmin > 0.0) {
            double cap = capacity(net, solver.domain(), space.ball(x0, R)).value;
            double prod = gmin * cap;  // must be <= 1 exactly
            capgreen_low.cases++;
            capgreen_low.constant = std::max(capgreen_low.constant, prod);
            if (prod > 1.0 + 1e-10) {
              capgreen_low.unconditional_ok = false;
              std::ostringstream os;
              os << "x0=" << x0 << " R=" << R << " g*cap=" << prod;
              capgreen_low.witness = os.str();
            }
            capgreen.constant = std::max(capgreen.constant, 1.0 / prod);
            capgreen.cases++;
          }
        }
      }

      // Maximum principles for U = B(x0, R/2) inside D, exact.
      {
        auto U = space.ball(x0, R / 2.0);
        std::vector<char> inU(n, 0);
        for (Index v : U) inU[v] = 1;
        std::vector<Index> outside;
        for (Index v : solver.domain())
          if (!inU[v]) outside.push_back(v);
        if (!outside.empty() && U.size() > 1) {
          double mx_all = 0.0, mx_ring = 0.0;
          for (Index v : outside) {
            double val = g[solver.local(v)];
            mx_all = std::max(mx_all, val);
            bool ring = false;
            for (auto& [w, c] : net.neighbors(v))
              if (inU[w] || solver.local(w) < 0) ring = true;
            if (ring) mx_ring = std::max(mx_ring, val);
          }
          double mn_all = std::numeric_limits<double>::infinity(), mn_ring = mn_all;
          for (Index v : U) {
            if (v == x0 || solver.local(v) < 0) continue;
            double val = g[solver.local(v)];
            mn_all = std::min(mn_all, val);
            bool ring = false;
            for (auto& [w, c] : net.neighbors(v))
              if (!inU[w]) ring = true;
            if (ring) mn_ring = std::min(mn_ring, val);
          }
          double scale = std::max(1.0, mx_all);
          maxp.cases++;
          if (mx_all > mx_ring + 1e-10 * scale ||
              (std::isfinite(mn_all) && std::isfinite(mn_ring) &&
               mn_ring > mn_all + 1e-10 * scale)) {
            maxp.unconditional_ok = false;
            std::ostringstream os;
            os << "x0=" << x0 << " R=" << R;
            maxp.witness = os.str();
          }
        }
      }

      // Green decay exponent (pointwise envelope of ring minima).
      {
        std::vector<double> lr, lg;
        for (double r : space.dyadic_radii()) {
          if (!(r < R / K1)) continue;
          double gmin = green_ring_min(net, space, solver, g, x0, r);
          if (std::isfinite(gmin) && gmin > 0.0) {
            lr.push_back(std::log(r));
            lg.push_back(std::log(gmin));
          }
        }
        for (size_t i = 0; i < lr.size(); ++i)
          for (size_t j = i + 1; j < lr.size(); ++j) {
            double slope = (lg[i] - lg[j]) / (lr[i] - lr[j]);
            decay.constant = std::max(decay.constant, -slope);
            decay.cases++;
          }
      }
    }

    // Domain doubling: g_{2B} <= C1 g_B near the center.
    for (double R : space.dyadic_radii()) {
      auto B2 = space.ball(x0, 2.0 * R);
      if (static_cast<Index>(space.ball(x0, (2.0 + 1.0 / (128.0 * K * K)) * R).size()) == n)
        continue;
      auto B = space.ball(x0, R);
      auto core = space.ball(x0, R / (8.0 * K));
      if (core.size() < 2) continue;
      GreenTable gB = green_table(net, B);
      GreenTable gB2 = green_table(net, B2);
      double worst = 1.0;
      std::int64_t cases = 0;
      for (Index a : core)
        for (Index b : core) {
          if (a == b) continue;
          double vb = gB.at(a, b), v2 = gB2.at(a, b);
          if (vb > 0.0 && v2 > 0.0) {
            worst = std::max(worst, v2 / vb);
            ++cases;
          }
        }
      if (cases > 0) {
        domain_double.constant = std::max(domain_double.constant, worst);
        domain_double.cases += cases;
      }
    }
  }

  rep.entries = {annulus, pairwise, capgreen_low, capgreen, domain_double, decay, maxp};
  return rep;
}

LemmaReport check_capacity_lemmas(const Network& net, const PointMetric& space,
                                  const CapacityLemmasConfig& cfg) {
  LemmaReport rep;
  const Index n = space.size();
  auto centers = stride_centers(n, cfg.max_centers);
  const double A = 2.0;

  LemmaEntry telescope{"capacity_chain_telescoping", true, 1.0, 0, ""};
  LemmaEntry window{"capacity_window_change", true, 1.0, 0, ""};
  LemmaEntry monotone{"capacity_monotonicity", true, 0.0, 0, ""};
  LemmaEntry shift{"capacity_center_shift", true, 1.0, 0, ""};
  LemmaEntry ratio24{"capacity_window_2_vs_4", true, 1.0, 0, ""};
  LemmaEntry gamma{"capacity_scale_exponent", true, 0.0, 0, ""};
  LemmaEntry cubes{"cube_subadditivity_surplus", true, 0.0, 0, ""};

  for (Index x : centers) {
    std::vector<double> lr, lc;
    for (double r : space.dyadic_radii()) {
      // Chain B_i = B(x, A^i r) while the top ball stays proper. On a graph
      // consecutive ball capacitors share the sphere-crossing edges, so the
      // exact lower bound sums over alternating annuli (edge-disjoint
      // capacitor regions); the full sum enters the measured constant only.
      std::vector<double> radii{r};
      while (A * radii.back() < space.diameter() / A) radii.push_back(A * radii.back());
      if (radii.size() >= 3) {
        double sum_alt = 0.0, sum_full = 0.0;
        bool ok = true;
        for (size_t i = 0; i + 1 < radii.size(); ++i) {
          auto outer = space.ball(x, radii[i + 1]);
          if (static_cast<Index>(outer.size()) == n) {
            ok = false;
            break;
          }
          double inv = 1.0 / capacity(net, outer, space.ball(x, radii[i])).value;
          sum_full += inv;
          if (i % 2 == 0) sum_alt += inv;
        }
        if (ok) {
          auto outer = space.ball(x, radii.back());
          double direct = 1.0 / capacity(net, outer, space.ball(x, r)).value;
          telescope.cases++;
          if (sum_alt > direct * (1.0 + 1e-10)) {
            telescope.unconditional_ok = false;
            std::ostringstream os;
            os << "x=" << x << " r=" << r;
            telescope.witness = os.str();
          }
          telescope.constant = std::max(telescope.constant, direct / sum_full);
        }
      }

      // Window change 2Ar vs Ar (domain monotonicity is exact).
      {
        auto b_r = space.ball(x, r);
        auto b_Ar = space.ball(x, A * r);
        auto b_2Ar = space.ball(x, 2.0 * A * r);
        if (static_cast<Index>(b_2Ar.size()) < n && b_Ar.size() > b_r.size()) {
          double c_small = capacity(net, b_Ar, b_r).value;
          double c_big = capacity(net, b_2Ar, b_r).value;
          monotone.cases++;
          if (c_big > c_small * (1.0 + 1e-10)) {
            monotone.unconditional_ok = false;
            std::ostringstream os;
            os << "domain monotonicity x=" << x << " r=" << r;
            monotone.witness = os.str();
          }
          if (c_big > 0.0) window.constant = std::max(window.constant, c_small / c_big);
          window.cases++;
          lr.push_back(std::log(r));
          lc.push_back(std::log(c_small));

          // Subset monotonicity: Cap(B(x,r/2)) <= Cap(B(x,r)) in the same domain.
          auto b_half = space.ball(x, r / 2.0);
          if (!b_half.empty() && b_half.size() < b_r.size()) {
            double c_sub = capacity(net, b_Ar, b_half).value;
            monotone.cases++;
            if (c_sub > c_small * (1.0 + 1e-10)) {
              monotone.unconditional_ok = false;
              monotone.witness = "subset monotonicity";
            }
          }
        }
      }

      // Window 2 vs 4.
      {
        auto b_r = space.ball(x, r);
        auto b_2r = space.ball(x, 2.0 * r);
        auto b_4r = space.ball(x, 4.0 * r);
        if (static_cast<Index>(b_4r.size()) < n && b_2r.size() > b_r.size()) {
          double c2 = capacity(net, b_2r, b_r).value;
          double c4 = capacity(net, b_4r, b_r).value;
          if (c4 > 0.0) {
            ratio24.constant = std::max(ratio24.constant, c2 / c4);
            ratio24.cases++;
          }
        }
      }

      // Center shift within B(x, r).
      {
        auto b_Ar = space.ball(x, A * r);
        auto b_r = space.ball(x, r);
        if (static_cast<Index>(b_Ar.size()) < n && b_r.size() > 1) {
          double cx = capacity(net, b_Ar, b_r).value;
          int tried = 0;
          for (Index y : b_r) {
            if (y == x && ++tried) continue;
            if (tried++ > 3) break;
            auto by_Ar = space.ball(y, A * r);
            if (static_cast<Index>(by_Ar.size()) == n) continue;
            double cy = capacity(net, by_Ar, space.ball(y, r)).value;
            if (cy > 0.0) {
              shift.constant = std::max({shift.constant, cx / cy, cy / cx});
              shift.cases++;
            }
          }
        }
      }
    }
    // Cross-scale exponent envelope.
    for (size_t i = 0; i < lr.size(); ++i)
      for (size_t j = i + 1; j < lr.size(); ++j) {
        double slope = (lc[j] - lc[i]) / (lr[j] - lr[i]);
        gamma.constant = std::max(gamma.constant, std::abs(slope));
        gamma.cases++;
      }
  }

  // Strict subadditivity surplus over disjoint cube families.
  if (cfg.decomp) {
    const DyadicDecomposition& d = *cfg.decomp;
    double worst = 0.0;
    std::int64_t cases = 0;
    for (int k = std::max(d.k0, 1); k <= d.k_max; ++k) {
      if (d.nets[k].size() < 2) continue;
      // Group cubes around each coarse center; D = a properly larger ball.
      for (Index x : d.nets[k - 1]) {
        double R = d.scale(k - 1) / 2.0;
        std::vector<std::vector<Index>> cube_sets;
        for (Index c : d.nets[k])
          if (space.dist(x, c) < R / 2.0) cube_sets.push_back(d.cube_members(k, c));
        if (cube_sets.size() < 2) continue;
        auto D = space.ball(x, 2.0 * cfg.K * R);
        if (static_cast<Index>(D.size()) == n) continue;
        std::vector<Index> F;
        double sum = 0.0;
        for (auto& q : cube_sets) {
          F.insert(F.end(), q.begin(), q.end());
          sum += capacity(net, D, q).value;
        }
        double whole = capacity(net, D, F).value;
        cases++;
        if (whole > sum * (1.0 + 1e-10))
          rep.entries.push_back({"cube_subadditivity_violated", false, whole / sum, 1, ""});
        worst = std::max(worst, whole / sum);
        if (cases > 40) break;
      }
      if (cases > 40) break;
    }
    cubes.constant = cases > 0 ? 1.0 - worst : 0.0;  // measured delta
    cubes.cases = cases;
  }

  rep.entries.insert(rep.entries.begin(),
                     {telescope, window, monotone, shift, ratio24, gamma, cubes});
  return rep;
}

ChainingCheck check_chaining(const Network& net, const PointMetric& space,
                             const ChainOfBalls& chain, double K3) {
  ChainingCheck out;
  if (chain.centers.size() < 2) return out;
  const Index n = space.size();

  std::vector<char> inD(n, 0);
  for (Index z : chain.centers)
    for (Index v : space.ball(z, 8.0 * K3 * chain.step_radius)) inD[v] = 1;
  std::vector<Index> D;
  for (Index v = 0; v < n; ++v)
    if (inD[v]) D.push_back(v);
  if (static_cast<Index>(D.size()) == n) return out;  // no exit possible; skip

  out.evaluated = true;
  out.steps = chain.length();
  auto ball_of = [&](size_t i) { return space.ball(chain.centers[i], chain.step_radius); };

  double product = 1.0;
  for (size_t i = 1; i < chain.centers.size(); ++i) {
    Eigen::VectorXd h = hitting_probability(net, D, ball_of(i));
    double mn = std::numeric_limits<double>::infinity();
    for (Index v : ball_of(i - 1)) mn = std::min(mn, h[v]);
    product *= mn;
  }
  Eigen::VectorXd h = hitting_probability(net, D, ball_of(chain.centers.size() - 1));
  double direct = std::numeric_limits<double>::infinity();
  for (Index v : ball_of(0)) direct = std::min(direct, h[v]);

  out.chain_probability = direct;
  out.step_product = product;
  out.pass = direct >= product - 1e-12;
  return out;
}

StabilityReport stability_experiment(const Network& net, const PointMetric& space,
                                     double lambda, std::uint64_t seed, int trials,
                                     const StabilityOptions& opt) {
  if (!(lambda >= 1.0)) throw std::invalid_argument("lambda must be >= 1");
  StabilityReport rep;
  rep.lambda = lambda;

  ScanOptions scan{opt.scan_max_centers, 0.0, 0.0, opt.threads};
  BallFamily fam{opt.pi_max_centers, 0.0};

  auto evaluate = [&](const Network& which) {
    struct Vals {
      double harnack, hg, cap, pi;
    } v{};
    HarnackReport hr = ehi_scan(which, space, 0.5, scan);
    v.harnack = hr.global_max;
    // (HG) at a central vertex and a mid radius.
    double R = space.diameter() / 8.0;
    Index x0 = space.size() / 2;
    auto D = space.ball(x0, space.diameter() / 1.5);
    double KG = 5.0;
    v.hg = 1.0;
    if (static_cast<Index>(D.size()) < space.size()) {
      bool window_ok = true;
      std::vector<char> inD(space.size(), 0);
      for (Index u : D) inD[u] = 1;
      for (Index u : space.ball(x0, KG * R))
        if (!inD[u]) window_ok = false;
      if (window_ok) {
        HGReport hg = check_hg(which, space, x0, R, D, KG);
        v.hg = hg.infinite ? std::numeric_limits<double>::infinity() : hg.ratio;
      }
    }
    ScaleTable psi = build_psi(which, which.measure(), space,
                               {2.0, PsiWindowing::Direct, false, opt.threads});
    ScaleFn fn = table_scale(psi);
    // A1 = 3: the inflated ball must bridge metrically-close but
    // graph-separated pieces (relative ball connectedness scale).
    v.cap = check_cap_psi(which, which.measure(), space, fn, 3.0, fam, opt.threads)
                .enclosing_constant;
    v.pi = check_pi(which, which.measure(), space, fn, 3.0, 4.0, fam, opt.threads)
               .max_normalized;
    return v;
  };

  auto base = evaluate(net);

  std::mt19937_64 master(seed);
  for (int t = 0; t < trials; ++t) {
    std::uint64_t trial_seed = master();
    PerturbCertificate cert;
    Network pert = perturb(net, lambda, trial_seed, &cert);

    StabilityTrial trial;
    trial.seed = trial_seed;
    trial.min_multiplier = cert.min_multiplier;
    trial.max_multiplier = cert.max_multiplier;
    trial.edgewise_ok =
        cert.min_multiplier >= 1.0 / lambda - 1e-12 && cert.max_multiplier <= lambda + 1e-12;

    // Energy and energy-measure comparability on sampled functions (the
    // edgewise bound makes these exact; sampled as a safety net).
    std::mt19937_64 frng(trial_seed ^ 0x5bf03635ULL);
    std::normal_distribution<double> gauss;
    double lo = 1.0, hi = 1.0;
    for (int j = 0; j < opt.random_functions; ++j) {
      Eigen::VectorXd f(net.size());
      for (Index v = 0; v < net.size(); ++v) f[v] = gauss(frng);
      double e0 = net.energy(f), e1 = pert.energy(f);
      if (e0 > 0.0) {
        lo = std::min(lo, e1 / e0);
        hi = std::max(hi, e1 / e0);
      }
      Eigen::VectorXd m0 = net.energy_measure(f), m1 = pert.energy_measure(f);
      for (Index v = 0; v < net.size(); ++v) {
        if (m0[v] <= 0.0) continue;
        double ratio = m1[v] / m0[v];
        if (ratio < 1.0 / lambda - 1e-9 || ratio > lambda + 1e-9) trial.edgewise_ok = false;
      }
    }
    trial.energy_ratio_low = lo;
    trial.energy_ratio_high = hi;
    if (lo < 1.0 / lambda - 1e-9 || hi > lambda + 1e-9) trial.edgewise_ok = false;

    auto after = evaluate(pert);
    trial.harnack_before = base.harnack;
    trial.harnack_after = after.harnack;
    trial.hg_before = base.hg;
    trial.hg_after = after.hg;
    trial.cap_psi_before = base.cap;
    trial.cap_psi_after = after.cap;
    trial.pi_before = base.pi;
    trial.pi_after = after.pi;

    auto two_sided = [](double a, double b) {
      if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b))
        return std::numeric_limits<double>::infinity();
      return std::max(a / b, b / a);
    };
    rep.max_harnack_ratio = std::max(rep.max_harnack_ratio, two_sided(base.harnack, after.harnack));
    rep.max_cap_ratio = std::max(rep.max_cap_ratio, two_sided(base.cap, after.cap));
    rep.max_pi_ratio = std::max(rep.max_pi_ratio, two_sided(base.pi, after.pi));
    rep.edgewise_ok = rep.edgewise_ok && trial.edgewise_ok;
    rep.trials.push_back(trial);
  }
  return rep;
}

}  // namespace ehinet
