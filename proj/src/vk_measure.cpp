#include "ehinet/vk_measure.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "ehinet/parallel.hpp"

namespace ehinet {

namespace {

// Close-pair list at level k: point-index pairs (a < b) of net points with
// 0 < d(a,b) <= 4 * scale(k), lexicographic.
std::vector<std::pair<Index, Index>> close_pairs(const DyadicDecomposition& d,
                                                 const PointMetric& space, int k) {
  std::vector<std::pair<Index, Index>> pairs;
  const auto& net = d.nets[k];
  double cutoff = 4.0 * d.scale(k);
  for (size_t i = 0; i < net.size(); ++i)
    for (size_t j = i + 1; j < net.size(); ++j) {
      Index a = std::min(net[i], net[j]), b = std::max(net[i], net[j]);
      double dd = space.dist(a, b);
      if (dd > 0.0 && dd <= cutoff) pairs.emplace_back(a, b);
    }
  std::sort(pairs.begin(), pairs.end());
  return pairs;
}

std::map<Index, size_t> positions(const std::vector<Index>& net) {
  std::map<Index, size_t> pos;
  for (size_t i = 0; i < net.size(); ++i) pos[net[i]] = i;
  return pos;
}

}  // namespace

LevelMeasure vk_step(const LevelMeasure& mu_k, const DyadicDecomposition& d,
                     const PointMetric& space, const CubeCapacityTable& caps, double C,
                     VkLevelLedger* ledger) {
  const int k = mu_k.k;
  if (k + 1 > d.k_max) throw std::invalid_argument("no finer level to refine into");
  if (!caps.has_level(k) || !caps.has_level(k + 1))
    throw std::invalid_argument("capacity table does not cover the refinement levels");
  const auto& netk = d.nets[k];
  const auto& netk1 = d.nets[k + 1];
  if (mu_k.mass.size() != static_cast<Eigen::Index>(netk.size()))
    throw std::invalid_argument("level measure misaligned with the net");

  auto posk = positions(netk);
  auto posk1 = positions(netk1);
  auto ratio_k = [&](Index e) { return mu_k.mass[posk.at(e)] / caps.at(k, e); };

  // Precondition: the C^2 ratio band must already hold at level k.
  for (auto& [a, b] : close_pairs(d, space, k)) {
    double ra = ratio_k(a), rb = ratio_k(b);
    if (ra > C * C * rb * (1.0 + 1e-12) || rb > C * C * ra * (1.0 + 1e-12)) {
      std::ostringstream os;
      os << "level-" << k << " measure violates the C^2 ratio precondition at pair (" << a
         << "," << b << ")";
      throw std::runtime_error(os.str());
    }
  }

  // Stage 1: distribute each parent mass among its successors, proportional
  // to the successor capacities.
  Eigen::VectorXd f = Eigen::VectorXd::Zero(netk1.size());
  for (size_t i = 0; i < netk.size(); ++i) {
    Index e = netk[i];
    auto succ = d.successors(k, e);
    if (succ.empty()) throw std::runtime_error("net point without successors");
    double denom = 0.0;
    for (Index g : succ) denom += caps.at(k + 1, g);
    if (!(denom > 0.0)) throw std::runtime_error("zero successor capacity sum");
    for (Index g : succ) f[posk1.at(g)] += caps.at(k + 1, g) / denom * mu_k.mass[i];
  }

  if (ledger) {
    ledger->k = k;
    ledger->C = C;
    ledger->parent_mass = mu_k.mass;
    ledger->stage1_mass = f;
    ledger->transfers.clear();
    ledger->parent_capacity.resize(netk.size());
    for (size_t i = 0; i < netk.size(); ++i) ledger->parent_capacity[i] = caps.at(k, netk[i]);
    ledger->child_capacity.resize(netk1.size());
    for (size_t i = 0; i < netk1.size(); ++i)
      ledger->child_capacity[i] = caps.at(k + 1, netk1[i]);
  }

  // Stage 2: one sweep over close pairs; a violated pair receives the exact
  // alpha that restores equality in the C^2 band.
  const double C2 = C * C;
  for (auto& [a, b] : close_pairs(d, space, k + 1)) {
    size_t ia = posk1.at(a), ib = posk1.at(b);
    double ca = caps.at(k + 1, a), cb = caps.at(k + 1, b);
    double ra = f[ia] / ca, rb = f[ib] / cb;
    size_t ifrom, ito;
    Index from, to;
    double excess, cf, ct;
    if (ra > C2 * rb) {
      from = a; to = b; ifrom = ia; ito = ib;
      excess = ra - C2 * rb; cf = ca; ct = cb;
    } else if (rb > C2 * ra) {
      from = b; to = a; ifrom = ib; ito = ia;
      excess = rb - C2 * ra; cf = cb; ct = ca;
    } else {
      continue;
    }
    double alpha = excess / (C2 / ct + 1.0 / cf);
    f[ifrom] -= alpha;
    f[ito] += alpha;
    if (ledger) ledger->transfers.push_back({from, to, alpha});
  }

  if (ledger) ledger->final_mass = f;
  LevelMeasure out;
  out.k = k + 1;
  out.mass = std::move(f);
  return out;
}

VkResult build_measure(const DyadicDecomposition& d, const PointMetric& space,
                       const CubeCapacityTable& caps) {
  if (d.k0 == DyadicDecomposition::kNeverSplits)
    throw std::invalid_argument("single-cube space: nothing to construct");
  int start = d.k0 + 2;
  while (start <= d.k_max && !caps.has_level(start)) ++start;
  if (start > d.k_max)
    throw std::invalid_argument("capacity table holds no usable start level");
  for (int k = start; k <= d.k_max; ++k)
    if (!caps.has_level(k))
      throw std::invalid_argument("capacity table has a gap below the start level");

  VkResult res;
  res.C1 = std::max(caps.C1_within, caps.C1_parent_child);
  res.S = caps.S_max;
  res.C = res.C1 * static_cast<double>(std::max(res.S, 1));
  res.delta_hat = caps.delta_hat;
  res.start_level = start;

  LevelMeasure mu;
  mu.k = start;
  const auto& net0 = d.nets[start];
  mu.mass.resize(net0.size());
  double denom = 0.0;
  for (Index x : net0) denom += caps.at(start, x);
  for (size_t i = 0; i < net0.size(); ++i) mu.mass[i] = caps.at(start, net0[i]) / denom;

  for (int k = start; k < d.k_max; ++k) {
    VkLevelLedger step;
    mu = vk_step(mu, d, space, caps, res.C, &step);
    res.ledger.push_back(std::move(step));
  }

  // The finest net contains every point; its masses are the vertex measure.
  res.vertex_measure = Eigen::VectorXd::Zero(space.size());
  const auto& fin = d.nets[d.k_max];
  for (size_t i = 0; i < fin.size(); ++i) res.vertex_measure[fin[i]] = mu.mass[i];
  return res;
}

std::vector<std::string> audit_ledger_step(const VkLevelLedger& ledger,
                                           const DyadicDecomposition& d,
                                           const PointMetric& space, double delta_hat) {
  std::vector<std::string> bad;
  const int k = ledger.k;
  const auto& netk = d.nets[k];
  const auto& netk1 = d.nets[k + 1];
  auto posk = positions(netk);
  auto posk1 = positions(netk1);
  auto fail = [&](const std::string& what) { bad.push_back(what); };

  // Mass conservation, stage by stage.
  if (std::abs(ledger.parent_mass.sum() - ledger.stage1_mass.sum()) > 1e-12)
    fail("stage-1 mass not conserved");
  if (std::abs(ledger.stage1_mass.sum() - ledger.final_mass.sum()) > 1e-12)
    fail("stage-2 mass not conserved");

  // Replay the transfer sequence.
  Eigen::VectorXd f = ledger.stage1_mass;
  const double C2 = ledger.C * ledger.C;
  double cutoff = 4.0 * d.scale(k + 1);
  auto ratio = [&](const Eigen::VectorXd& m, Index g) {
    return m[posk1.at(g)] / ledger.child_capacity[posk1.at(g)];
  };

  // Pairs that were inside the band at some point must stay inside it
  // (single-pass sufficiency).
  auto pairs = close_pairs(d, space, k + 1);
  std::vector<char> in_band(pairs.size(), 0);
  auto update_bands = [&]() {
    for (size_t i = 0; i < pairs.size(); ++i) {
      double ra = ratio(f, pairs[i].first), rb = ratio(f, pairs[i].second);
      bool ok = ra <= C2 * rb * (1.0 + 1e-12) && rb <= C2 * ra * (1.0 + 1e-12);
      if (in_band[i] && !ok) fail("pair left the C^2 band after a later transfer");
      if (ok) in_band[i] = 1;
    }
  };
  update_bands();
  for (const VkTransfer& t : ledger.transfers) {
    double dd = space.dist(t.from, t.to);
    if (!(dd > 0.0) || dd > cutoff) fail("transfer over an illegal distance");
    if (!(t.alpha > 0.0)) fail("non-positive transfer");
    f[posk1.at(t.from)] -= t.alpha;
    f[posk1.at(t.to)] += t.alpha;
    update_bands();
  }
  if ((f - ledger.final_mass).cwiseAbs().maxCoeff() > 1e-12)
    fail("replayed masses do not match the recorded final masses");

  // Final band (e:mure1) over all close pairs.
  for (auto& [a, b] : pairs) {
    double ra = ratio(ledger.final_mass, a), rb = ratio(ledger.final_mass, b);
    if (ra > C2 * rb * (1.0 + 1e-12) || rb > C2 * ra * (1.0 + 1e-12))
      fail("final measure violates the C^2 band");
  }

  // Parent/child bounds (e:mure2) with the measured delta.
  for (size_t i = 0; i < netk.size(); ++i) {
    Index e = netk[i];
    double pr = ledger.parent_mass[i] / ledger.parent_capacity[i];
    for (Index g : d.successors(k, e)) {
      double cr = ratio(ledger.final_mass, g);
      if (cr < pr / ledger.C * (1.0 - 1e-12) ||
          cr > (1.0 - delta_hat) * pr * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "ledger bound violated at level " << k << " parent " << e << " child " << g;
        fail(os.str());
      }
    }
  }
  return bad;
}

CapacityGoodCertificate verify_capacity_good(const Eigen::VectorXd& mu, const Network& net,
                                             const PointMetric& space, double A,
                                             std::int64_t samples, const VkResult* builder,
                                             double A_dyadic, int threads) {
  CapacityGoodCertificate cert;
  cert.A = A;
  if (mu.size() != space.size()) throw std::invalid_argument("measure length mismatch");
  for (Index v = 0; v < space.size(); ++v)
    if (!(mu[v] > 0.0)) {
      cert.failure = "measure lacks full support";
      return cert;
    }

  // Radius window from the capacity-good definition, floored at the metric
  // resolution.
  double hi = std::pow(A, -4.0) * space.diameter();
  std::vector<double> radii;
  for (double r : space.dyadic_radii())
    if (r >= space.resolution() && r < hi) radii.push_back(r);
  std::sort(radii.begin(), radii.end());
  if (radii.size() < 2) {
    cert.failure = "insufficient scales in the capacity-good window";
    return cert;
  }

  std::vector<Index> centers;
  {
    std::int64_t per_center = static_cast<std::int64_t>(radii.size() * (radii.size() - 1) / 2);
    std::int64_t max_centers = std::max<std::int64_t>(1, samples / std::max<std::int64_t>(1, per_center));
    Index stride = std::max<Index>(1, static_cast<Index>(space.size() / max_centers));
    for (Index x = 0; x < space.size(); x += stride) centers.push_back(x);
  }

  // CapA(x, s) = Cap_{B(x,As)}(B(x,s)) per center and radius.
  Eigen::MatrixXd capA(centers.size(), radii.size());
  Eigen::MatrixXd ballmass(centers.size(), radii.size());
  par::parallel_for(
      static_cast<std::int64_t>(centers.size()),
      [&](std::int64_t ci) {
        Index x = centers[ci];
        for (size_t ri = 0; ri < radii.size(); ++ri) {
          double s = radii[ri];
          auto inner = space.ball(x, s);
          auto outer = space.ball(x, A * s);
          double mb = 0.0;
          for (Index v : inner) mb += mu[v];
          ballmass(ci, ri) = mb;
          if (static_cast<Index>(outer.size()) == space.size()) {
            capA(ci, ri) = -1.0;  // no complement; skip
            continue;
          }
          capA(ci, ri) = capacity(net, outer, inner).value;
        }
      },
      threads);

  double b1 = std::numeric_limits<double>::infinity();
  double b2 = -std::numeric_limits<double>::infinity();
  std::int64_t used = 0;
  for (size_t ci = 0; ci < centers.size(); ++ci)
    for (size_t i = 0; i < radii.size(); ++i)
      for (size_t j = i + 1; j < radii.size(); ++j) {
        if (!(radii[j] >= 2.0 * radii[i])) continue;
        if (capA(ci, i) <= 0.0 || capA(ci, j) <= 0.0) continue;
        double rho = ballmass(ci, j) * capA(ci, i) / (ballmass(ci, i) * capA(ci, j));
        double ell = std::log(radii[j] / radii[i]);
        double slope = std::log(rho) / ell;
        b1 = std::min(b1, slope);
        b2 = std::max(b2, slope);
        ++used;
      }
  if (used == 0) {
    cert.failure = "insufficient scales in the capacity-good window";
    return cert;
  }
  cert.samples = used;
  cert.beta1 = b1;
  cert.beta2 = b2;
  cert.C0 = 1.0 + 1e-9;  // envelope slopes make the two-sided bound tight
  // capacity-good demands 0 < beta1 <= beta2 with finite constants
  cert.pass = std::isfinite(b1) && std::isfinite(b2) && b1 > 0.0 && b1 <= b2;
  if (!cert.pass && cert.failure.empty()) cert.failure = "no positive lower exponent";
  if (builder) {
    cert.theory_beta1 = -std::log(1.0 - builder->delta_hat) / std::log(A_dyadic);
    cert.theory_beta2 = std::log(builder->C) / std::log(A_dyadic);
  }
  return cert;
}

DoublingReport verify_doubling(const Eigen::VectorXd& mu, const PointMetric& space,
                               std::int64_t samples) {
  DoublingReport rep;
  if (mu.size() != space.size()) throw std::invalid_argument("measure length mismatch");
  auto radii = space.dyadic_radii();
  std::sort(radii.begin(), radii.end());
  if (radii.empty()) {
    rep.pass = true;
    return rep;
  }
  std::vector<Index> centers;
  {
    std::int64_t per_center = static_cast<std::int64_t>(radii.size());
    std::int64_t max_centers = std::max<std::int64_t>(1, samples / per_center);
    Index stride = std::max<Index>(1, static_cast<Index>(space.size() / max_centers));
    for (Index x = 0; x < space.size(); x += stride) centers.push_back(x);
  }

  bool infinite = false;
  double worst = 0.0;
  double alpha = std::numeric_limits<double>::infinity();
  double c0 = std::numeric_limits<double>::infinity();
  std::int64_t used = 0;
  for (Index x : centers) {
    std::vector<double> mass(radii.size());
    for (size_t i = 0; i < radii.size(); ++i) {
      double m = 0.0;
      for (Index v : space.ball(x, radii[i])) m += mu[v];
      mass[i] = m;
    }
    for (size_t i = 0; i < radii.size(); ++i) {
      // doubling: compare with the ball of twice the radius.
      double m2 = 0.0;
      for (Index v : space.ball(x, 2.0 * radii[i])) m2 += mu[v];
      if (mass[i] <= 0.0) {
        if (m2 > 0.0) infinite = true;
        continue;
      }
      worst = std::max(worst, m2 / mass[i]);
      ++used;
    }
    // reverse doubling: infimum slope over radius pairs inside the window
    // R < diam / C3 (saturated balls near the diameter carry no slope).
    double rvd_cap = space.diameter() / 4.0;
    for (size_t i = 0; i < radii.size(); ++i)
      for (size_t j = i + 1; j < radii.size(); ++j) {
        if (radii[j] > rvd_cap) continue;
        if (mass[i] <= 0.0 || mass[j] <= 0.0) continue;
        if (mass[j] <= mass[i]) continue;
        double slope = std::log(mass[j] / mass[i]) / std::log(radii[j] / radii[i]);
        alpha = std::min(alpha, slope);
      }
  }
  if (std::isfinite(alpha)) {
    double rvd_cap = space.diameter() / 4.0;
    for (Index x : centers) {
      for (size_t i = 0; i < radii.size(); ++i)
        for (size_t j = i + 1; j < radii.size(); ++j) {
          if (radii[j] > rvd_cap) continue;
          double mi = 0.0, mj = 0.0;
          for (Index v : space.ball(x, radii[i])) mi += mu[v];
          for (Index v : space.ball(x, radii[j])) mj += mu[v];
          if (mi <= 0.0 || mj <= 0.0) continue;
          c0 = std::min(c0, (mj / mi) / std::pow(radii[j] / radii[i], alpha));
        }
    }
  } else {
    alpha = 0.0;
    c0 = 1.0;
  }
  rep.doubling_constant = worst;
  rep.rvd_alpha = alpha;
  rep.rvd_c0 = std::isfinite(c0) ? c0 : 1.0;
  rep.samples = used;
  rep.pass = !infinite && used > 0;
  return rep;
}

}  // namespace ehinet
