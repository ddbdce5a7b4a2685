#include "ehinet/remetric.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ehinet/harnack.hpp"
#include "ehinet/parallel.hpp"

namespace ehinet {

namespace {

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

double lsq_slope(const std::vector<double>& logx, const std::vector<double>& logy) {
  size_t m = logx.size();
  if (m < 2) return 0.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < m; ++i) {
    sx += logx[i];
    sy += logy[i];
    sxx += logx[i] * logx[i];
    sxy += logx[i] * logy[i];
  }
  double denom = m * sxx - sx * sx;
  if (std::abs(denom) < 1e-30) return 0.0;
  return (m * sxy - sx * sy) / denom;
}

}  // namespace

double ScaleTable::value_at(Index x, double r) const {
  if (r <= 0.0) return 0.0;
  if (radii.empty()) throw std::logic_error("empty scale table");
  double rc = std::min(r, diam);  // bounded-diameter clamp
  if (rc <= radii.front()) {
    // extrapolate below the grid with the local slope
    if (radii.size() == 1) return values(x, 0);
    double s = std::log(values(x, 1) / values(x, 0)) / std::log(radii[1] / radii[0]);
    s = std::max(s, 0.0);
    return values(x, 0) * std::pow(rc / radii.front(), s);
  }
  if (rc >= radii.back()) return values(x, static_cast<Eigen::Index>(radii.size()) - 1);
  auto it = std::upper_bound(radii.begin(), radii.end(), rc);
  size_t j = static_cast<size_t>(it - radii.begin());
  double r0 = radii[j - 1], r1 = radii[j];
  double t = std::log(rc / r0) / std::log(r1 / r0);
  return std::exp((1.0 - t) * std::log(values(x, j - 1)) + t * std::log(values(x, j)));
}

double ScaleTable::slope_at(Index x) const {
  std::vector<double> lx, ly;
  for (size_t j = 0; j < radii.size(); ++j) {
    if (values(x, j) > 0.0) {
      lx.push_back(std::log(radii[j]));
      ly.push_back(std::log(values(x, j)));
    }
  }
  return lsq_slope(lx, ly);
}

double ScaleTable::median_slope() const {
  std::vector<double> slopes;
  for (Index x = 0; x < values.rows(); ++x) slopes.push_back(slope_at(x));
  std::sort(slopes.begin(), slopes.end());
  if (slopes.empty()) return 0.0;
  return slopes[slopes.size() / 2];
}

ScaleTable build_psi(const Network& net, const Eigen::VectorXd& mu, const PointMetric& space,
                     const PsiConfig& cfg) {
  if (mu.size() != space.size() || net.size() != space.size())
    throw std::invalid_argument("measure/network/metric size mismatch");
  const double A = cfg.A;
  if (!(A > 1.0)) throw std::invalid_argument("scale base must exceed 1");

  ScaleTable table;
  table.A = A;
  table.windowing = cfg.windowing;
  table.diam = space.diameter();

  std::vector<double> radii;
  for (double r : space.dyadic_radii()) {
    if (cfg.strict_window && cfg.windowing == PsiWindowing::Printed) {
      if (!(r > std::pow(A, 5.0) * space.resolution()) || !(r < space.diameter())) continue;
    }
    if (cfg.windowing == PsiWindowing::Direct && !(A * r < space.diameter())) continue;
    radii.push_back(r);
  }
  std::sort(radii.begin(), radii.end());
  if (radii.empty()) throw std::invalid_argument("radius grid below the resolution window");
  table.radii = radii;
  table.values.resize(space.size(), static_cast<Eigen::Index>(radii.size()));

  par::parallel_for(
      space.size(),
      [&](std::int64_t xi) {
        Index x = static_cast<Index>(xi);
        for (size_t j = 0; j < radii.size(); ++j) {
          double r = radii[j];
          double mass = 0.0;
          for (Index v : space.ball(x, r)) mass += mu[v];
          std::vector<Index> domain, target;
          if (cfg.windowing == PsiWindowing::Printed) {
            domain = space.ball(x, r / std::pow(A, 4.0));
            target = space.ball(x, r / std::pow(A, 5.0));
          } else {
            domain = space.ball(x, A * r);
            target = space.ball(x, r);
          }
          if (static_cast<Index>(domain.size()) == space.size())
            throw std::invalid_argument("capacity window covers the whole space");
          double cap = capacity(net, domain, target).value;
          table.values(x, static_cast<Eigen::Index>(j)) = mass / cap;
        }
      },
      cfg.threads);
  return table;
}

RegularityFit verify_regular_scale(const ScaleTable& psi, const PointMetric& space,
                                   std::int64_t sample_budget) {
  RegularityFit fit;
  const Index n = space.size();
  const auto& radii = psi.radii;
  if (radii.size() < 2 || n < 1) return fit;

  // Exponent envelope from same-point slopes.
  double b1 = std::numeric_limits<double>::infinity();
  double b2 = -std::numeric_limits<double>::infinity();
  for (Index x = 0; x < n; ++x)
    for (size_t i = 0; i < radii.size(); ++i)
      for (size_t j = i + 1; j < radii.size(); ++j) {
        double s = std::log(psi.values(x, j) / psi.values(x, i)) / std::log(radii[j] / radii[i]);
        b1 = std::min(b1, s);
        b2 = std::max(b2, s);
      }
  if (!std::isfinite(b1) || !std::isfinite(b2)) return fit;
  b1 = std::max(b1, 1e-6);
  b2 = std::max(b2, b1);
  fit.beta1 = b1;
  fit.beta2 = b2;

  // Smallest C1 making both inequalities hold on sampled quadruples.
  std::int64_t per_pair = static_cast<std::int64_t>(radii.size()) * radii.size();
  std::int64_t max_pairs = std::max<std::int64_t>(1, sample_budget / std::max<std::int64_t>(1, per_pair));
  Index stride = std::max<Index>(1, static_cast<Index>(
      static_cast<std::int64_t>(n) * n / std::max<std::int64_t>(1, max_pairs) > 0
          ? static_cast<Index>(std::max(1.0, std::sqrt(double(n) * n / max_pairs)))
          : 1));
  double C1 = 1.0;
  std::int64_t used = 0;
  for (Index x = 0; x < n; x += stride)
    for (Index y = 0; y < n; y += stride) {
      double R = space.dist(x, y);
      for (size_t i = 0; i < radii.size(); ++i)
        for (size_t j = 0; j < radii.size(); ++j) {
          double s = radii[i], r = radii[j];
          if (s > r) continue;
          double ratio = psi.values(x, j) / psi.values(y, i);
          double Rr = std::max(R, r);
          double lower = std::pow(r / Rr, b2) * std::pow(Rr / s, b1);
          double upper = std::pow(r / Rr, b1) * std::pow(Rr / s, b2);
          C1 = std::max({C1, lower / ratio, ratio / upper});
          ++used;
        }
    }
  fit.C1 = C1;
  fit.samples = used;
  fit.pass = std::isfinite(C1) && fit.beta1 > 0.0;
  return fit;
}

namespace {

// All-pairs chain infimum of the weight matrix (Floyd-Warshall); rows
// parallel per pivot.
void chain_metric_inplace(Eigen::MatrixXd& w, int threads) {
  const Index n = static_cast<Index>(w.rows());
  for (Index k = 0; k < n; ++k) {
    par::parallel_for(
        n,
        [&](std::int64_t i) {
          double wik = w(i, k);
          for (Index j = 0; j < n; ++j) {
            double cand = wik + w(k, j);
            if (cand < w(i, j)) w(i, j) = cand;
          }
        },
        threads);
  }
}

}  // namespace

RemetricResult build_dpsi(const ScaleTable& psi, const PointMetric& space,
                          const RemetricOptions& opt) {
  RemetricResult res;
  const Index n = space.size();
  if (n < 2) {
    res.failure = "space too small to remetrize";
    return res;
  }

  // Exponent envelope for the search floor.
  double b2 = 0.0;
  for (Index x = 0; x < n; ++x)
    for (size_t i = 0; i + 1 < psi.radii.size(); ++i) {
      double s = std::log(psi.values(x, i + 1) / psi.values(x, i)) /
                 std::log(psi.radii[i + 1] / psi.radii[i]);
      b2 = std::max(b2, s);
    }
  if (!(b2 > 0.0)) b2 = 1.0;

  Eigen::MatrixXd psi_d(n, n);  // psi(x, d(x,y)), asymmetric
  for (Index x = 0; x < n; ++x) {
    psi_d(x, x) = 0.0;
    for (Index y = 0; y < n; ++y)
      if (y != x) psi_d(x, y) = psi.value_at(x, space.dist(x, y));
  }

  for (double beta = b2; beta <= opt.max_factor * b2 * (1.0 + 1e-12); beta *= opt.grid_step) {
    Eigen::MatrixXd w(n, n);
    for (Index x = 0; x < n; ++x) {
      w(x, x) = 0.0;
      for (Index y = x + 1; y < n; ++y) {
        double q = std::pow(std::max(psi_d(x, y), psi_d(y, x)), 1.0 / beta);
        w(x, y) = q;
        w(y, x) = q;
      }
    }
    chain_metric_inplace(w, opt.threads);

    double C = 1.0;
    bool positive = true;
    for (Index x = 0; x < n && positive; ++x)
      for (Index y = 0; y < n; ++y) {
        if (x == y) continue;
        double dv = w(x, y);
        if (!(dv > 0.0)) {
          positive = false;
          break;
        }
        double p = std::pow(dv, beta);
        C = std::max({C, p / psi_d(x, y), psi_d(x, y) / p});
      }
    if (positive && C <= opt.accept_C) {
      res.ok = true;
      res.beta = beta;
      res.sandwich_C = C;
      res.dpsi = std::move(w);
      break;
    }
  }
  if (!res.ok) {
    res.failure = "no exponent on the search grid yields a finite sandwich constant";
    return res;
  }

  // Annulus-matched ball comparison: for each (x, r), the largest d_psi ball
  // inside B(x,r) must have s^beta comparable to psi(x, r).
  double qsm = 1.0;
  for (Index x = 0; x < n; ++x) {
    for (double r : space.dyadic_radii()) {
      double s = std::numeric_limits<double>::infinity();
      for (Index y = 0; y < n; ++y)
        if (!(space.dist(x, y) < r)) s = std::min(s, res.dpsi(x, y));
      if (!std::isfinite(s)) continue;  // B(x,r) is the whole space
      if (!(s > 0.0)) continue;
      double ratio = psi.value_at(x, r) / std::pow(s, res.beta);
      qsm = std::max({qsm, ratio, 1.0 / ratio});
    }
  }
  res.qsm_C1 = qsm;

  PointMetric dpsi_metric = res.as_metric(space, opt.threads);
  res.distortion = qs_distortion(space, dpsi_metric, opt.distortion_budget, opt.threads);
  return res;
}

PointMetric RemetricResult::as_metric(const PointMetric& base, int threads) const {
  return PointMetric::from_matrix(base.ids(), base.positions(), dpsi, threads);
}

ScaleFn power_scale(double beta) {
  return [beta](Index, double r) { return std::pow(r, beta); };
}

ScaleFn table_scale(const ScaleTable& psi) {
  return [&psi](Index x, double r) { return psi.value_at(x, r); };
}

namespace {

// sup over f of (f^T A f)/(f^T M f) with M positive semidefinite, taken over
// f with f^T M f > 0; +inf when A is not dominated by any multiple of M.
struct SupRatio {
  double value = 0.0;
  bool infinite = false;
};

SupRatio sup_generalized_ratio(const Eigen::MatrixXd& A, const Eigen::MatrixXd& M) {
  SupRatio out;
  const Eigen::Index n = A.rows();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> em(M);
  double lmax = em.eigenvalues().cwiseAbs().maxCoeff();
  double tol = std::max(lmax, 1.0) * 1e-12;

  std::vector<Eigen::Index> range, kernel;
  for (Eigen::Index i = 0; i < n; ++i)
    (em.eigenvalues()[i] > tol ? range : kernel).push_back(i);
  if (range.empty()) {
    out.infinite = true;  // M vanishes; any A-positive direction blows up
    return out;
  }

  Eigen::MatrixXd U = em.eigenvectors();
  Eigen::MatrixXd Ur(n, range.size()), Uk(n, kernel.size());
  Eigen::VectorXd lam(range.size());
  for (size_t i = 0; i < range.size(); ++i) {
    Ur.col(i) = U.col(range[i]);
    lam[i] = em.eigenvalues()[range[i]];
  }
  for (size_t i = 0; i < kernel.size(); ++i) Uk.col(i) = U.col(kernel[i]);

  Eigen::MatrixXd Arr = Ur.transpose() * A * Ur;
  double anorm = std::max(1.0, A.cwiseAbs().maxCoeff());

  Eigen::MatrixXd T = Arr;
  if (!kernel.empty()) {
    Eigen::MatrixXd Akk = Uk.transpose() * A * Uk;
    Eigen::MatrixXd Ark = Ur.transpose() * A * Uk;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ek(-Akk);
    double ktol = anorm * 1e-9;
    if (ek.eigenvalues().minCoeff() < -ktol) {
      out.infinite = true;  // A positive somewhere on ker M
      return out;
    }
    // Pseudo-inverse of -Akk and the range condition for the Schur step.
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(kernel.size(), kernel.size());
    for (Eigen::Index i = 0; i < ek.eigenvalues().size(); ++i)
      if (ek.eigenvalues()[i] > ktol)
        P += ek.eigenvectors().col(i) * ek.eigenvectors().col(i).transpose() /
             ek.eigenvalues()[i];
    Eigen::MatrixXd resid = Ark.transpose() - (-Akk) * (P * Ark.transpose());
    if (resid.cwiseAbs().maxCoeff() > anorm * 1e-7) {
      out.infinite = true;  // cross term escapes range(-Akk)
      return out;
    }
    T += Ark * P * Ark.transpose();
  }

  Eigen::VectorXd invs = lam.cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd G = invs.asDiagonal() * T * invs.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eg(G);
  out.value = eg.eigenvalues().maxCoeff();
  return out;
}

std::vector<double> scan_radii(const PointMetric& space, double upper, double min_radius) {
  std::vector<double> radii;
  double lo = std::max(min_radius, space.resolution());
  for (double r : space.dyadic_radii())
    if (r >= lo && r < upper) radii.push_back(r);
  std::sort(radii.begin(), radii.end());
  return radii;
}

}  // namespace

PiBallValue pi_ball_constant(const Network& net, const Eigen::VectorXd& mu,
                             const PointMetric& space, Index x, double R, double A1) {
  const Index n = space.size();
  auto B = space.ball(x, R);
  auto BA = space.ball(x, A1 * R);
  // Variables: BA plus its graph neighbors (the energy form sees them).
  std::vector<char> inV(n, 0);
  std::vector<Index> vars = BA;
  for (Index v : BA) inV[v] = 1;
  for (Index v : BA)
    for (auto& [w, c] : net.neighbors(v))
      if (!inV[w]) {
        inV[w] = 1;
        vars.push_back(w);
      }
  std::sort(vars.begin(), vars.end());
  std::vector<Index> local(n, -1);
  for (size_t i = 0; i < vars.size(); ++i) local[vars[i]] = static_cast<Index>(i);

  const Eigen::Index m = static_cast<Eigen::Index>(vars.size());
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(m, m);  // energy-measure form on BA
  for (Index v : BA)
    for (auto& [w, c] : net.neighbors(v)) {
      Eigen::Index a = local[v], b = local[w];
      Q(a, a) += c;
      Q(b, b) += c;
      Q(a, b) -= c;
      Q(b, a) -= c;
    }
  // Centered mass form on B.
  double massB = 0.0;
  for (Index v : B) massB += mu[v];
  Eigen::MatrixXd Mc = Eigen::MatrixXd::Zero(m, m);
  for (Index v : B) Mc(local[v], local[v]) += mu[v];
  Eigen::VectorXd mv = Eigen::VectorXd::Zero(m);
  for (Index v : B) mv[local[v]] = mu[v];
  Mc -= (mv * mv.transpose()) / massB;

  SupRatio sup = sup_generalized_ratio(Mc, Q);
  return {sup.infinite ? std::numeric_limits<double>::infinity() : sup.value, sup.infinite};
}

PiReport check_pi(const Network& net, const Eigen::VectorXd& mu, const PointMetric& space,
                  const ScaleFn& psi, double A1, double A2, const BallFamily& fam,
                  int threads) {
  PiReport rep;
  const Index n = space.size();
  auto centers = stride_centers(n, fam.max_centers);
  auto radii =
      fam.radii.empty() ? scan_radii(space, space.diameter() / A2, fam.min_radius) : fam.radii;

  struct Job {
    Index x;
    double R;
  };
  std::vector<Job> jobs;
  for (Index x : centers)
    for (double R : radii) jobs.push_back({x, R});
  std::vector<PiBallRow> rows(jobs.size());

  par::parallel_for(
      static_cast<std::int64_t>(jobs.size()),
      [&](std::int64_t ji) {
        const auto [x, R] = jobs[ji];
        PiBallValue v = pi_ball_constant(net, mu, space, x, R, A1);
        PiBallRow row;
        row.center = x;
        row.R = R;
        row.degenerate = v.infinite;
        row.constant = v.constant;
        row.normalized = row.constant / psi(x, R);
        rows[ji] = row;
      },
      threads);

  rep.rows = std::move(rows);
  for (const auto& row : rep.rows) {
    if (row.degenerate) {
      rep.any_degenerate = true;
      continue;
    }
    rep.max_constant = std::max(rep.max_constant, row.constant);
    rep.max_normalized = std::max(rep.max_normalized, row.normalized);
  }
  return rep;
}

double CsReport::frontier_max(double C1) const {
  double best = 0.0;
  for (const auto& row : rows)
    if (row.C1 == C1 && !row.infinite) best = std::max(best, row.C2_normalized);
  return best;
}

int CsReport::infinite_count(double C1) const {
  int k = 0;
  for (const auto& row : rows)
    if (row.C1 == C1 && row.infinite) ++k;
  return k;
}

CsReport check_cs(const Network& net, const Eigen::VectorXd& mu, const PointMetric& space,
                  const ScaleFn& psi, double A1, std::vector<double> C1_grid,
                  const BallFamily& fam, int threads) {
  CsReport rep;
  if (C1_grid.empty()) C1_grid = {0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0};
  rep.C1_grid = C1_grid;
  const Index n = space.size();
  auto centers = stride_centers(n, fam.max_centers);
  auto radii =
      fam.radii.empty() ? scan_radii(space, space.diameter() / A1, fam.min_radius) : fam.radii;

  struct Job {
    Index x;
    double R;
  };
  std::vector<Job> jobs;
  for (Index x : centers)
    for (double R : radii) jobs.push_back({x, R});
  std::vector<std::vector<CsRow>> rows(jobs.size());

  par::parallel_for(
      static_cast<std::int64_t>(jobs.size()),
      [&](std::int64_t ji) {
        const auto [x, R] = jobs[ji];
        auto B1 = space.ball(x, R);
        auto B2 = space.ball(x, A1 * R);
        std::vector<char> in1(n, 0), in2(n, 0);
        for (Index v : B1) in1[v] = 1;
        for (Index v : B2) in2[v] = 1;
        std::vector<Index> annulus;
        for (Index v : B2)
          if (!in1[v]) annulus.push_back(v);
        if (annulus.empty()) return;  // skipped with notice; empty annulus

        // Equilibrium-potential cutoff of B1 inside B2.
        Eigen::VectorXd phi;
        if (static_cast<Index>(B2.size()) == n) {
          phi = Eigen::VectorXd::Ones(n);  // whole-space corner case
        } else {
          phi = capacity(net, B2, B1).potential;
        }
        Eigen::VectorXd mphi = net.energy_measure(phi);

        // Variable set: annulus, its neighbors, and every vertex where the
        // cutoff energy measure lives.
        std::vector<char> inV(n, 0);
        std::vector<Index> vars;
        auto add = [&](Index v) {
          if (!inV[v]) {
            inV[v] = 1;
            vars.push_back(v);
          }
        };
        for (Index v : annulus) add(v);
        for (Index v : annulus)
          for (auto& [w, c] : net.neighbors(v)) add(w);
        for (Index v = 0; v < n; ++v)
          if (mphi[v] > 0.0) {
            add(v);
            for (auto& [w, c] : net.neighbors(v)) add(w);
          }
        std::sort(vars.begin(), vars.end());
        std::vector<Index> local(n, -1);
        for (size_t i = 0; i < vars.size(); ++i) local[vars[i]] = static_cast<Index>(i);
        const Eigen::Index m = static_cast<Eigen::Index>(vars.size());

        // S = diag(mu_<phi>), E = energy-measure form on the annulus,
        // M = diag(mu) on the annulus.
        Eigen::MatrixXd S = Eigen::MatrixXd::Zero(m, m);
        for (Index v : vars) S(local[v], local[v]) = mphi[v];
        Eigen::MatrixXd E = Eigen::MatrixXd::Zero(m, m);
        for (Index v : annulus)
          for (auto& [w, c] : net.neighbors(v)) {
            Eigen::Index a = local[v], b = local[w];
            E(a, a) += c;
            E(b, b) += c;
            E(a, b) -= c;
            E(b, a) -= c;
          }
        Eigen::MatrixXd M = Eigen::MatrixXd::Zero(m, m);
        for (Index v : annulus) M(local[v], local[v]) = mu[v];

        double pv = psi(x, R);
        for (double C1 : C1_grid) {
          SupRatio sup = sup_generalized_ratio(S - C1 * E, M);
          CsRow row;
          row.center = x;
          row.R = R;
          row.C1 = C1;
          row.infinite = sup.infinite;
          row.C2_normalized = sup.infinite ? std::numeric_limits<double>::infinity()
                                           : std::max(0.0, sup.value) * pv;
          rows[ji].push_back(row);
        }
      },
      threads);

  for (auto& bucket : rows) rep.rows.insert(rep.rows.end(), bucket.begin(), bucket.end());
  return rep;
}

CapPsiReport check_cap_psi(const Network& net, const Eigen::VectorXd& mu,
                           const PointMetric& space, const ScaleFn& psi, double A1,
                           const BallFamily& fam, int threads) {
  CapPsiReport rep;
  const Index n = space.size();
  auto centers = stride_centers(n, fam.max_centers);
  auto radii =
      fam.radii.empty() ? scan_radii(space, space.diameter() / A1, fam.min_radius) : fam.radii;
  struct Job {
    Index x;
    double R;
  };
  std::vector<Job> jobs;
  for (Index x : centers)
    for (double R : radii) jobs.push_back({x, R});
  std::vector<CapPsiRow> rows(jobs.size());
  std::vector<char> keep(jobs.size(), 0);
  par::parallel_for(
      static_cast<std::int64_t>(jobs.size()),
      [&](std::int64_t ji) {
        const auto [x, R] = jobs[ji];
        auto inner = space.ball(x, R);
        auto outer = space.ball(x, A1 * R);
        if (static_cast<Index>(outer.size()) == n) return;
        double cap = capacity(net, outer, inner).value;
        double mass = 0.0;
        for (Index v : inner) mass += mu[v];
        rows[ji] = {x, R, cap * psi(x, R) / mass};
        keep[ji] = 1;
      },
      threads);
  double enclosing = 1.0;
  for (size_t i = 0; i < rows.size(); ++i)
    if (keep[i]) {
      rep.rows.push_back(rows[i]);
      enclosing = std::max({enclosing, rows[i].ratio, 1.0 / rows[i].ratio});
    }
  rep.enclosing_constant = enclosing;
  return rep;
}

CrossMetricReport cross_metric_check(const Network& net, const Eigen::VectorXd& mu,
                                     const PointMetric& space, const ScaleTable& psi,
                                     const RemetricResult& rem, const BallFamily& fam,
                                     int threads) {
  CrossMetricReport rep;
  if (!rem.ok) return rep;
  PointMetric dpsi = rem.as_metric(space, threads);
  ScaleFn orig = table_scale(psi);
  ScaleFn powb = power_scale(rem.beta);

  // A2 = 2 keeps a usable radius window in the remetrized metric, whose
  // scale range is compressed by the exponent beta.
  const double A1 = 2.0, A2 = 2.0;
  PiReport pi_o = check_pi(net, mu, space, orig, A1, A2, fam, threads);
  PiReport pi_r = check_pi(net, mu, dpsi, powb, A1, A2, fam, threads);
  CapPsiReport cap_o = check_cap_psi(net, mu, space, orig, A1, fam, threads);
  CapPsiReport cap_r = check_cap_psi(net, mu, dpsi, powb, A1, fam, threads);
  std::vector<double> grid{1.0};
  CsReport cs_o = check_cs(net, mu, space, orig, A1, grid, fam, threads);
  CsReport cs_r = check_cs(net, mu, dpsi, powb, A1, grid, fam, threads);
  HarnackReport ehi_o = ehi_scan(net, space, 0.5, {fam.max_centers, 0.0, 0.0, threads});
  HarnackReport ehi_r = ehi_scan(net, dpsi, 0.5, {fam.max_centers, 0.0, 0.0, threads});

  rep.pi_original = pi_o.max_normalized;
  rep.pi_remetrized = pi_r.max_normalized;
  rep.cap_original = cap_o.enclosing_constant;
  rep.cap_remetrized = cap_r.enclosing_constant;
  rep.cs_original = cs_o.frontier_max(1.0);
  rep.cs_remetrized = cs_r.frontier_max(1.0);
  rep.ehi_original = ehi_o.global_max;
  rep.ehi_remetrized = ehi_r.global_max;
  auto finite = [](double v) { return std::isfinite(v) && v > 0.0; };
  rep.pass = finite(rep.pi_original) && finite(rep.pi_remetrized) &&
             finite(rep.cap_original) && finite(rep.cap_remetrized) &&
             std::isfinite(rep.cs_original) && std::isfinite(rep.cs_remetrized) &&
             finite(rep.ehi_original) && finite(rep.ehi_remetrized) &&
             !pi_o.any_degenerate && !pi_r.any_degenerate && !ehi_o.any_infinite &&
             !ehi_r.any_infinite;
  return rep;
}

}  // namespace ehinet
