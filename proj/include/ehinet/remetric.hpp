#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "ehinet/network.hpp"
#include "ehinet/point_metric.hpp"

namespace ehinet {

enum class PsiWindowing {
  Printed,  // Cap_{B(x, r/A^4)}(B(x, r/A^5)) as printed in the scale display
  Direct    // Cap_{B(x, A r)}(B(x, r)), the cap-estimate inversion
};

struct PsiConfig {
  double A = 2.0;
  PsiWindowing windowing = PsiWindowing::Printed;
  /// Reject radii below the printed window (r/A^5 < resolution) instead of
  /// letting the inner ball degenerate to the center point.
  bool strict_window = false;
  int threads = 0;
};

/// Scale function values psi(x, r) = mu(B(x,r)) / Cap(window) on the dyadic
/// radius grid, with log-log interpolation between grid radii and the
/// bounded-diameter clamp above.
struct ScaleTable {
  double A = 2.0;
  PsiWindowing windowing = PsiWindowing::Printed;
  double diam = 0.0;
  std::vector<double> radii;  // ascending
  Eigen::MatrixXd values;     // n x |radii|

  double value_at(Index x, double r) const;
  /// Least-squares exponent of log psi(x, .) vs log r.
  double slope_at(Index x) const;
  double median_slope() const;
};

ScaleTable build_psi(const Network& net, const Eigen::VectorXd& mu, const PointMetric& space,
                     const PsiConfig& cfg = {});

struct RegularityFit {
  double C1 = 1.0;
  double beta1 = 0.0;
  double beta2 = 0.0;
  bool pass = false;
  std::int64_t samples = 0;
};

/// Fits the two-sided scale-regularity bounds: beta1/beta2 from the
/// same-point slope envelope, then the smallest C1 making both inequalities
/// hold on sampled (x, y, r, s) with s <= r.
RegularityFit verify_regular_scale(const ScaleTable& psi, const PointMetric& space,
                                   std::int64_t sample_budget = 200000);

struct RemetricOptions {
  double grid_step = 1.25;  // multiplicative beta search step
  double max_factor = 8.0;  // search cap: beta <= max_factor * beta2
  double accept_C = 1e3;    // sandwich constant admitting a beta candidate
  std::int64_t distortion_budget = 2'000'000;
  int threads = 0;
};

struct RemetricResult {
  bool ok = false;
  std::string failure;
  Eigen::MatrixXd dpsi;  // chain metric of the symmetrized quasimetric
  double beta = 0.0;
  double sandwich_C = 0.0;  // two-sided constant of dpsi^beta vs psi(x, d)
  double qsm_C1 = 0.0;      // annulus-matched ball comparison constant
  DistortionEnvelope distortion;  // d vs d_psi

  PointMetric as_metric(const PointMetric& base, int threads = 0) const;
};

/// Chain metrization of q(x,y) = max(psi(x,d), psi(y,d))^(1/beta); the
/// smallest grid beta whose sandwich constant stays below accept_C wins.
RemetricResult build_dpsi(const ScaleTable& psi, const PointMetric& space,
                          const RemetricOptions& opt = {});

/// Scale-function handle used by the functional-inequality checkers.
using ScaleFn = std::function<double(Index, double)>;
ScaleFn power_scale(double beta);
ScaleFn table_scale(const ScaleTable& psi);

struct BallFamily {
  int max_centers = 16;
  double min_radius = 0.0;        // 0 = resolution
  std::vector<double> radii;      // nonempty: overrides the dyadic grid
};

/// Optimal constant C(B) of int_B (f - fbar)^2 dmu <= C mu_<f>(B(x, A1 R)),
/// as the largest generalized eigenvalue of the centered mass form against
/// the energy-measure form. infinite when the energy form is degenerate
/// across the ball.
struct PiBallValue {
  double constant = 0.0;
  bool infinite = false;
};
PiBallValue pi_ball_constant(const Network& net, const Eigen::VectorXd& mu,
                             const PointMetric& space, Index x, double R, double A1);

struct PiBallRow {
  Index center = 0;
  double R = 0.0;
  double constant = 0.0;    // optimal per-ball Poincare constant
  double normalized = 0.0;  // constant / psi(x, R)
  bool degenerate = false;  // energy form disconnected across the ball
};

struct PiReport {
  std::vector<PiBallRow> rows;
  double max_constant = 0.0;
  double max_normalized = 0.0;
  bool any_degenerate = false;
};

/// Optimal Poincare constants: per ball the largest generalized eigenvalue
/// of the centered mass form on B(x,R) against the energy-measure form on
/// B(x, A1 R). Radii run over the dyadic grid below diam/A2.
PiReport check_pi(const Network& net, const Eigen::VectorXd& mu, const PointMetric& space,
                  const ScaleFn& psi, double A1, double A2, const BallFamily& fam = {},
                  int threads = 0);

struct CsRow {
  Index center = 0;
  double R = 0.0;
  double C1 = 0.0;
  double C2_normalized = 0.0;  // psi(x,R)-normalized optimal C2, +inf flagged below
  bool infinite = false;
};

struct CsReport {
  std::vector<double> C1_grid;
  std::vector<CsRow> rows;
  /// Per C1: max over balls of the normalized C2 (ignoring infinite rows);
  /// infinite_count tells how many balls admit no finite C2 at that C1.
  double frontier_max(double C1) const;
  int infinite_count(double C1) const;
};

/// Cutoff energy frontier with the equilibrium-potential cutoff of
/// B(x,R) inside B(x, A1 R): exact optimal C2(C1) per ball via the
/// positive-semidefinite Schur reduction.
CsReport check_cs(const Network& net, const Eigen::VectorXd& mu, const PointMetric& space,
                  const ScaleFn& psi, double A1, std::vector<double> C1_grid = {},
                  const BallFamily& fam = {}, int threads = 0);

struct CapPsiRow {
  Index center = 0;
  double R = 0.0;
  double ratio = 0.0;  // Cap * psi / mu(B)
};

struct CapPsiReport {
  std::vector<CapPsiRow> rows;
  double enclosing_constant = 0.0;  // max of ratio and 1/ratio over rows
};

/// Two-sided comparison Cap_{B(x,A1 R)}(B(x,R)) vs mu(B(x,R))/psi(x,R).
CapPsiReport check_cap_psi(const Network& net, const Eigen::VectorXd& mu,
                           const PointMetric& space, const ScaleFn& psi, double A1,
                           const BallFamily& fam = {}, int threads = 0);

struct CrossMetricReport {
  double pi_original = 0.0, pi_remetrized = 0.0;
  double cs_original = 0.0, cs_remetrized = 0.0;
  double cap_original = 0.0, cap_remetrized = 0.0;
  double ehi_original = 0.0, ehi_remetrized = 0.0;
  bool pass = false;  // every constant finite on both sides
};

/// Re-runs PI/CS/cap with psi(r) = r^beta and the EHI scan in the remetrized
/// space, against the originals in (X, d).
CrossMetricReport cross_metric_check(const Network& net, const Eigen::VectorXd& mu,
                                     const PointMetric& space, const ScaleTable& psi,
                                     const RemetricResult& rem, const BallFamily& fam = {},
                                     int threads = 0);

}  // namespace ehinet
