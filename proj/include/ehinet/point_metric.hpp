#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ehinet {

using Index = std::int32_t;

/// Finite metric space on n points. Distances are kept as a dense symmetric
/// matrix; construction validates the metric axioms (triangle inequality
/// exhaustively for n <= 2000, on >= 1e6 sampled triples above that).
class PointMetric {
 public:
  /// ids: external point ids (must be unique). positions: optional
  /// coordinates, used only for serialization / generators.
  static PointMetric from_matrix(std::vector<std::int64_t> ids,
                                 std::vector<std::vector<double>> positions,
                                 Eigen::MatrixXd dist, int threads = 0);

  Index size() const { return static_cast<Index>(ids_.size()); }
  double dist(Index x, Index y) const { return dist_(x, y); }
  const Eigen::MatrixXd& matrix() const { return dist_; }
  double diameter() const { return diam_; }
  /// Smallest positive distance.
  double resolution() const { return resolution_; }
  const std::vector<std::int64_t>& ids() const { return ids_; }
  const std::vector<std::vector<double>>& positions() const { return positions_; }
  Index index_of(std::int64_t id) const;  // throws on unknown id

  /// Open metric ball { y : d(x,y) < r }, ascending point order. r > 0.
  std::vector<Index> ball(Index x, double r) const;
  /// Closed metric ball { y : d(x,y) <= r }.
  std::vector<Index> closed_ball(Index x, double r) const;

  /// Dyadic radius grid diam * 2^-j, j = 0 .. ceil(log2(diam/resolution)),
  /// descending.
  std::vector<double> dyadic_radii() const;

 private:
  std::vector<std::int64_t> ids_;
  std::vector<std::vector<double>> positions_;
  Eigen::MatrixXd dist_;
  double diam_ = 0.0;
  double resolution_ = 0.0;
};

/// Chain of eps*R balls joining x to y inside B(host_center, K*R).
struct ChainOfBalls {
  std::vector<Index> centers;  // z_0 = x .. z_N = y
  double step_radius = 0.0;    // eps * R
  Index host_center = -1;
  double host_radius = 0.0;    // K * R
  int length() const { return static_cast<int>(centers.size()) - 1; }
};

/// Checks the ChainOfBalls invariants by direct re-evaluation.
bool chain_is_valid(const PointMetric& space, const ChainOfBalls& chain);

/// Max size over sampled (x, R) of a greedy maximal R/2-separated subset of
/// B(x, R); radii run over the dyadic grid. A metric-doubling witness.
/// Ties in the greedy packing break to the lowest point index. If
/// samples >= #points * #radii the scan is exhaustive.
int md_constant(const PointMetric& space, std::int64_t samples, int threads = 0);

struct RbcOptions {
  /// When set, enforces the regularized-chain constraint: prefix indices up
  /// to the last index j with z_j in B(x, r) must keep their ball inside
  /// B(x, K*r).
  std::optional<double> inner_radius;
};

/// Shortest chain (BFS) of eps*R steps from x to y through points of
/// B(x0, K*R) whose eps*R-ball stays inside B(x0, K*R). Empty optional when
/// no chain exists. Requires 0 < eps < 1 and K > 1.
std::optional<ChainOfBalls> rbc_chain(const PointMetric& space, Index x0,
                                      double R, Index x, Index y, double eps,
                                      double K, const RbcOptions& opt = {});

struct UniformPerfectnessReport {
  bool holds = true;
  double C = 0.0;
  // Worst case scanned: fewest points in the annulus B(x,r) \ B(x,r/C).
  Index worst_center = -1;
  double worst_radius = 0.0;
  int worst_annulus_count = -1;
  std::int64_t checked = 0;
};

/// Scans the dyadic radius grid (restricted to r/C >= resolution and
/// B(x,r)^c nonempty) for empty annuli B(x,r) \ B(x,r/C). C > 1.
UniformPerfectnessReport uniform_perfectness(const PointMetric& space, double C);

/// Single-probe variant used for explicit (x, r) checks off the grid.
bool annulus_nonempty(const PointMetric& space, Index x, double r, double C);

/// Monotone upper envelope of d2-ratios against d1-ratios over sampled
/// triples (x, a, b): eta_hat(t) = max { d2(x,a)/d2(x,b) : d1(x,a)/d1(x,b) <= t }.
struct DistortionEnvelope {
  std::vector<std::pair<double, double>> sample_ratios;  // (t, eta_hat(t)), t ascending
  bool is_finite = true;
  /// Envelope slopes in log-log scale used by the finiteness test:
  /// min of log(s)/log(t) over t <= 1/2 and max over t >= 2.
  double low_exponent = 1.0;
  double high_exponent = 1.0;
  double eta_at(double t) const;  // envelope evaluation (sup over samples <= t)
};

/// Samples triples from two metrics on the same point set and returns the
/// distortion envelope. Exhaustive when n^3 <= sample_budget, otherwise a
/// deterministic seeded sample. Flags is_finite = false when the envelope
/// fails every power law up to exponent 16 (blow-up near t -> 0 or t -> inf).
DistortionEnvelope qs_distortion(const PointMetric& d1, const PointMetric& d2,
                                 std::int64_t sample_budget, int threads = 0);

}  // namespace ehinet
