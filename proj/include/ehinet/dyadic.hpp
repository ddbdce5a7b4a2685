#pragma once

#include <limits>
#include <string>
#include <unordered_map>
#include <vector>

#include "ehinet/network.hpp"
#include "ehinet/point_metric.hpp"

namespace ehinet {

/// Generalized dyadic cube decomposition of a finite metric space. Levels run
/// k = 0 .. k_max with scale(k) = diam * A^-k; nets are nested greedy maximal
/// scale(k)-separated sets seeded at the root, cubes are assembled bottom-up
/// from Voronoi cells of the finest net (which contains every point) through
/// the nearest-point parent maps.
struct DyadicDecomposition {
  static constexpr int kNeverSplits = std::numeric_limits<int>::min();

  double A = 8.0;
  Index root = 0;
  double scale0 = 0.0;  // diameter; scale anchor
  int k_max = 0;        // finest level
  int k0 = kNeverSplits;  // first level with more than one cube

  /// nets[k]: level-k net, ordered (previous net first, then new points by
  /// ascending index).
  std::vector<std::vector<Index>> nets;
  /// parent[k] aligned with nets[k] (k >= 1): the nearest point of N_{k-1},
  /// ties to the lowest point index.
  std::vector<std::vector<Index>> parent;
  /// center_of[k][p]: cube center (a net point) of point p at level k.
  std::vector<std::vector<Index>> center_of;

  double cA() const { return 0.5 - 1.0 / (A - 1.0); }
  double CA() const { return A / (A - 1.0); }
  double scale(int k) const;
  int level_count() const { return k_max + 1; }

  /// Successors S_k(x) = { y in N_{k+1} : parent(y) = x }, net order.
  std::vector<Index> successors(int k, Index x) const;
  /// Members of the cube Q_k(x) for a net point x.
  std::vector<Index> cube_members(int k, Index x) const;
};

DyadicDecomposition build_decomposition(const PointMetric& space, Index root, double A);

struct DecompositionCheck {
  std::string name;
  bool pass = true;
  std::string witness;
};

struct DecompositionReport {
  std::vector<DecompositionCheck> checks;
  int measured_CM = 0;     // max successor count
  int k0 = 0;
  /// Largest level k (< k_max) for which the inner-ball radius c_A*scale(k)
  /// still dominates the metric resolution; the successor lower bound
  /// |S_k| >= 2 is checked on k0 <= k <= split_level (below that the space
  /// cannot split further).
  int split_level = -1;
  bool all_pass() const;
  const DecompositionCheck* find(const std::string& name) const;
};

/// Re-checks every structural property (partition, nesting, inner/outer
/// balls with the exact constants c_A and C_A, nested nets and root
/// persistence, successor bounds, k0 estimate) against the metric.
DecompositionReport verify_decomposition(const DyadicDecomposition& decomp,
                                         const PointMetric& space);

/// Relative capacities of cubes: c_k(x) = Cap_{B(x, scale(k-1))}(Q_k(x)) for
/// levels k >= k0 + 2, plus the measured comparability constants.
struct CubeCapacityTable {
  int k_min = 0;  // first level with capacities (k0 + 2 unless skipped)
  int k_max = 0;
  std::vector<std::unordered_map<Index, double>> c;  // indexed by level
  std::vector<int> skipped_levels;  // ball covered the space at these levels

  double C1_within = 1.0;        // worst same-level ratio over pairs d <= 4*scale(k)
  double C1_parent_child = 1.0;  // worst ratio across parent/child pairs
  int S_max = 0;                 // max successor count over covered levels
  std::vector<double> delta_by_level;  // 1 - max_x c_k(x)/sum successors
  double delta_hat = 0.0;              // min over levels

  double at(int k, Index x) const;
  bool has_level(int k) const;
};

CubeCapacityTable cube_capacities(const DyadicDecomposition& decomp, const Network& net,
                                  const PointMetric& space, int threads = 0);

}  // namespace ehinet
