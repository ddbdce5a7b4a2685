#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "ehinet/dyadic.hpp"
#include "ehinet/network.hpp"
#include "ehinet/point_metric.hpp"

namespace ehinet {

/// Probability measure on the level-k net, masses aligned with
/// decomp.nets[k].
struct LevelMeasure {
  int k = 0;
  Eigen::VectorXd mass;
  double total() const { return mass.sum(); }
};

struct VkTransfer {
  Index from = 0, to = 0;  // point indices
  double alpha = 0.0;
};

/// Everything needed to re-audit one refinement step without recomputing
/// capacities.
struct VkLevelLedger {
  int k = 0;  // parent level
  double C = 1.0;
  Eigen::VectorXd parent_mass;            // on nets[k]
  Eigen::VectorXd stage1_mass;            // on nets[k+1]
  std::vector<VkTransfer> transfers;      // ordered stage-2 corrections
  Eigen::VectorXd final_mass;             // on nets[k+1]
  std::vector<double> parent_capacity;    // c_k on nets[k]
  std::vector<double> child_capacity;     // c_{k+1} on nets[k+1]
};

/// One Volberg-Konyagin refinement: stage 1 splits each parent mass among
/// its successors proportionally to c_{k+1}; stage 2 sweeps close pairs in
/// lexicographic (min,max) point-index order and transfers the exact alpha
/// restoring the C^2 ratio band. Throws when mu_k violates the ratio
/// precondition for the given C.
LevelMeasure vk_step(const LevelMeasure& mu_k, const DyadicDecomposition& decomp,
                     const PointMetric& space, const CubeCapacityTable& caps, double C,
                     VkLevelLedger* ledger = nullptr);

struct VkResult {
  Eigen::VectorXd vertex_measure;  // finest-level masses on all vertices, total 1
  double C = 1.0;                  // C1 * S used for the ratio band
  double C1 = 1.0;
  int S = 0;
  double delta_hat = 0.0;
  int start_level = 0;
  std::vector<VkLevelLedger> ledger;
};

/// Runs the construction from level k0+2 (initial measure proportional to the
/// cube capacities) down to the finest level and maps the result onto
/// vertices.
VkResult build_measure(const DyadicDecomposition& decomp, const PointMetric& space,
                       const CubeCapacityTable& caps);

/// Replays a serialized ledger step and checks mass conservation, the
/// per-pair band (e:mure1), the parent/child bounds (e:mure2), transport
/// locality and the once-corrected-stays-corrected assertion. Returns a list
/// of violated assertions (empty = pass).
std::vector<std::string> audit_ledger_step(const VkLevelLedger& ledger,
                                           const DyadicDecomposition& decomp,
                                           const PointMetric& space, double delta_hat);

struct CapacityGoodCertificate {
  bool pass = false;
  std::string failure;  // set when !pass
  double C0 = 1.0;
  double A = 2.0;
  double beta1 = 0.0;   // infimum slope of log-ratio vs log(s2/s1)
  double beta2 = 0.0;   // supremum slope
  double theory_beta1 = 0.0;  // -log(1-delta_hat)/log(A_dyadic) when supplied
  double theory_beta2 = 0.0;  // log(C4)/log(A_dyadic)
  std::int64_t samples = 0;
};

/// Checks the two-sided capacity-good bounds on sampled (x, s1, s2) with
/// dyadic radii inside (resolution, A^-4 diam); beta1/beta2 are the pointwise
/// envelope slopes over pairs with s2 >= 2 s1. `builder` (optional) supplies
/// delta_hat/C for the theoretical targets in base A_dyadic.
CapacityGoodCertificate verify_capacity_good(const Eigen::VectorXd& mu, const Network& net,
                                             const PointMetric& space, double A,
                                             std::int64_t samples, const VkResult* builder = nullptr,
                                             double A_dyadic = 8.0, int threads = 0);

struct DoublingReport {
  bool pass = false;
  double doubling_constant = 0.0;  // max mu(B(x,2r))/mu(B(x,r))
  double rvd_alpha = 0.0;          // infimum slope of log mu(B) vs log r
  double rvd_c0 = 1.0;
  std::int64_t samples = 0;
};

/// Volume doubling and reverse doubling scan on the dyadic radius grid.
/// pass = every sampled ratio finite (in particular no ball of zero mass
/// inside a ball of positive mass).
DoublingReport verify_doubling(const Eigen::VectorXd& mu, const PointMetric& space,
                               std::int64_t samples);

}  // namespace ehinet
