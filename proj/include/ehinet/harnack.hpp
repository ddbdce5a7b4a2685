#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ehinet/dyadic.hpp"
#include "ehinet/network.hpp"
#include "ehinet/point_metric.hpp"

namespace ehinet {

struct HarnackValue {
  double value = 1.0;
  bool infinite = false;     // zero harmonic measure seen from the inner ball
  bool whole_space = false;  // no boundary: constants only, C_H = 1 by convention
};

/// Exact Harnack constant of the ball B(x,R) with inner ball B(x, delta R):
/// the extremal ratio over the cone of nonnegative harmonic functions,
/// attained on the extreme rays (harmonic-measure columns), so
///   C_H = max_z max_u omega(u,z) / min_v omega(v,z)
/// over inner points u, v with positive measure; zero-vs-positive pairs give
/// the infinite sentinel. Positivity is decided by connectivity inside the
/// ball, never by floating-point thresholds.
HarnackValue harnack_constant(const Network& net, const PointMetric& space, Index x,
                              double R, double delta);

struct ScanOptions {
  int max_centers = 0;      // 0 = every vertex
  double min_radius = 0.0;  // 0 = resolution
  double max_radius = 0.0;  // 0 = diameter
  int threads = 0;
};

struct BallRecord {
  Index center = 0;
  double radius = 0.0;
  HarnackValue value;
};

struct HarnackReport {
  double delta = 0.5;
  std::vector<BallRecord> balls;
  std::vector<double> scales;           // scanned dyadic radii, descending
  std::vector<double> per_scale_max;    // finite max per scale (1 when empty)
  std::vector<int> per_scale_infinite;  // infinite sentinels per scale
  double global_max = 1.0;
  bool any_infinite = false;
  double trend_slope = 0.0;  // LSQ slope of log(per-scale max) vs log(scale)
};

/// Harnack constants over all centers (or a stride sample) and dyadic radii
/// whose ball has nonempty complement.
HarnackReport ehi_scan(const Network& net, const PointMetric& space, double delta,
                       const ScanOptions& opt = {});

struct HGReport {
  Index center = 0;
  double R = 0.0;
  double K_G = 0.0;
  double ratio = 0.0;  // sup_{D \ B(x0,R)} g_D(x0,.) / inf_{closed B \ {x0}} g_D(x0,.)
  bool infinite = false;
};

/// Green-function comparison of Definition (HG). Requires B(x0, K_G R)
/// inside D and nonempty complement.
HGReport check_hg(const Network& net, const PointMetric& space, Index x0, double R,
                  const std::vector<Index>& D, double K_G);

struct LemmaEntry {
  std::string name;
  bool unconditional_ok = true;  // zero-slack inequalities measured exactly
  double constant = 0.0;         // measured constant (or fitted exponent)
  std::int64_t cases = 0;
  std::string witness;
};

struct LemmaReport {
  std::vector<LemmaEntry> entries;
  bool all_unconditional_ok() const;
  const LemmaEntry* find(const std::string& name) const;
};

struct GreenLemmasConfig {
  int max_centers = 6;
  double K = 2.0;  // chain constant driving the geometric windows
  double delta = 0.5;
  int threads = 0;
};

/// Measured constants for the Green-function comparisons: annulus
/// comparability, pairwise comparability, capacity vs Green (with its
/// unconditional lower half), domain doubling of Green functions, the decay
/// exponent, and the two maximum principles (exact).
LemmaReport check_green_lemmas(const Network& net, const PointMetric& space,
                               const GreenLemmasConfig& cfg = {});

struct CapacityLemmasConfig {
  int max_centers = 6;
  double K = 2.0;
  const DyadicDecomposition* decomp = nullptr;  // enables the cube subadditivity check
  int threads = 0;
};

/// Capacity chain telescoping (unconditional lower bound), window-change and
/// center-shift comparability, the cross-scale exponent, and the strict
/// subadditivity surplus on disjoint cube families.
LemmaReport check_capacity_lemmas(const Network& net, const PointMetric& space,
                                  const CapacityLemmasConfig& cfg = {});

struct ChainingCheck {
  bool evaluated = false;
  bool pass = false;
  double chain_probability = 0.0;     // min over the start ball
  double step_product = 0.0;          // product of per-step minima
  int steps = 0;
};

/// Chaining bound: P(hit B_n before exiting the chain tube) >= product of
/// per-step hitting probabilities, with 1e-12 slack.
ChainingCheck check_chaining(const Network& net, const PointMetric& space,
                             const ChainOfBalls& chain, double K3);

struct StabilityTrial {
  std::uint64_t seed = 0;
  double min_multiplier = 1.0, max_multiplier = 1.0;
  double energy_ratio_low = 1.0, energy_ratio_high = 1.0;  // over sampled f
  bool edgewise_ok = true;
  double harnack_before = 1.0, harnack_after = 1.0;
  double hg_before = 1.0, hg_after = 1.0;
  double cap_psi_before = 1.0, cap_psi_after = 1.0;
  double pi_before = 1.0, pi_after = 1.0;
};

struct StabilityReport {
  double lambda = 1.0;
  std::vector<StabilityTrial> trials;
  double max_harnack_ratio = 1.0;  // max over trials of before/after (both ways)
  double max_cap_ratio = 1.0;
  double max_pi_ratio = 1.0;
  bool edgewise_ok = true;
};

struct StabilityOptions {
  int scan_max_centers = 24;
  int pi_max_centers = 8;
  int random_functions = 50;
  int threads = 0;
};

/// Form-bounded perturbation experiment: draw comparable conductances,
/// assert the exact edgewise and energy-measure comparability, and compare
/// the EHI / (HG) / cap(Psi) / PI(Psi) constants before and after.
StabilityReport stability_experiment(const Network& net, const PointMetric& space,
                                     double lambda, std::uint64_t seed, int trials,
                                     const StabilityOptions& opt = {});

}  // namespace ehinet
