#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "ehinet/network.hpp"
#include "ehinet/point_metric.hpp"

namespace ehinet {

enum class SpaceKind { Path, Grid, Gasket, Vicsek, JoinedGsq, VicsekInterval };
enum class MetricKind { Euclidean, Graph };
enum class MeasureScheme { Counting, Degree, Fractal };
enum class ConductanceScheme { Unit, Cable };

struct SpaceSpec {
  SpaceKind kind = SpaceKind::Path;
  int size = 5;    // path vertex count / grid side
  int level = 1;   // fractal iteration depth (<= 8)
  int segment_subdiv = 8;  // joined spaces: edges on the attached segment
  MetricKind metric = MetricKind::Euclidean;
  MeasureScheme measure = MeasureScheme::Counting;
  ConductanceScheme conductance = ConductanceScheme::Unit;
};

/// A generated space: metric, network, and named landmark vertices
/// (gasket corners "A1".."A3", junctions "A4", tree corners, ...).
struct Space {
  PointMetric metric;
  Network net;
  std::map<std::string, Index> landmarks;
};

/// Deterministic generator; pure function of the spec.
Space generate(const SpaceSpec& spec);

/// Graph metric: all-pairs shortest path with edge length 1/c.
PointMetric graph_metric(const Network& net,
                         const std::vector<std::vector<double>>& positions = {},
                         int threads = 0);

/// Cable approximation: every edge of conductance c becomes `factor` edges of
/// conductance c*factor. Interior vertices get measure (1/c)/factor (length
/// share); effective resistances between original vertices are preserved
/// exactly. The returned metric is the graph metric on resistance lengths.
Space subdivide(const Space& space, int factor);

struct PerturbCertificate {
  double lambda = 1.0;
  double max_multiplier = 1.0;
  double min_multiplier = 1.0;
};

/// Each conductance multiplied by an independent log-uniform draw from
/// [1/lambda, lambda]. Deterministic under seed.
Network perturb(const Network& net, double lambda, std::uint64_t seed,
                PerturbCertificate* cert = nullptr);

}  // namespace ehinet
