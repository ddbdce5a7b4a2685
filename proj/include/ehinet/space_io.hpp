#pragma once

#include <string>

#include "ehinet/network.hpp"
#include "ehinet/point_metric.hpp"
#include "ehinet/spaces.hpp"

// vendored nlohmann/json single header
#include "json.hpp"

namespace ehinet {

using json = nlohmann::ordered_json;

/// Canonical space format:
///   {"points":[{"id":int,"pos":[..]?},...],
///    "edges":[{"u":int,"v":int,"c":num},...],
///    "measure":[{"id":int,"m":num},...],          (optional; default 1)
///    "metric":"graph" | "euclidean" | {"matrix":[[..],..]}}
/// Ids are arbitrary distinct integers; indices follow their file order.
/// NaN/Inf anywhere is rejected.
Space space_from_json(const json& j, int threads = 0);
Space load_space(const std::string& path, int threads = 0);

json space_to_json(const Space& space, const std::string& metric_kind = "euclidean");
void save_space(const Space& space, const std::string& path,
                const std::string& metric_kind = "euclidean");

/// Deterministic serializer: fixed key order (insertion order of
/// ordered_json), floats with 17 significant digits, no locale dependence.
std::string dump_deterministic(const json& j, int indent = 2);

/// "x,y,value" rows of a Green/capacity style table.
std::string table_csv(const std::vector<Index>& labels, const Eigen::MatrixXd& m);

}  // namespace ehinet
