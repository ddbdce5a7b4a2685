#include "ehinet/space_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace ehinet {

namespace {

double checked_number(const json& v, const char* what) {
  if (!v.is_number()) throw std::invalid_argument(std::string(what) + " must be a number");
  double x = v.get<double>();
  if (!std::isfinite(x)) throw std::invalid_argument(std::string(what) + " must be finite");
  return x;
}

}  // namespace

Space space_from_json(const json& j, int threads) {
  if (!j.is_object()) throw std::invalid_argument("space document must be an object");
  if (!j.contains("points") || !j["points"].is_array() || j["points"].empty())
    throw std::invalid_argument("space document needs a nonempty points array");
  if (!j.contains("edges") || !j["edges"].is_array())
    throw std::invalid_argument("space document needs an edges array");

  std::vector<std::int64_t> ids;
  std::vector<std::vector<double>> positions;
  bool any_pos = false;
  std::unordered_map<std::int64_t, Index> index_of;
  for (const auto& p : j["points"]) {
    std::int64_t id = p.at("id").get<std::int64_t>();
    if (!index_of.emplace(id, static_cast<Index>(ids.size())).second)
      throw std::invalid_argument("duplicate point id");
    ids.push_back(id);
    if (p.contains("pos")) {
      std::vector<double> pos;
      for (const auto& c : p["pos"]) pos.push_back(checked_number(c, "pos"));
      positions.push_back(std::move(pos));
      any_pos = true;
    } else {
      positions.push_back({});
    }
  }
  const Index n = static_cast<Index>(ids.size());
  if (!any_pos) positions.clear();

  std::vector<Edge> edges;
  for (const auto& e : j["edges"]) {
    Index u = index_of.at(e.at("u").get<std::int64_t>());
    Index v = index_of.at(e.at("v").get<std::int64_t>());
    double c = checked_number(e.at("c"), "conductance");
    if (!(c > 0.0)) throw std::invalid_argument("conductance must be positive");
    edges.push_back({u, v, c});
  }

  Eigen::VectorXd m = Eigen::VectorXd::Ones(n);
  if (j.contains("measure")) {
    for (const auto& entry : j["measure"]) {
      Index v = index_of.at(entry.at("id").get<std::int64_t>());
      double mv = checked_number(entry.at("m"), "measure");
      if (!(mv > 0.0)) throw std::invalid_argument("measure must be positive");
      m[v] = mv;
    }
  }

  Space space;
  space.net = Network::create(n, edges, m);

  json metric = j.contains("metric") ? j["metric"] : json("graph");
  if (metric.is_string() && metric.get<std::string>() == "graph") {
    space.metric = graph_metric(space.net, positions, threads);
  } else if (metric.is_string() && metric.get<std::string>() == "euclidean") {
    if (positions.empty())
      throw std::invalid_argument("euclidean metric requires point positions");
    Eigen::MatrixXd d(n, n);
    for (Index a = 0; a < n; ++a) {
      d(a, a) = 0.0;
      for (Index b = a + 1; b < n; ++b) {
        if (positions[a].size() != positions[b].size())
          throw std::invalid_argument("inconsistent position dimensions");
        double s = 0.0;
        for (size_t k = 0; k < positions[a].size(); ++k) {
          double diff = positions[a][k] - positions[b][k];
          s += diff * diff;
        }
        d(a, b) = d(b, a) = std::sqrt(s);
      }
    }
    std::vector<std::int64_t> ids_copy = ids;
    space.metric = PointMetric::from_matrix(std::move(ids_copy), positions, std::move(d), threads);
  } else if (metric.is_object() && metric.contains("matrix")) {
    const auto& rows = metric["matrix"];
    if (static_cast<Index>(rows.size()) != n)
      throw std::invalid_argument("metric matrix size mismatch");
    Eigen::MatrixXd d(n, n);
    for (Index a = 0; a < n; ++a) {
      if (static_cast<Index>(rows[a].size()) != n)
        throw std::invalid_argument("metric matrix row size mismatch");
      for (Index b = 0; b < n; ++b) d(a, b) = checked_number(rows[a][b], "distance");
    }
    std::vector<std::int64_t> ids_copy = ids;
    space.metric = PointMetric::from_matrix(std::move(ids_copy), positions, std::move(d), threads);
  } else {
    throw std::invalid_argument("metric must be \"graph\", \"euclidean\" or {\"matrix\":[..]}");
  }
  return space;
}

Space load_space(const std::string& path, int threads) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("input-not-found: " + path);
  json j;
  in >> j;
  return space_from_json(j, threads);
}

json space_to_json(const Space& space, const std::string& metric_kind) {
  json j = json::object();
  j["points"] = json::array();
  const auto& ids = space.metric.ids();
  const auto& pos = space.metric.positions();
  for (Index v = 0; v < space.metric.size(); ++v) {
    json p{{"id", ids[v]}};
    if (!pos.empty() && !pos[v].empty()) p["pos"] = pos[v];
    j["points"].push_back(std::move(p));
  }
  j["edges"] = json::array();
  for (const Edge& e : space.net.edges())
    j["edges"].push_back({{"u", ids[e.u]}, {"v", ids[e.v]}, {"c", e.c}});
  j["measure"] = json::array();
  for (Index v = 0; v < space.net.size(); ++v)
    j["measure"].push_back({{"id", ids[v]}, {"m", space.net.measure()[v]}});
  if (metric_kind == "matrix") {
    json rows = json::array();
    for (Index a = 0; a < space.metric.size(); ++a) {
      json row = json::array();
      for (Index b = 0; b < space.metric.size(); ++b) row.push_back(space.metric.dist(a, b));
      rows.push_back(std::move(row));
    }
    j["metric"] = json{{"matrix", std::move(rows)}};
  } else {
    j["metric"] = metric_kind;
  }
  return j;
}

void save_space(const Space& space, const std::string& path, const std::string& metric_kind) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write " + path);
  out << dump_deterministic(space_to_json(space, metric_kind)) << "\n";
}

namespace {

void append_number(std::string& out, double x) {
  if (x == static_cast<std::int64_t>(x) && std::abs(x) < 1e15) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%lld.0", static_cast<long long>(x));
    out += buf;
    return;
  }
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  out += buf;
}

void dump_rec(const json& j, std::string& out, int indent, int depth) {
  std::string pad(static_cast<size_t>(indent) * depth, ' ');
  std::string pad_in(static_cast<size_t>(indent) * (depth + 1), ' ');
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += pad_in;
        out += json(it.key()).dump();
        out += ": ";
        dump_rec(it.value(), out, indent, depth + 1);
      }
      out += "\n" + pad + "}";
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      bool first = true;
      for (const auto& v : j) {
        if (!first) out += ",\n";
        first = false;
        out += pad_in;
        dump_rec(v, out, indent, depth + 1);
      }
      out += "\n" + pad + "]";
      return;
    }
    case json::value_t::number_float:
      append_number(out, j.get<double>());
      return;
    default:
      out += j.dump();
      return;
  }
}

}  // namespace

std::string dump_deterministic(const json& j, int indent) {
  std::string out;
  dump_rec(j, out, indent, 0);
  return out;
}

std::string table_csv(const std::vector<Index>& labels, const Eigen::MatrixXd& m) {
  std::ostringstream os;
  os << "x,y,value\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      char buf[40];
      std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
      os << labels[static_cast<size_t>(i)] << "," << labels[static_cast<size_t>(j)] << ","
         << buf << "\n";
    }
  return os.str();
}

}  // namespace ehinet
