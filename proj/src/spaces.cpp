#include "ehinet/spaces.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <random>
#include <stdexcept>

#include "ehinet/parallel.hpp"

namespace ehinet {

namespace {

enum class LatticeForm { None, Cartesian, Triangular };

struct Builder {
  // Deduplicated vertex store keyed by exact rational lattice coordinates.
  std::map<std::pair<std::int64_t, std::int64_t>, Index> key_to_index;
  std::vector<std::pair<std::int64_t, std::int64_t>> keys;
  std::vector<std::vector<double>> pos;
  std::map<std::pair<Index, Index>, double> edge_c;
  std::vector<double> mass;
  // Exact Euclidean distances from integer lattice keys: sqrt(Q(dk))/scale
  // with Q the Cartesian or triangular quadratic form. Avoids float fuzz on
  // ball membership at lattice-exact radii.
  LatticeForm form = LatticeForm::None;
  double form_scale = 1.0;

  Index vertex(std::int64_t kx, std::int64_t ky, double x, double y) {
    auto it = key_to_index.find({kx, ky});
    if (it != key_to_index.end()) return it->second;
    Index id = static_cast<Index>(keys.size());
    key_to_index[{kx, ky}] = id;
    keys.push_back({kx, ky});
    pos.push_back({x, y});
    mass.push_back(0.0);
    return id;
  }
  void edge(Index u, Index v, double c) {
    if (u == v) throw std::logic_error("self loop in generator");
    auto key = std::minmax(u, v);
    edge_c[{key.first, key.second}] = c;
  }
};

// Canonical index order: sort by (y, x) lattice key so generated ids are
// stable regardless of emission order.
struct Canon {
  std::vector<Index> perm;  // old -> new
};

Canon canonicalize(Builder& b) {
  std::vector<Index> order(b.keys.size());
  for (Index i = 0; i < static_cast<Index>(order.size()); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](Index a, Index c) {
    auto ka = std::make_pair(b.keys[a].second, b.keys[a].first);
    auto kc = std::make_pair(b.keys[c].second, b.keys[c].first);
    return ka < kc;
  });
  Canon canon;
  canon.perm.assign(order.size(), 0);
  for (Index newi = 0; newi < static_cast<Index>(order.size()); ++newi)
    canon.perm[order[newi]] = newi;

  std::vector<std::vector<double>> pos(b.pos.size());
  std::vector<double> mass(b.mass.size());
  for (Index old = 0; old < static_cast<Index>(order.size()); ++old) {
    pos[canon.perm[old]] = b.pos[old];
    mass[canon.perm[old]] = b.mass[old];
  }
  b.pos = std::move(pos);
  b.mass = std::move(mass);
  return canon;
}

Space finish(Builder& b, const SpaceSpec& spec, std::map<std::string, Index> landmarks) {
  Canon canon = canonicalize(b);
  for (auto& [name, v] : landmarks) v = canon.perm[v];

  std::vector<Edge> edges;
  edges.reserve(b.edge_c.size());
  for (auto& [uv, c] : b.edge_c) {
    Index u = canon.perm[uv.first], v = canon.perm[uv.second];
    if (u > v) std::swap(u, v);
    edges.push_back({u, v, c});
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b2) {
    return std::tie(a.u, a.v) < std::tie(b2.u, b2.v);
  });

  const Index n = static_cast<Index>(b.pos.size());
  Eigen::VectorXd m(n);
  for (Index v = 0; v < n; ++v) m[v] = b.mass[v];
  if (spec.measure == MeasureScheme::Counting) m.setOnes();

  Network net = Network::create(n, edges, m);
  if (spec.measure == MeasureScheme::Degree) {
    Eigen::VectorXd dm(n);
    for (Index v = 0; v < n; ++v) dm[v] = net.degree(v);
    net = net.time_change(dm);
  }

  std::vector<std::pair<std::int64_t, std::int64_t>> keys(b.keys.size());
  for (Index old = 0; old < static_cast<Index>(b.keys.size()); ++old)
    keys[canon.perm[old]] = b.keys[old];

  Space space;
  if (spec.metric == MetricKind::Euclidean) {
    Eigen::MatrixXd d(n, n);
    for (Index i = 0; i < n; ++i) {
      d(i, i) = 0.0;
      for (Index j = i + 1; j < n; ++j) {
        double dd;
        if (b.form != LatticeForm::None) {
          std::int64_t dp = keys[i].first - keys[j].first;
          std::int64_t dq = keys[i].second - keys[j].second;
          std::int64_t quad = b.form == LatticeForm::Cartesian
                                  ? dp * dp + dq * dq
                                  : dp * dp + dp * dq + dq * dq;
          dd = std::sqrt(static_cast<double>(quad)) / b.form_scale;
        } else {
          double dx = b.pos[i][0] - b.pos[j][0];
          double dy = b.pos[i][1] - b.pos[j][1];
          dd = std::sqrt(dx * dx + dy * dy);
        }
        d(i, j) = dd;
        d(j, i) = dd;
      }
    }
    std::vector<std::int64_t> ids(n);
    for (Index i = 0; i < n; ++i) ids[i] = i;
    space.metric = PointMetric::from_matrix(std::move(ids), b.pos, std::move(d));
  } else {
    space.metric = graph_metric(net, b.pos);
  }
  space.net = std::move(net);
  space.landmarks = std::move(landmarks);
  return space;
}

double edge_len(const SpaceSpec& spec, double geometric_length) {
  return spec.conductance == ConductanceScheme::Cable ? geometric_length : 1.0;
}

void gen_path(Builder& b, const SpaceSpec& spec, std::map<std::string, Index>& lm) {
  b.form = LatticeForm::Cartesian;
  b.form_scale = 1.0;
  int n = spec.size;
  if (n < 2) throw std::invalid_argument("path needs >= 2 vertices");
  for (int i = 0; i < n; ++i) b.vertex(i, 0, static_cast<double>(i), 0.0);
  for (int i = 0; i + 1 < n; ++i) b.edge(i, i + 1, 1.0 / edge_len(spec, 1.0));
  for (auto& m : b.mass) m = 1.0;
  lm["start"] = 0;
  lm["end"] = n - 1;
}

void gen_grid(Builder& b, const SpaceSpec& spec, std::map<std::string, Index>& lm) {
  b.form = LatticeForm::Cartesian;
  b.form_scale = 1.0;
  int k = spec.size;
  if (k < 2) throw std::invalid_argument("grid side must be >= 2");
  auto at = [&](int i, int j) { return b.vertex(i, j, i, j); };
  for (int j = 0; j < k; ++j)
    for (int i = 0; i < k; ++i) at(i, j);
  double c = 1.0 / edge_len(spec, 1.0);
  for (int j = 0; j < k; ++j)
    for (int i = 0; i < k; ++i) {
      if (i + 1 < k) b.edge(at(i, j), at(i + 1, j), c);
      if (j + 1 < k) b.edge(at(i, j), at(i, j + 1), c);
    }
  for (auto& m : b.mass) m = 1.0;
  lm["corner"] = at(0, 0);
  lm["center"] = at(k / 2, k / 2);
}

// Sierpinski gasket in triangular lattice coordinates: key (p,q) maps to the
// plane point ((p + q/2)/S, q*sqrt(3)/2/S) with S = 2^level.
void gen_gasket(Builder& b, const SpaceSpec& spec, std::map<std::string, Index>& lm,
                double x_off = 0.0, double y_off = 0.0, double side = 1.0) {
  int level = spec.level;
  if (level < 0 || level > 8) throw std::invalid_argument("gasket level out of range [0,8]");
  std::int64_t S = 1ll << level;
  if (x_off == 0.0 && y_off == 0.0 && side == 1.0) {
    b.form = LatticeForm::Triangular;
    b.form_scale = static_cast<double>(S);
  }
  double cellm = std::pow(3.0, -level);
  double elen = side / static_cast<double>(S);

  auto vertex = [&](std::int64_t p, std::int64_t q) {
    double x = x_off + side * (p + q / 2.0) / S;
    double y = y_off + side * (q * std::sqrt(3.0) / 2.0) / S;
    return b.vertex(p, q, x, y);
  };

  struct Cell {
    std::int64_t p1, q1, p2, q2, p3, q3;
  };
  std::vector<Cell> cells{{0, 0, S, 0, 0, S}};
  for (int d = 0; d < level; ++d) {
    std::vector<Cell> next;
    next.reserve(cells.size() * 3);
    for (const Cell& c : cells) {
      std::int64_t m12p = (c.p1 + c.p2) / 2, m12q = (c.q1 + c.q2) / 2;
      std::int64_t m13p = (c.p1 + c.p3) / 2, m13q = (c.q1 + c.q3) / 2;
      std::int64_t m23p = (c.p2 + c.p3) / 2, m23q = (c.q2 + c.q3) / 2;
      next.push_back({c.p1, c.q1, m12p, m12q, m13p, m13q});
      next.push_back({m12p, m12q, c.p2, c.q2, m23p, m23q});
      next.push_back({m13p, m13q, m23p, m23q, c.p3, c.q3});
    }
    cells = std::move(next);
  }
  double c = 1.0 / edge_len(spec, elen);
  for (const Cell& cell : cells) {
    Index v1 = vertex(cell.p1, cell.q1);
    Index v2 = vertex(cell.p2, cell.q2);
    Index v3 = vertex(cell.p3, cell.q3);
    b.edge(v1, v2, c);
    b.edge(v2, v3, c);
    b.edge(v1, v3, c);
    b.mass[v1] += cellm;
    b.mass[v2] += cellm;
    b.mass[v3] += cellm;
  }
  lm["A1"] = vertex(0, 0);
  lm["A2"] = vertex(S, 0);
  lm["A3"] = vertex(0, S);
}

// Vicsek tree (diagonal cross fractal) on the lattice scaled by 2*3^level.
void gen_vicsek(Builder& b, const SpaceSpec& spec, std::map<std::string, Index>& lm) {
  int level = spec.level;
  if (level < 0 || level > 8) throw std::invalid_argument("vicsek level out of range [0,8]");
  std::int64_t S = 2;
  for (int i = 0; i < level; ++i) S *= 3;
  b.form = LatticeForm::Cartesian;
  b.form_scale = static_cast<double>(S);
  double cellm = std::pow(5.0, -level);
  double half_diag = std::sqrt(2.0) / 2.0 / std::pow(3.0, level);

  auto vertex = [&](std::int64_t x, std::int64_t y) {
    return b.vertex(x, y, static_cast<double>(x) / S, static_cast<double>(y) / S);
  };

  struct Cell {
    std::int64_t x, y, s;
  };
  std::vector<Cell> cells{{0, 0, S}};
  for (int d = 0; d < level; ++d) {
    std::vector<Cell> next;
    next.reserve(cells.size() * 5);
    for (const Cell& c : cells) {
      std::int64_t t = c.s / 3;
      next.push_back({c.x, c.y, t});
      next.push_back({c.x + 2 * t, c.y, t});
      next.push_back({c.x, c.y + 2 * t, t});
      next.push_back({c.x + 2 * t, c.y + 2 * t, t});
      next.push_back({c.x + t, c.y + t, t});
    }
    cells = std::move(next);
  }
  double c = 1.0 / edge_len(spec, half_diag);
  for (const Cell& cell : cells) {
    Index ctr = vertex(cell.x + cell.s / 2, cell.y + cell.s / 2);
    Index c00 = vertex(cell.x, cell.y);
    Index c10 = vertex(cell.x + cell.s, cell.y);
    Index c01 = vertex(cell.x, cell.y + cell.s);
    Index c11 = vertex(cell.x + cell.s, cell.y + cell.s);
    for (Index corner : {c00, c10, c01, c11}) b.edge(ctr, corner, c);
    for (Index v : {ctr, c00, c10, c01, c11}) b.mass[v] += cellm;
  }
  lm["corner00"] = vertex(0, 0);
  lm["corner10"] = vertex(S, 0);
  lm["corner01"] = vertex(0, S);
  lm["corner11"] = vertex(S, S);
  lm["center"] = vertex(S / 2, S / 2);
}

// Gasket glued to a square grid along the gasket's bottom row, plus a
// segment from the gasket apex A3 to the midpoint A4 of the square's right
// side. The continuum contact set along the bottom is approximated by
// identifying matching lattice vertices.
void gen_joined_gsq(Builder& b, const SpaceSpec& spec, std::map<std::string, Index>& lm) {
  int level = spec.level;
  std::int64_t S = 1ll << level;
  int k = spec.size > 1 ? spec.size : static_cast<int>(S) + 1;
  if (k != static_cast<int>(S) + 1)
    throw std::invalid_argument("joined_gsq requires grid side 2^level + 1 for the junction match");

  gen_gasket(b, spec, lm);
  b.form = LatticeForm::None;  // mixed lattices; fall back to positions

  // Square [0,1] x [-1,0] as a k x k grid; top row vertices coincide with the
  // gasket's bottom row in lattice coordinates (q = 0 row keys are (p, 0)).
  // Grid keys use negative y to stay disjoint from gasket keys except on the
  // shared row.
  double h = 1.0 / (k - 1);
  double cg = 1.0 / edge_len(spec, h);
  auto grid_vertex = [&](int i, int j) {
    // j = 0 is the top row, identified with gasket row q = 0 (keys (i,0)).
    std::int64_t scale = S / (k - 1);
    return b.vertex(i * scale, -static_cast<std::int64_t>(j), i * h, -j * h);
  };
  for (int j = 0; j < k; ++j)
    for (int i = 0; i < k; ++i) {
      Index v = grid_vertex(i, j);
      b.mass[v] += h * h;
      if (i + 1 < k) b.edge(v, grid_vertex(i + 1, j), cg);
      if (j + 1 < k) b.edge(v, grid_vertex(i, j + 1), cg);
    }
  int j4 = (k - 1) / 2;
  if ((k - 1) % 2 != 0) j4 = (k - 1) / 2;  // nearest row to y = -1/2
  Index A4 = grid_vertex(k - 1, j4);
  lm["A4"] = A4;

  // Segment from A3 to A4 along an arc outside the gasket and the square.
  int segs = std::max(2, spec.segment_subdiv);
  double ax = 0.5, ay = std::sqrt(3.0) / 2.0;
  double bx = 1.0, by = -static_cast<double>(j4) * h;
  double cxq = 2.0, cyq = 0.3;  // Bezier control point to the right
  Index prev = lm["A3"];
  double seg_len = 0.0;
  std::vector<std::pair<double, double>> pts;
  for (int t = 1; t <= segs; ++t) {
    double u = static_cast<double>(t) / segs;
    double x = (1 - u) * (1 - u) * ax + 2 * (1 - u) * u * cxq + u * u * bx;
    double y = (1 - u) * (1 - u) * ay + 2 * (1 - u) * u * cyq + u * u * by;
    pts.push_back({x, y});
  }
  {
    double px = ax, py = ay;
    for (auto& [x, y] : pts) {
      seg_len += std::hypot(x - px, y - py);
      px = x;
      py = y;
    }
  }
  double step = seg_len / segs;
  double cs = 1.0 / edge_len(spec, step);
  for (int t = 1; t <= segs; ++t) {
    Index v = (t == segs) ? A4 : b.vertex(1000000 + t, 1000000, pts[t - 1].first, pts[t - 1].second);
    if (t != segs) b.mass[v] += step;
    b.edge(prev, v, cs);
    prev = v;
  }
}

void gen_vicsek_interval(Builder& b, const SpaceSpec& spec, std::map<std::string, Index>& lm) {
  gen_vicsek(b, spec, lm);
  b.form = LatticeForm::None;  // interval keys are not lattice points
  Index attach = lm["corner11"];
  int segs = std::max(2, spec.segment_subdiv);
  double step = 1.0 / segs;
  double cs = 1.0 / edge_len(spec, step);
  Index prev = attach;
  for (int t = 1; t <= segs; ++t) {
    Index v = b.vertex(2000000 + t, 2000000, 1.0 + t * step, 1.0);
    b.mass[v] += (t == segs) ? step / 2.0 : step;
    b.edge(prev, v, cs);
    prev = v;
  }
  b.mass[attach] += step / 2.0;
  lm["interval_end"] = prev;
}

}  // namespace

Space generate(const SpaceSpec& spec) {
  Builder b;
  std::map<std::string, Index> lm;
  switch (spec.kind) {
    case SpaceKind::Path: gen_path(b, spec, lm); break;
    case SpaceKind::Grid: gen_grid(b, spec, lm); break;
    case SpaceKind::Gasket: gen_gasket(b, spec, lm); break;
    case SpaceKind::Vicsek: gen_vicsek(b, spec, lm); break;
    case SpaceKind::JoinedGsq: gen_joined_gsq(b, spec, lm); break;
    case SpaceKind::VicsekInterval: gen_vicsek_interval(b, spec, lm); break;
  }
  return finish(b, spec, std::move(lm));
}

PointMetric graph_metric(const Network& net,
                         const std::vector<std::vector<double>>& positions, int threads) {
  const Index n = net.size();
  Eigen::MatrixXd d(n, n);
  par::parallel_for(
      n,
      [&](std::int64_t src) {
        // Dijkstra with edge length 1/c.
        std::vector<double> dist(n, std::numeric_limits<double>::infinity());
        std::priority_queue<std::pair<double, Index>, std::vector<std::pair<double, Index>>,
                            std::greater<>>
            pq;
        dist[src] = 0.0;
        pq.push({0.0, static_cast<Index>(src)});
        while (!pq.empty()) {
          auto [du, u] = pq.top();
          pq.pop();
          if (du > dist[u]) continue;
          for (auto& [v, c] : net.neighbors(u)) {
            double nd = du + 1.0 / c;
            if (nd < dist[v]) {
              dist[v] = nd;
              pq.push({nd, v});
            }
          }
        }
        for (Index j = 0; j < n; ++j) d(src, j) = dist[j];
      },
      threads);
  // Symmetrize exactly (Dijkstra is deterministic but do not rely on fp order).
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) {
      double v = std::min(d(i, j), d(j, i));
      d(i, j) = v;
      d(j, i) = v;
    }
  std::vector<std::int64_t> ids(n);
  for (Index i = 0; i < n; ++i) ids[i] = i;
  return PointMetric::from_matrix(std::move(ids), positions, std::move(d));
}

Space subdivide(const Space& space, int factor) {
  if (factor < 1) throw std::invalid_argument("subdivision factor must be >= 1");
  const Network& net = space.net;
  if (factor == 1) {
    Space out;
    out.metric = graph_metric(net, space.metric.positions());
    out.net = net;
    out.landmarks = space.landmarks;
    return out;
  }
  const Index n = net.size();
  std::vector<Edge> edges;
  std::vector<double> mass(net.measure().data(), net.measure().data() + n);
  std::vector<std::vector<double>> pos = space.metric.positions();
  Index next = n;
  for (const Edge& e : net.edges()) {
    double c = e.c * factor;
    double share = (1.0 / e.c) / factor;  // resistance-length share
    Index prev = e.u;
    for (int t = 1; t < factor; ++t) {
      Index v = next++;
      mass.push_back(share);
      if (!pos.empty()) {
        double u = static_cast<double>(t) / factor;
        const auto& pu = space.metric.positions()[e.u];
        const auto& pv = space.metric.positions()[e.v];
        pos.push_back({(1 - u) * pu[0] + u * pv[0], (1 - u) * pu[1] + u * pv[1]});
      }
      edges.push_back({prev, v, c});
      prev = v;
    }
    edges.push_back({prev, e.v, c});
  }
  Eigen::VectorXd m(next);
  for (Index v = 0; v < next; ++v) m[v] = mass[v];
  Space out;
  out.net = Network::create(next, edges, m);
  out.metric = graph_metric(out.net, pos);
  out.landmarks = space.landmarks;
  return out;
}

Network perturb(const Network& net, double lambda, std::uint64_t seed,
                PerturbCertificate* cert) {
  if (!(lambda >= 1.0)) throw std::invalid_argument("lambda must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-std::log(lambda), std::log(lambda));
  std::vector<Edge> edges = net.edges();
  double lo = 1.0, hi = 1.0;
  for (Edge& e : edges) {
    double mult = lambda == 1.0 ? 1.0 : std::exp(u(rng));
    e.c *= mult;
    lo = std::min(lo, mult);
    hi = std::max(hi, mult);
  }
  if (cert) *cert = {lambda, hi, lo};
  return Network::create(net.size(), std::move(edges), net.measure());
}

}  // namespace ehinet
