#include "ehinet/dyadic.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "ehinet/parallel.hpp"

namespace ehinet {

double DyadicDecomposition::scale(int k) const { return scale0 * std::pow(A, -k); }

std::vector<Index> DyadicDecomposition::successors(int k, Index x) const {
  std::vector<Index> out;
  if (k + 1 > k_max) return out;
  for (size_t i = 0; i < nets[k + 1].size(); ++i)
    if (parent[k + 1][i] == x) out.push_back(nets[k + 1][i]);
  return out;
}

std::vector<Index> DyadicDecomposition::cube_members(int k, Index x) const {
  std::vector<Index> out;
  for (Index p = 0; p < static_cast<Index>(center_of[k].size()); ++p)
    if (center_of[k][p] == x) out.push_back(p);
  return out;
}

DyadicDecomposition build_decomposition(const PointMetric& space, Index root, double A) {
  if (!(A >= 8.0)) throw std::invalid_argument("dyadic scale base A must be >= 8");
  if (root < 0 || root >= space.size()) throw std::invalid_argument("unknown root point");
  const Index n = space.size();

  DyadicDecomposition d;
  d.A = A;
  d.root = root;
  d.scale0 = space.diameter();

  // Greedy nested maximal nets, seeded at the root, candidates in index order.
  std::vector<char> in_net(n, 0);
  std::vector<Index> net{root};
  in_net[root] = 1;
  for (int k = 0;; ++k) {
    double s = d.scale0 * std::pow(A, -k);
    for (Index p = 0; p < n; ++p) {
      if (in_net[p]) continue;
      bool separated = true;
      for (Index q : net)
        if (space.dist(p, q) < s) {
          separated = false;
          break;
        }
      if (separated) {
        net.push_back(p);
        in_net[p] = 1;
      }
    }
    d.nets.push_back(net);
    d.k_max = k;
    if (static_cast<Index>(net.size()) == n) break;
    if (k > 200) throw std::runtime_error("dyadic refinement failed to terminate");
  }

  // Nearest-coarser-net parents, ties to the lowest point index. Points
  // already present in the coarser net are their own parent.
  d.parent.resize(d.level_count());
  for (int k = 1; k <= d.k_max; ++k) {
    const auto& fine = d.nets[k];
    const auto& coarse = d.nets[k - 1];
    d.parent[k].resize(fine.size());
    for (size_t i = 0; i < fine.size(); ++i) {
      Index best = -1;
      double bd = std::numeric_limits<double>::infinity();
      for (Index q : coarse) {
        double dd = space.dist(fine[i], q);
        if (dd < bd || (dd == bd && q < best)) {
          bd = dd;
          best = q;
        }
      }
      d.parent[k][i] = best;
    }
  }

  // Cubes bottom-up: finest level is the identity (the finest net holds all
  // points), coarser levels chain through the parent map.
  d.center_of.assign(d.level_count(), std::vector<Index>(n, -1));
  for (Index p = 0; p < n; ++p) d.center_of[d.k_max][p] = p;
  for (int k = d.k_max - 1; k >= 0; --k) {
    std::vector<Index> parent_of_net(n, -1);
    const auto& fine = d.nets[k + 1];
    for (size_t i = 0; i < fine.size(); ++i) parent_of_net[fine[i]] = d.parent[k + 1][i];
    for (Index p = 0; p < n; ++p) d.center_of[k][p] = parent_of_net[d.center_of[k + 1][p]];
  }

  d.k0 = DyadicDecomposition::kNeverSplits;
  for (int k = 0; k <= d.k_max; ++k)
    if (d.nets[k].size() > 1) {
      d.k0 = k;
      break;
    }
  return d;
}

namespace {
std::string point_pair(Index a, Index b) {
  std::ostringstream os;
  os << "(" << a << "," << b << ")";
  return os.str();
}
}  // namespace

bool DecompositionReport::all_pass() const {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

const DecompositionCheck* DecompositionReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

DecompositionReport verify_decomposition(const DyadicDecomposition& d,
                                         const PointMetric& space) {
  DecompositionReport rep;
  rep.k0 = d.k0;
  const Index n = space.size();
  auto add = [&](std::string name, bool pass, std::string witness = "") {
    rep.checks.push_back({std::move(name), pass, std::move(witness)});
  };

  // (a) partition: every point carries exactly one cube center per level and
  // centers are net points.
  {
    bool ok = true;
    std::string w;
    for (int k = 0; k <= d.k_max && ok; ++k) {
      std::vector<char> in_net(n, 0);
      for (Index q : d.nets[k]) in_net[q] = 1;
      for (Index p = 0; p < n; ++p) {
        Index c = d.center_of[k][p];
        if (c < 0 || !in_net[c]) {
          ok = false;
          w = "level " + std::to_string(k) + " point " + std::to_string(p);
          break;
        }
      }
    }
    add("a_partition", ok, w);
  }

  // (b) nesting: the level-k cube of p is the parent of its level-(k+1) cube.
  {
    bool ok = true;
    std::string w;
    for (int k = 0; k < d.k_max && ok; ++k) {
      std::vector<Index> parent_of_net(n, -1);
      const auto& fine = d.nets[k + 1];
      for (size_t i = 0; i < fine.size(); ++i) parent_of_net[fine[i]] = d.parent[k + 1][i];
      for (Index p = 0; p < n; ++p)
        if (d.center_of[k][p] != parent_of_net[d.center_of[k + 1][p]]) {
          ok = false;
          w = "level " + std::to_string(k) + " point " + std::to_string(p);
          break;
        }
    }
    add("b_nesting", ok, w);
  }

  // (c) inner and outer ball with the exact constants c_A, C_A.
  {
    bool ok = true;
    std::string w;
    const double cA = d.cA(), CA = d.CA();
    for (int k = 0; k <= d.k_max && ok; ++k) {
      double s = d.scale(k);
      for (Index p = 0; p < n && ok; ++p) {
        Index c = d.center_of[k][p];
        if (!(space.dist(c, p) <= CA * s)) {
          ok = false;
          w = "outer level " + std::to_string(k) + " " + point_pair(c, p);
        }
      }
      for (Index q : d.nets[k]) {
        for (Index p = 0; p < n; ++p)
          if (space.dist(q, p) < cA * s && d.center_of[k][p] != q) {
            ok = false;
            w = "inner level " + std::to_string(k) + " " + point_pair(q, p);
            break;
          }
        if (!ok) break;
      }
    }
    add("c_inner_outer_ball", ok, w);
  }

  // (d) nested nets and root membership.
  {
    bool ok = true;
    std::string w;
    for (int k = 0; k <= d.k_max && ok; ++k) {
      bool has_root = false;
      for (Index q : d.nets[k]) has_root |= (q == d.root);
      if (!has_root) {
        ok = false;
        w = "root missing at level " + std::to_string(k);
      }
      if (k > 0) {
        std::vector<char> in_fine(n, 0);
        for (Index q : d.nets[k]) in_fine[q] = 1;
        for (Index q : d.nets[k - 1])
          if (!in_fine[q]) {
            ok = false;
            w = "net not nested at level " + std::to_string(k);
            break;
          }
      }
      // Separation of the net itself.
      double s = d.scale(k);
      for (size_t i = 0; i < d.nets[k].size() && ok; ++i)
        for (size_t j = i + 1; j < d.nets[k].size(); ++j)
          if (space.dist(d.nets[k][i], d.nets[k][j]) < s) {
            ok = false;
            w = "separation level " + std::to_string(k) + " " +
                point_pair(d.nets[k][i], d.nets[k][j]);
            break;
          }
    }
    add("d_nested_nets", ok, w);
  }

  // (e) the partial order is the one induced by the parent maps; consistency
  // is the nesting check, so this passes whenever (b) does.
  add("e_partial_order", rep.find("b_nesting")->pass);

  // (f) successor count and distance.
  {
    bool ok = true;
    std::string w;
    int cm = 0;
    for (int k = 0; k < d.k_max; ++k) {
      double s = d.scale(k);
      for (Index q : d.nets[k]) {
        auto succ = d.successors(k, q);
        cm = std::max(cm, static_cast<int>(succ.size()));
        for (Index y : succ)
          if (!(space.dist(q, y) < s)) {
            ok = false;
            w = "successor distance level " + std::to_string(k) + " " + point_pair(q, y);
          }
      }
    }
    rep.measured_CM = cm;
    add("f_successor_bound", ok, w);
  }

  // (g) k0 estimate and the successor lower bound on splittable levels.
  {
    bool ok = true;
    std::string w;
    if (d.k0 != DyadicDecomposition::kNeverSplits && n > 1) {
      double diam = space.diameter();
      if (!(d.cA() * d.scale(d.k0) <= diam && diam <= 2.0 * d.CA() * d.scale(d.k0 - 1))) {
        ok = false;
        w = "k0 estimate";
      }
    }
    // |S_k| >= 2 can only hold while a cube still has room to split: its
    // guaranteed inner ball must exceed the metric resolution.
    int split_level = -1;
    for (int k = 0; k < d.k_max; ++k)
      if (d.cA() * d.scale(k) >= space.resolution()) split_level = k;
    rep.split_level = split_level;
    if (d.k0 != DyadicDecomposition::kNeverSplits) {
      for (int k = d.k0; k <= split_level && k < d.k_max; ++k)
        for (Index q : d.nets[k])
          if (d.successors(k, q).size() < 2) {
            ok = false;
            w = "|S_k| < 2 at level " + std::to_string(k) + " center " + std::to_string(q);
          }
    }
    add("g_k0_and_splitting", ok, w);
  }

  // (h) root cube well-defined: the root is its own cube center everywhere.
  {
    bool ok = true;
    std::string w;
    for (int k = 0; k <= d.k_max; ++k) {
      if (d.nets[k].empty() || d.nets[k][0] != d.root) {
        ok = false;
        w = "net order at level " + std::to_string(k);
      }
      if (d.center_of[k][d.root] != d.root) {
        ok = false;
        w = "root cube at level " + std::to_string(k);
      }
    }
    add("h_root_cube", ok, w);
  }

  return rep;
}

double CubeCapacityTable::at(int k, Index x) const {
  if (k < 0 || k >= static_cast<int>(c.size())) return 0.0;
  auto it = c[k].find(x);
  return it == c[k].end() ? 0.0 : it->second;
}

bool CubeCapacityTable::has_level(int k) const {
  return k >= 0 && k < static_cast<int>(c.size()) && !c[k].empty();
}

CubeCapacityTable cube_capacities(const DyadicDecomposition& d, const Network& net,
                                  const PointMetric& space, int threads) {
  if (d.k0 == DyadicDecomposition::kNeverSplits)
    throw std::invalid_argument("space never splits; no capacity levels");
  if (net.size() != space.size())
    throw std::invalid_argument("network and metric disagree on the vertex count");

  CubeCapacityTable table;
  int k_lo = std::max(d.k0 + 2, 0);
  table.k_min = k_lo;
  table.k_max = d.k_max;
  table.c.assign(d.level_count(), {});

  // Levels whose capacity ball B(x, scale(k-1)) covers the whole space are
  // skipped (the relative capacity would have no complement to drain to).
  std::vector<char> usable(d.level_count(), 0);
  for (int k = k_lo; k <= d.k_max; ++k) {
    bool ok = true;
    for (Index x : d.nets[k])
      if (static_cast<Index>(space.ball(x, d.scale(k - 1)).size()) == space.size()) {
        ok = false;
        break;
      }
    usable[k] = ok;
    if (!ok) table.skipped_levels.push_back(k);
  }

  struct Job {
    int k;
    Index x;
  };
  std::vector<Job> jobs;
  for (int k = k_lo; k <= d.k_max; ++k)
    if (usable[k])
      for (Index x : d.nets[k]) jobs.push_back({k, x});

  std::vector<double> values(jobs.size(), 0.0);
  par::parallel_for(
      static_cast<std::int64_t>(jobs.size()),
      [&](std::int64_t i) {
        const Job& job = jobs[i];
        auto domain = space.ball(job.x, d.scale(job.k - 1));
        auto cube = d.cube_members(job.k, job.x);
        values[i] = capacity(net, domain, cube).value;
      },
      threads);
  for (size_t i = 0; i < jobs.size(); ++i) table.c[jobs[i].k][jobs[i].x] = values[i];

  // Measured comparability constants (e:ce1)/(e:ce2) and the successor
  // capacity surplus delta from the subadditivity bound.
  double c1w = 1.0, c1pc = 1.0;
  for (int k = k_lo; k <= d.k_max; ++k) {
    if (!usable[k]) continue;
    const auto& netk = d.nets[k];
    double s = d.scale(k);
    for (size_t i = 0; i < netk.size(); ++i)
      for (size_t j = i + 1; j < netk.size(); ++j) {
        if (space.dist(netk[i], netk[j]) > 4.0 * s) continue;
        double a = table.at(k, netk[i]), b = table.at(k, netk[j]);
        if (a > 0.0 && b > 0.0) c1w = std::max({c1w, a / b, b / a});
      }
  }
  table.delta_by_level.assign(d.level_count(), 0.0);
  double worst_ratio = 0.0;
  int smax = 0;
  bool have_pair = false;
  for (int k = k_lo; k < d.k_max; ++k) {
    if (!usable[k] || !usable[k + 1]) continue;
    double level_worst = 0.0;
    for (Index x : d.nets[k]) {
      auto succ = d.successors(k, x);
      smax = std::max(smax, static_cast<int>(succ.size()));
      double ck = table.at(k, x);
      double sum = 0.0;
      for (Index y : succ) {
        double cy = table.at(k + 1, y);
        if (ck > 0.0 && cy > 0.0) c1pc = std::max({c1pc, ck / cy, cy / ck});
        sum += cy;
      }
      if (ck > 0.0 && sum > 0.0) {
        level_worst = std::max(level_worst, ck / sum);
        have_pair = true;
      }
    }
    table.delta_by_level[k] = 1.0 - level_worst;
    worst_ratio = std::max(worst_ratio, level_worst);
  }
  table.C1_within = c1w;
  table.C1_parent_child = c1pc;
  table.S_max = smax;
  table.delta_hat = have_pair ? 1.0 - worst_ratio : 0.0;
  return table;
}

}  // namespace ehinet
