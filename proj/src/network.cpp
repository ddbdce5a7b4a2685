#include "ehinet/network.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

namespace ehinet {

namespace {
std::vector<Index> sorted_unique(std::vector<Index> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}
}  // namespace

Network Network::create(Index n, std::vector<Edge> edges, Eigen::VectorXd measure) {
  Network net;
  if (n <= 0) throw std::invalid_argument("network needs at least one vertex");
  if (measure.size() != n) throw std::invalid_argument("measure length mismatch");
  for (Index v = 0; v < n; ++v)
    if (!(measure[v] > 0.0)) throw std::invalid_argument("vertex measure must be strictly positive");
  net.n_ = n;
  net.adj_.assign(n, {});
  net.degree_.assign(n, 0.0);
  for (const Edge& e : edges) {
    if (e.u < 0 || e.u >= n || e.v < 0 || e.v >= n || e.u == e.v)
      throw std::invalid_argument("bad edge endpoints");
    if (!(e.c > 0.0)) throw std::invalid_argument("conductance must be positive");
    net.adj_[e.u].emplace_back(e.v, e.c);
    net.adj_[e.v].emplace_back(e.u, e.c);
    net.degree_[e.u] += e.c;
    net.degree_[e.v] += e.c;
  }
  net.edges_ = std::move(edges);
  net.measure_ = std::move(measure);

  if (n > 1) {
    std::vector<char> seen(n, 0);
    std::deque<Index> q{0};
    seen[0] = 1;
    Index count = 1;
    while (!q.empty()) {
      Index u = q.front();
      q.pop_front();
      for (auto& [v, c] : net.adj_[u])
        if (!seen[v]) {
          seen[v] = 1;
          ++count;
          q.push_back(v);
        }
    }
    if (count != n) throw std::invalid_argument("network is not connected");
  }
  return net;
}

double Network::energy(const Eigen::VectorXd& f) const {
  double e = 0.0;
  for (const Edge& ed : edges_) {
    double d = f[ed.u] - f[ed.v];
    e += ed.c * d * d;
  }
  return e;
}

double Network::energy_bilinear(const Eigen::VectorXd& f, const Eigen::VectorXd& g) const {
  double e = 0.0;
  for (const Edge& ed : edges_) e += ed.c * (f[ed.u] - f[ed.v]) * (g[ed.u] - g[ed.v]);
  return e;
}

Eigen::VectorXd Network::energy_measure(const Eigen::VectorXd& f) const {
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(n_);
  for (const Edge& ed : edges_) {
    double d = f[ed.u] - f[ed.v];
    mu[ed.u] += ed.c * d * d;
    mu[ed.v] += ed.c * d * d;
  }
  return mu;
}

Network Network::time_change(Eigen::VectorXd new_measure) const {
  return Network::create(n_, edges_, std::move(new_measure));
}

std::vector<Index> boundary_of(const Network& net, const std::vector<Index>& S) {
  std::vector<char> in(net.size(), 0);
  for (Index v : S) in[v] = 1;
  std::vector<Index> out;
  for (Index v = 0; v < net.size(); ++v) {
    if (in[v]) continue;
    for (auto& [w, c] : net.neighbors(v))
      if (in[w]) {
        out.push_back(v);
        break;
      }
  }
  return out;
}

std::vector<Index> inner_boundary(const Network& net, const std::vector<Index>& S) {
  std::vector<char> in(net.size(), 0);
  for (Index v : S) in[v] = 1;
  std::vector<Index> out;
  for (Index v : sorted_unique(S)) {
    for (auto& [w, c] : net.neighbors(v))
      if (!in[w]) {
        out.push_back(v);
        break;
      }
  }
  return out;
}

DomainSolver::DomainSolver(const Network& net, std::vector<Index> domain) {
  domain_ = sorted_unique(std::move(domain));
  if (static_cast<Index>(domain_.size()) >= net.size())
    throw std::invalid_argument("recurrent domain: complement is empty");
  local_.assign(net.size(), -1);
  for (Index i = 0; i < static_cast<Index>(domain_.size()); ++i) local_[domain_[i]] = i;

  const Index nd = static_cast<Index>(domain_.size());
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(domain_.size() * 4);
  for (Index i = 0; i < nd; ++i) {
    Index v = domain_[i];
    trip.emplace_back(i, i, net.degree(v));
    for (auto& [w, c] : net.neighbors(v)) {
      Index j = local_[w];
      if (j >= 0) trip.emplace_back(i, j, -c);
    }
  }
  K_.resize(nd, nd);
  K_.setFromTriplets(trip.begin(), trip.end());
  use_cg_ = nd > 50000;
  if (!use_cg_) {
    ldlt_ = std::make_shared<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>();
    ldlt_->compute(K_);
    if (ldlt_->info() != Eigen::Success)
      throw std::runtime_error("killed Laplacian factorization failed");
  }
}

Eigen::VectorXd DomainSolver::solve(const Eigen::VectorXd& rhs) const {
  if (rhs.size() != static_cast<Eigen::Index>(domain_.size()))
    throw std::invalid_argument("rhs length mismatch");
  if (domain_.empty()) return Eigen::VectorXd();
  if (use_cg_) {
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                             Eigen::DiagonalPreconditioner<double>>
        cg;
    cg.setTolerance(1e-12);
    cg.compute(K_);
    return cg.solve(rhs);
  }
  return ldlt_->solve(rhs);
}

double GreenTable::at(Index x, Index y) const {
  auto find = [&](Index v) -> Index {
    auto it = std::lower_bound(domain.begin(), domain.end(), v);
    if (it == domain.end() || *it != v) return -1;
    return static_cast<Index>(it - domain.begin());
  };
  Index i = find(x), j = find(y);
  if (i < 0 || j < 0) return 0.0;
  return g(i, j);
}

GreenTable green_table(const Network& net, const std::vector<Index>& D) {
  DomainSolver solver(net, D);
  const Index nd = static_cast<Index>(solver.domain().size());
  GreenTable table;
  table.domain = solver.domain();
  table.g.resize(nd, nd);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(nd);
  for (Index j = 0; j < nd; ++j) {
    e[j] = 1.0;
    table.g.col(j) = solver.solve(e);
    e[j] = 0.0;
  }
  return table;
}

Eigen::VectorXd green_column(const DomainSolver& solver, Index y) {
  Index j = solver.local(y);
  if (j < 0) throw std::invalid_argument("green_column: target outside domain");
  Eigen::VectorXd e = Eigen::VectorXd::Zero(solver.domain().size());
  e[j] = 1.0;
  return solver.solve(e);
}

Eigen::VectorXd harmonic_extend(const Network& net, const std::vector<Index>& D,
                                const Eigen::VectorXd& boundary_values) {
  if (boundary_values.size() != net.size())
    throw std::invalid_argument("boundary values must be full-length");
  DomainSolver solver(net, D);
  const auto& dom = solver.domain();
  Eigen::VectorXd h = boundary_values;
  if (dom.empty()) return h;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dom.size());
  for (size_t i = 0; i < dom.size(); ++i) {
    for (auto& [w, c] : net.neighbors(dom[i]))
      if (solver.local(w) < 0) rhs[i] += c * boundary_values[w];
  }
  Eigen::VectorXd u = solver.solve(rhs);
  for (size_t i = 0; i < dom.size(); ++i) h[dom[i]] = u[i];
  return h;
}

CapacityResult capacity(const Network& net, const std::vector<Index>& Din,
                        const std::vector<Index>& Ain) {
  auto D = sorted_unique(Din);
  auto A = sorted_unique(Ain);
  if (static_cast<Index>(D.size()) >= net.size())
    throw std::invalid_argument("recurrent domain: complement is empty");
  if (!std::includes(D.begin(), D.end(), A.begin(), A.end()))
    throw std::invalid_argument("capacity target not contained in domain");
  if (A.empty()) throw std::invalid_argument("capacity target is empty");

  std::vector<char> inD(net.size(), 0), inA(net.size(), 0);
  for (Index v : D) inD[v] = 1;
  for (Index v : A) inA[v] = 1;

  std::vector<Index> free;  // D \ A
  for (Index v : D)
    if (!inA[v]) free.push_back(v);

  Eigen::VectorXd f = Eigen::VectorXd::Zero(net.size());
  for (Index v : A) f[v] = 1.0;
  if (!free.empty()) {
    // harmonic on D \ A with data 1 on A, 0 on D^c
    f = harmonic_extend(net, free, f);
    for (Index v = 0; v < net.size(); ++v)
      if (!inD[v]) f[v] = 0.0;  // ensure exact zeros outside D
    for (Index v : A) f[v] = 1.0;
  }

  CapacityResult res;
  res.potential = f;
  res.support = A;
  res.eq_measure.resize(A.size());
  for (size_t i = 0; i < A.size(); ++i) {
    double flux = 0.0;
    for (auto& [w, c] : net.neighbors(A[i])) flux += c * (f[A[i]] - f[w]);
    res.eq_measure[i] = flux;
  }
  res.value = net.energy(f);
  return res;
}

HarmonicMeasure harmonic_measure(const Network& net, const std::vector<Index>& D) {
  DomainSolver solver(net, D);
  HarmonicMeasure hm;
  hm.domain = solver.domain();
  hm.boundary = boundary_of(net, hm.domain);
  const Index nd = static_cast<Index>(hm.domain.size());
  const Index nb = static_cast<Index>(hm.boundary.size());
  hm.omega.resize(nd, nb);
  for (Index j = 0; j < nb; ++j) {
    Index z = hm.boundary[j];
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nd);
    for (auto& [w, c] : net.neighbors(z)) {
      Index i = solver.local(w);
      if (i >= 0) rhs[i] += c;
    }
    hm.omega.col(j) = solver.solve(rhs);
  }
  return hm;
}

Eigen::VectorXd exit_time(const Network& net, const std::vector<Index>& D) {
  DomainSolver solver(net, D);
  Eigen::VectorXd rhs(solver.domain().size());
  for (size_t i = 0; i < solver.domain().size(); ++i) rhs[i] = net.measure()[solver.domain()[i]];
  return solver.solve(rhs);
}

Eigen::VectorXd hitting_probability(const Network& net, const std::vector<Index>& Bin,
                                    const std::vector<Index>& target) {
  auto B = sorted_unique(Bin);
  auto T = sorted_unique(target);
  if (!std::includes(B.begin(), B.end(), T.begin(), T.end()))
    throw std::invalid_argument("hitting target must lie inside B");
  std::vector<char> inB(net.size(), 0), inT(net.size(), 0);
  for (Index v : B) inB[v] = 1;
  for (Index v : T) inT[v] = 1;
  std::vector<Index> free;
  for (Index v : B)
    if (!inT[v]) free.push_back(v);
  Eigen::VectorXd data = Eigen::VectorXd::Zero(net.size());
  for (Index v : T) data[v] = 1.0;
  if (free.empty()) return data;
  Eigen::VectorXd h = harmonic_extend(net, free, data);
  for (Index v = 0; v < net.size(); ++v)
    if (!inB[v]) h[v] = 0.0;
  return h;
}

double effective_resistance(const Network& net, Index a, Index b) {
  if (a == b) return 0.0;
  std::vector<Index> D;
  for (Index v = 0; v < net.size(); ++v)
    if (v != b) D.push_back(v);
  CapacityResult cap = capacity(net, D, {a});
  return 1.0 / cap.value;
}

}  // namespace ehinet
