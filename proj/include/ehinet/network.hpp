#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <memory>
#include <vector>

#include "ehinet/point_metric.hpp"

namespace ehinet {

struct Edge {
  Index u = 0, v = 0;
  double c = 1.0;  // conductance, > 0
};

/// Weighted graph carrying the Dirichlet form
///   E(f,f) = 1/2 sum_x sum_y c_xy (f(x)-f(y))^2
/// and a strictly positive vertex measure. Connected by construction.
class Network {
 public:
  static Network create(Index n, std::vector<Edge> edges, Eigen::VectorXd measure);

  Index size() const { return n_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const Eigen::VectorXd& measure() const { return measure_; }
  const std::vector<std::pair<Index, double>>& neighbors(Index v) const { return adj_[v]; }
  double degree(Index v) const { return degree_[v]; }  // sum of incident conductances

  double energy(const Eigen::VectorXd& f) const;
  double energy_bilinear(const Eigen::VectorXd& f, const Eigen::VectorXd& g) const;
  /// Per-vertex energy measure mu_<f>(x) = sum_y c_xy (f(x)-f(y))^2.
  Eigen::VectorXd energy_measure(const Eigen::VectorXd& f) const;

  /// Same conductances, new vertex measure (must be strictly positive).
  Network time_change(Eigen::VectorXd new_measure) const;

 private:
  Index n_ = 0;
  std::vector<Edge> edges_;
  Eigen::VectorXd measure_;
  std::vector<std::vector<std::pair<Index, double>>> adj_;
  std::vector<double> degree_;
};

/// Exterior boundary: vertices outside S with a neighbor in S.
std::vector<Index> boundary_of(const Network& net, const std::vector<Index>& S);
/// Inner boundary: vertices of S with a neighbor outside S.
std::vector<Index> inner_boundary(const Network& net, const std::vector<Index>& S);

/// Killed Laplacian K_D = (diag(sum_y c_xy) - [c_xy]) restricted to D.
/// Factorized once; right-hand sides may then be solved independently.
/// Direct sparse Cholesky up to |D| = 5e4, Jacobi-preconditioned CG above.
class DomainSolver {
 public:
  DomainSolver(const Network& net, std::vector<Index> domain);
  const std::vector<Index>& domain() const { return domain_; }
  Index local(Index v) const { return v >= 0 && v < static_cast<Index>(local_.size()) ? local_[v] : -1; }
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;  // rhs indexed by domain order

 private:
  std::vector<Index> domain_;
  std::vector<Index> local_;
  Eigen::SparseMatrix<double> K_;
  std::shared_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> ldlt_;
  bool use_cg_ = false;
};

/// Green function of the killed form on D (measure-independent).
struct GreenTable {
  std::vector<Index> domain;      // sorted
  Eigen::MatrixXd g;              // |D| x |D|, g(i,j) indexed by domain order
  double at(Index x, Index y) const;  // 0 for arguments outside the domain
};

/// Full Green matrix (one solve per column). Requires nonempty complement.
GreenTable green_table(const Network& net, const std::vector<Index>& D);
/// Single Green column g_D(., y) over the domain order of `solver`.
Eigen::VectorXd green_column(const DomainSolver& solver, Index y);

/// Solution of the discrete Dirichlet problem: h = boundary_values on D^c,
/// weighted-Laplacian-harmonic on D. boundary_values is full-length; entries
/// on D are ignored. Throws "recurrent domain" when D^c is empty.
Eigen::VectorXd harmonic_extend(const Network& net, const std::vector<Index>& D,
                                const Eigen::VectorXd& boundary_values);

struct CapacityResult {
  double value = 0.0;                 // Cap_D(A)
  Eigen::VectorXd potential;          // equilibrium potential, full length
  std::vector<Index> support;         // A, sorted
  Eigen::VectorXd eq_measure;         // boundary flux on A (same order as support)
  double eq_mass() const { return eq_measure.sum(); }
};

/// Relative capacity Cap_D(A) = inf { E(f,f) : f = 1 on A, f = 0 outside D }.
/// The minimizer is harmonic on D \ A; value equals the equilibrium measure
/// mass.
CapacityResult capacity(const Network& net, const std::vector<Index>& D,
                        const std::vector<Index>& A);

struct HarmonicMeasure {
  std::vector<Index> domain;    // sorted
  std::vector<Index> boundary;  // exterior boundary of D, sorted
  Eigen::MatrixXd omega;        // |D| x |boundary|, rows sum to 1
};

/// Exit distribution omega(x, z) = P^x(X exits D through z).
HarmonicMeasure harmonic_measure(const Network& net, const std::vector<Index>& D);

/// u(x) = sum_y g_D(x,y) m(y), i.e. K_D u = m|_D. Mean exit time.
Eigen::VectorXd exit_time(const Network& net, const std::vector<Index>& D);

/// P^x(hit `target` before exiting B); full-length vector, 1 on target,
/// 0 outside B. Requires target inside B.
Eigen::VectorXd hitting_probability(const Network& net, const std::vector<Index>& B,
                                    const std::vector<Index>& target);

/// Effective resistance between two vertices (whole network).
double effective_resistance(const Network& net, Index a, Index b);

}  // namespace ehinet
