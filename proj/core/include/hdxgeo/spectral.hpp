#pragma once

#include <functional>
#include <optional>

#include <Eigen/Core>

#include "hdxgeo/graph.hpp"

namespace hdxgeo {

enum class EigenMethod { dense, iterative };

struct SpectralReport {
  double top = 0.0;         // largest eigenvalue (1 for normalized adjacency)
  double second_abs = 0.0;  // largest |eigenvalue| after removing one top copy
  double bottom = 0.0;      // smallest eigenvalue
  EigenMethod method = EigenMethod::dense;
  double residual = 0.0;    // Ritz residual certificate of second_abs
  int iterations = 0;
  bool converged = true;
};

// Symmetric operator handed to the iterative solver: a matvec plus the
// dimension.  A dense matrix can be wrapped via SymOp::from_dense.
struct SymOp {
  int n = 0;
  std::function<void(const double* x, double* y)> apply;

  static SymOp from_dense(const Eigen::MatrixXd& m);
};

// D^{-1/2} A D^{-1/2} for a weighted graph.  Every vertex must have
// positive degree; a zero-degree vertex raises a degenerate-degree error
// naming the vertex.
struct NormalizedAdjacency {
  explicit NormalizedAdjacency(const WeightedGraph& g);
  // The graph is referenced, not copied; it must outlive this object.
  // Binding a temporary is a compile error.
  explicit NormalizedAdjacency(WeightedGraph&&) = delete;

  const WeightedGraph* graph;
  Eigen::VectorXd inv_sqrt_deg;
  Eigen::VectorXd top_vec;     // D^(1/2) 1, unit norm: eigenvector for 1
  Eigen::VectorXd stationary;  // pi = deg / total degree

  void apply(const double* x, double* y) const;
  Eigen::MatrixXd dense() const;
  SymOp op() const;
};

// Largest |eigenvalue| below the known top eigenpair.  method dense runs a
// full symmetric eigensolve; iterative runs Lanczos with full
// reorthogonalization on the deflated operator A - top * phi phi^T and
// certifies the returned value with a Ritz residual.  Non-convergence
// raises an error carrying the last residual.  The default picks dense for
// n <= dense_cutoff.
SpectralReport second_abs_eigenvalue(
    const NormalizedAdjacency& a,
    std::optional<EigenMethod> method = std::nullopt, double tol = 1e-10,
    int dense_cutoff = 512);

// Same solver on an arbitrary symmetric operator with a known eigenpair
// (lambda_top, phi) to deflate; phi must be unit.
SpectralReport deflated_abs_extreme(const SymOp& op, double lambda_top,
                                    const Eigen::VectorXd& phi, double tol);

// Spectral norm of (op - R) where R must be PSD of rank one; verified
// numerically, violations raise a contract error.  R == 0 gives the plain
// operator norm.
double rank1_deflated_norm(const SymOp& op, const Eigen::MatrixXd& r,
                           double tol = 1e-10);
double rank1_deflated_norm(const SymOp& op, const Eigen::VectorXd& v,
                           double scale, double tol = 1e-10);

// max_i sum_j |M_ij|; upper bound for the spectral radius.
double row_sum_bound(const Eigen::MatrixXd& m);

// Variational lower bound for the second eigenvalue of the random walk on
// g from an embedding (one row per vertex):
//   lambda_2 >= 1 - E_edge ||v_x - v_y||^2 / E_{pi x pi} ||v_x - v_y||^2
// with the edge expectation under the stationary edge measure (weights) and
// pi the stationary distribution.  A collapsed embedding (zero denominator)
// raises a degenerate-embedding error.
double rayleigh_lower_bound(const WeightedGraph& g,
                            const Eigen::MatrixXd& embedding);

// Same bound with the stationary distribution passed explicitly; it must
// match the degree distribution of the reversible chain (the only chains
// this library builds) and sum to 1.
double rayleigh_lower_bound(const WeightedGraph& g,
                            const Eigen::MatrixXd& embedding,
                            const Eigen::VectorXd& stationary);

struct TrickleDownResult {
  double bound = 0.0;   // link_max / (1 - link_max)
  double margin = 0.0;  // bound + tol - skeleton_second
  bool pass = false;
};

// Checks skeleton_second <= link_max / (1 - link_max) + tol.  link_max >= 1
// raises a vacuous-input error.
TrickleDownResult trickle_down_check(double skeleton_second, double link_max,
                                     double tol = 1e-9);

// Full spectrum (dense path), ascending.  Used by the histogram emitter.
Eigen::VectorXd dense_spectrum(const NormalizedAdjacency& a);

}  // namespace hdxgeo
