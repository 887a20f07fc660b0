#pragma once

#include <vector>

#include <Eigen/Core>

#include "hdxgeo/graph.hpp"
#include "hdxgeo/spectral.hpp"
#include "hdxgeo/sphere.hpp"

namespace hdxgeo {

// Probability that two cap points at heights kappa_i, kappa_j are adjacent,
// i.e. the tail of the one-lower-dimensional coordinate law at the shifted
// threshold T(kappa_i, kappa_j).  A threshold at or below -1 means the
// edge is forced (probability 1).  kappa = 1 is a singular input.
double conditional_edge_prob(double kappa_i, double kappa_j, double tau,
                             int d);

struct ShellVector {
  int d = 0;
  double tau = 0.0;
  Eigen::VectorXd kappas;  // each in [tau, 1)
};

// m i.i.d. draws of the center-coordinate of a uniform cap point
// (inverse-CDF through the tail interpolant).
ShellVector sample_shells(int m, double tau, int d, RandomStream& rng);

struct ShellMatrices {
  int d = 0;
  double tau = 0.0;
  Eigen::VectorXd kappas;
  Eigen::MatrixXd q;       // Q[i,j] = conditional edge probability, 0 diag
  Eigen::VectorXd degree;  // row sums of Q
  Eigen::MatrixXd qbar;    // D^{-1} Q, row-stochastic
  Eigen::VectorXd pi;      // degree / sum(degree): stationary for qbar
};

// Assembles the expected-adjacency matrices for a shell vector.  Dense
// storage; m is capped at 12000 to keep the footprint sane.
ShellMatrices build_shell_matrices(const ShellVector& shells);

struct ShellClassification {
  double gamma = 0.0;
  double eta = 0.0;    // high quantile of the shell law at level m^(-2g-1)p
  double alpha = 0.0;  // typicality width: 36 log d / (tau^2 (d-3)(1-eta))
  double cutoff = 0.0;  // tau * (1 + alpha)
  std::vector<int> typical, outliers;
  std::vector<bool> is_typical;
  bool all_below_eta = false;  // the event the analysis conditions on
};

// Splits shells into typical (kappa <= tau(1+alpha)) and outliers.
// Requires d > 3; an eta pinned against 1 (underflowing tail) raises a
// degenerate-eta error.
ShellClassification classify_shells(const ShellVector& shells,
                                    double gamma = 1.0);

struct ShellSpectralResult {
  double lambda_max_deflated = 0.0;  // |lambda|_max(Qbar - 1 pi^T)
  double threshold = 0.0;            // slack * log(d) / sqrt(d)
  bool pass = false;
  SpectralReport detail;
};

// Spectral radius of Qbar - 1 pi^T through the symmetrized form
// D^{-1/2} Q D^{-1/2} with its known top eigenpair deflated.  Dense
// eigensolve up to m = 512, certified iterative above.
ShellSpectralResult shell_spectral_check(const ShellMatrices& mats,
                                         double slack = 3.0);

struct RowSimilarityResult {
  double max_typical_l1 = 0.0;     // max typical-pair ||Qbar_i - Qbar_j||_1
  double max_typical_l1_sq = 0.0;  // same for Qbar^2 rows
  double outlier_mass_max = 0.0;   // max_i sum over outlier columns of Qbar
  double threshold_l1 = 0.0;       // c * log(d)^2 / d
  double threshold_mass = 0.0;     // c_mass / d
  bool pass_l1 = false;
  bool pass_l1_sq = false;
  bool pass_mass = false;
};

// Exact pairwise row comparisons over the typical indices, plus the
// outlier column mass of every row whose shell sits below eta.
RowSimilarityResult row_similarity_check(const ShellMatrices& mats,
                                         const ShellClassification& cls,
                                         double c_l1 = 3.0,
                                         double c_mass = 3.0);

struct OutlierRatio {
  double log_numerator = 0.0;    // -inf when the outlier region is empty
  double log_denominator = 0.0;
  double ratio = 0.0;            // exp of the log difference
  bool underflow = false;        // both integrals below the exp range
};

// N(x)/D(x): both integrals run the density-times-edge-probability
// integrand in log space, N over [tau(1+alpha), 1], D over [tau, 1].
// Relative quadrature error <= 1e-6.
OutlierRatio outlier_ratio_quadrature(double x, double tau, int d,
                                      double alpha);

struct RatioClaims {
  double t_ratio = 0.0;           // T(kj,kl) T(ki,tau) / (T(ki,kl) T(kj,tau))
  double t_ratio_rational = 0.0;  // same after cancellation:
                                  // (tau-kj*kl)(1-ki) / ((tau-ki*kl)(1-kj))
  double t_deviation = 0.0;       // |t_ratio - 1|
  double ab_ratio = 0.0;          // A/B with A,B the 1-T^2 products
  double ab_deviation = 0.0;      // |ab_ratio - 1|
};

// The two ratio identities behind the typical-row comparison, evaluated
// directly.  Callers compare the deviations against c * alpha^2.
RatioClaims ratio_claims_check(double kappa_i, double kappa_j,
                               double kappa_l, double tau);

// Conditional link sample: u_i uniform on the sphere in R^(d-1), edge
// (i,j) present iff <u_i, u_j> >= T(kappa_i, kappa_j).  Unit weights;
// vertices with no edges stay isolated.
WeightedGraph sample_link_conditional(const ShellVector& shells,
                                      RandomStream& rng);

struct DegreeConcentration {
  double max_ratio = 0.0;  // max_i expected degree / realized degree
  int argmax = -1;
  bool zero_degree = false;  // some realized degree is 0: ratio infinite
  double alpha = 0.0;        // the deviation parameter of the check
  double bound = 0.0;        // 1 / (1 - alpha)
  double predicted_failure = 0.0;  // m exp(-alpha^2 q (m-1) / 4)
  bool within_bound = false;
};

// Ratio of conditional expected degree to realized link degree per vertex.
DegreeConcentration degree_concentration_check(const WeightedGraph& link,
                                               const ShellMatrices& mats,
                                               double alpha);

}  // namespace hdxgeo
