#pragma once

#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "hdxgeo/rng.hpp"

namespace hdxgeo {

// Distribution of a single coordinate of a uniform point on the unit sphere
// in R^d: density psi_d(x) = Z_d * (1 - x^2)^((d-3)/2) on [-1, 1], with
// Z_d = Gamma(d/2) / (Gamma((d-1)/2) * sqrt(pi)).  All tail mass is computed
// by adaptive quadrature after the substitution x = sin(theta), which turns
// the integrand into Z_d * cos(theta)^(d-2) and removes the d = 2 endpoint
// singularity.  Values are accumulated in log space and exponentiated last.

using UnitVector = Eigen::VectorXd;

// Unit-norm check used by samplers and graph builders.
bool is_unit(const UnitVector& v, double tol = 1e-12);

struct BetaDist {
  int d;          // ambient dimension, d >= 2
  double log_z;   // log Z_d
  explicit BetaDist(int d);
};

double log_beta_normalizer(int d);

// psi_d(x).  Domain error for |x| > 1.  For d = 2 the density diverges at
// the endpoints; +infinity is returned there.
double beta_density(int d, double x);

// log of the upper tail  Phibar_d(t) = integral_t^1 psi_d.  Domain error for
// |t| > 1.  Relative accuracy of the linear-scale tail is ~1e-12 down to
// values around 1e-290.
double log_beta_tail(int d, double t);
double beta_tail(int d, double t);

// Closed-form sandwich for the tail at t > 0:
//   upper = Z_d / (t (d-1)) * (1 - t^2)^((d-1)/2)
//   lower = upper * (1 - 4 log(1 + d t^2) / (d t^2))
// The lower bound is only positive once d t^2 is large enough; callers gate
// on sandwich_lower > 0.
double sandwich_upper(int d, double t);
double sandwich_lower(int d, double t);

struct TauResult {
  double tau = 1.0;
  bool degenerate = false;  // set when p == 0 and tau = 1 is returned
};

// Inverse of beta_tail in t: finds tau with Phibar_d(tau) = p by bisection
// to 1e-13 in tau (giving |Phibar(tau) - p| well under 1e-10 for the d
// range this library targets).  p = 0.5 returns exactly 0, p = 1 returns
// -1, p = 0 returns 1 with the degenerate flag set.  Domain error for
// p outside [0, 1].
TauResult tau_of(double p, int d);

// T(x, y) = (tau - x y) / sqrt((1 - x^2)(1 - y^2)) for x, y in [tau, 1).
// Singular-input error when x or y equals 1; invalid argument when x or y
// lies outside [tau, 1) or tau is outside (0, 1).
double shifted_threshold(double x, double y, double tau);

struct CapSpec {
  int d = 0;
  double p = 0.0;    // normalized cap measure
  double tau = 1.0;  // cap height: cap = { v : <v, center> >= tau }
  bool degenerate = false;
};

// Construct a cap from its measure (tau solved by tau_of) or from its
// height (p computed by beta_tail).  Round-tripping p -> tau -> p is
// accurate to ~1e-10.
CapSpec cap_from_p(int d, double p);
CapSpec cap_from_tau(int d, double tau);

// Uniform point on the unit sphere in R^d (Gaussian vector, normalized).
// d = 1 gives +-1.  Invalid-dimension error for d < 1.
UnitVector sample_uniform_sphere(int d, RandomStream& rng);

// Uniform point of the sphere orthogonal to center (itself a unit vector).
UnitVector sample_orthogonal(const UnitVector& center, RandomStream& rng);

// Uniform point of the cap around center: the coordinate along center is
// drawn by inverse-CDF sampling of psi_d restricted to [tau, 1], the
// orthogonal part is uniform on the equatorial sphere.  Empty-cap error
// when cap.p == 0.
UnitVector sample_cap(const CapSpec& cap, const UnitVector& center,
                      RandomStream& rng);

// Uniform point of the shell { v : <v, center> = tau }: tau * center plus
// sqrt(1 - tau^2) times a uniform orthogonal direction.
UnitVector sample_shell(const UnitVector& center, double tau,
                        RandomStream& rng);

// Cubic-Hermite interpolant of t -> log Phibar_d(t) on [t_min, t_max],
// built from quadrature values and the exact derivative -psi/Phibar at the
// nodes.  Max observed log-error against direct quadrature is recorded at
// build time (self_check_error); the node spacing targets 1e-9.  This is a
// performance cache in front of log_beta_tail, not a second definition of
// the tail: every node comes from the quadrature.
class TailInterpolant {
 public:
  TailInterpolant(int d, double t_min, double t_max, int nodes_hint = 0);

  int dim() const { return d_; }
  double t_min() const { return t_min_; }
  double t_max() const { return t_max_; }
  double self_check_error() const { return self_check_error_; }

  double log_tail(double t) const;
  double tail(double t) const { return std::exp(log_tail(t)); }

  // Inverse on the interpolant: t with log Phibar(t) = log_p, bisected to
  // 1e-13.  Requires log_p within the tabulated range.
  double invert_log(double log_p) const;

 private:
  int d_;
  double t_min_, t_max_, h_;
  std::vector<double> val_;    // log tail at nodes
  std::vector<double> deriv_;  // d/dt log tail at nodes
  double self_check_error_ = 0.0;
};

// Inverse-CDF cap sampler backed by a TailInterpolant over the cap range.
// Draws match sample_cap's law up to the interpolant error (~1e-9 in the
// kappa coordinate); intended for Monte Carlo loops where millions of cap
// draws are needed.
class CapSampler {
 public:
  CapSampler(const CapSpec& cap);

  const CapSpec& spec() const { return cap_; }

  // Coordinate along the cap center.
  double sample_kappa(RandomStream& rng) const;

  UnitVector sample(const UnitVector& center, RandomStream& rng) const;

 private:
  CapSpec cap_;
  TailInterpolant interp_;
  double log_p_;
};

}  // namespace hdxgeo
