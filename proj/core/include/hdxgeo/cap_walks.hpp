#pragma once

#include <vector>

#include "hdxgeo/sphere.hpp"

namespace hdxgeo {

// One trajectory of the cap walk: from the current point, jump to a
// uniform point of the cap of measure p around it.  k = 0 returns x0.
UnitVector cap_walk(const UnitVector& x0, double p, int k, RandomStream& rng);

// Same walk with every visited point recorded (k + 1 entries).
std::vector<UnitVector> cap_walk_path(const UnitVector& x0, double p, int k,
                                      RandomStream& rng);
std::vector<UnitVector> cap_walk_path(const CapSampler& sampler,
                                      const UnitVector& x0, int k,
                                      RandomStream& rng);

struct BMPath {
  UnitVector start;
  double step_size = 0.0;
  std::vector<double> times;        // strictly increasing, starts at 0
  std::vector<UnitVector> positions;  // unit norm within 1e-9
};

// Euler-Maruyama discretization of the spherical diffusion
//   dV = sqrt(2) (I - V V^T) dB - (d-1) V dt
// with renormalization after every step.  Stability requires
// dt * (d-1) <= 0.1; larger steps raise a stability error.  t = 0 returns
// the single-point path.
BMPath brownian_sphere(const UnitVector& x0, double t, double dt,
                       RandomStream& rng);

struct BMTailRow {
  double x = 0.0;               // deviation threshold
  double empirical = 0.0;       // Pr[|<V0,Vt> - mean| >= x]
  double bound = 0.0;           // 2 exp(-(d-1)/2 * x^2 / (1 - e^{-2(d-1)t}))
  double mc_error = 0.0;        // 3 binomial standard errors
  bool ok = false;              // empirical <= bound + mc_error
};

struct BMConcentrationReport {
  int d = 0;
  double t = 0.0;
  double dt = 0.0;
  int trials = 0;
  double mean_inner = 0.0;
  double predicted_mean = 0.0;  // exp(-(d-1) t)
  double mean_ci = 0.0;         // 3 sqrt((1 - e^{-2(d-1)t}) / ((d-1) trials))
  bool mean_ok = false;
  std::vector<BMTailRow> tails;
  bool tails_ok = false;
  double ks_vs_stationary = 0.0;  // KS distance of <V0,Vt> samples vs Beta_d
  bool pass = false;              // mean_ok && tails_ok
};

// Runs `trials` independent diffusions from a fixed start, collects the
// inner products with the start, and compares mean and deviation tails
// against the closed-form concentration profile.  The mean CI and the tail
// bound both use the variance proxy (1 - e^{-2(d-1)t}) / (d-1).
BMConcentrationReport bm_concentration_check(int d, double t, double dt,
                                             int trials, int grid_points,
                                             RandomStream& rng);

struct Projected1DMeasure {
  int d = 0;
  int bin_count = 0;
  std::vector<double> weights;  // sums to 1 +- 1e-12, bins partition [-1,1]
};

// Histogram of <sample, axis> over `bins` equal-width bins of [-1,1].
// bins must be >= 10 and samples non-empty.
Projected1DMeasure project_1d(const std::vector<UnitVector>& samples,
                              const UnitVector& axis, int bins);
Projected1DMeasure project_1d(const std::vector<double>& inner_products,
                              int d, int bins);

// (1/2) sum over bins |empirical - reference| where the reference mass of
// [a,b) is Phibar_d(a) - Phibar_d(b).  In [0,1]; underestimates the true
// TV by at most the bin resolution of the reference law.
double tv_to_uniform(const Projected1DMeasure& m);

// Reference masses of the uniform law per bin, exposed for tests.
std::vector<double> uniform_bin_masses(int d, int bins);

struct DecayReport {
  double p = 0.0;
  double tau = 0.0;
  int trials = 0;
  int bins = 0;
  std::vector<double> tv;      // index k = 0..k_max
  std::vector<double> ratio;   // tv[k+1] / tv[k], size k_max
  double noise_floor = 0.0;    // self-TV of two uniform sample sets
  std::vector<int> usable;     // k with tv[k] >= 2 * noise_floor
  double slope = 0.0;          // LSQ slope of log tv over usable k
  bool sufficient_signal = false;
};

// TV to uniform of the projection onto x0 after k cap-walk steps, for
// k = 0..k_max, plus a least-squares decay fit over the ks whose TV clears
// twice the noise floor.  Fewer than two usable consecutive ks raise an
// insufficient-signal error.
DecayReport fit_decay_rate(const UnitVector& x0, double p, int k_max,
                           int trials, int bins, RandomStream& rng);

// Nonnegative, nondecreasing step density on [-1,1] relative to the
// uniform projection law: value values[i] on [thresholds[i],
// thresholds[i+1]), values.back() up to 1.  thresholds[0] must be -1.
struct StepFunction {
  std::vector<double> thresholds;
  std::vector<double> values;
};

struct CapMixture {
  std::vector<double> thresholds;  // cap heights
  std::vector<double> masses;      // positive, sums to 1 +- 1e-8
};

// Decomposes a monotone step density into a mixture of normalized cap
// densities: the component at height theta carries mass
// Phibar_d(theta) * (jump of the input at theta).  Inputs that decrease
// anywhere raise a not-spherically-monotone error; inputs that do not
// integrate to 1 against the reference law raise a normalization error.
// Reconstruction reproduces the input at every breakpoint within 1e-8.
CapMixture cap_decomposition(const StepFunction& ell, int d);

// Evaluates the mixture's density at x (for reconstruction tests).
double cap_mixture_density(const CapMixture& mix, int d, double x);

struct DominanceResult {
  bool dominates = false;   // first law stochastically above the second
  double max_violation = 0.0;  // max CDF excess beyond the DKW tolerance
  double tolerance = 0.0;      // eps(n_mu) + eps(n_nu) at 99%
};

// Empirical stochastic-dominance check on the projections onto axis:
// true iff CDF_mu <= CDF_nu + tolerance everywhere, with the tolerance the
// 99% DKW band for the two sample sizes.  Both sets need >= 10^4 samples.
DominanceResult dominance_check(const std::vector<UnitVector>& mu_samples,
                                const std::vector<UnitVector>& nu_samples,
                                const UnitVector& axis);
DominanceResult dominance_check(const std::vector<double>& mu_inner,
                                const std::vector<double>& nu_inner);

// Finite-d correction curve for the decay factor, exposed for inspection
// only; nothing gates on it.
double refined_decay_correction(int d, double nu);

}  // namespace hdxgeo
