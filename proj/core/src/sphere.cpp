#include "hdxgeo/sphere.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "hdxgeo/quadrature.hpp"

namespace hdxgeo {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;
constexpr double kInf = std::numeric_limits<double>::infinity();

// e-folds of integrand decay kept before truncating the quadrature range;
// the discarded remainder is below 1e-26 of the kept mass.
constexpr double kTailEfolds = 60.0;

[[noreturn]] void domain_fail(const std::string& msg) {
  throw std::domain_error(msg);
}

void check_dim(int d, const char* who) {
  if (d < 2)
    throw std::invalid_argument(std::string(who) +
                                ": invalid dimension d=" + std::to_string(d) +
                                " (need d >= 2)");
}

}  // namespace

bool is_unit(const UnitVector& v, double tol) {
  return v.size() > 0 && std::fabs(v.norm() - 1.0) <= tol;
}

double log_beta_normalizer(int d) {
  check_dim(d, "log_beta_normalizer");
  return std::lgamma(0.5 * d) - std::lgamma(0.5 * (d - 1)) -
         0.5 * std::log(kPi);
}

BetaDist::BetaDist(int dim) : d(dim), log_z(log_beta_normalizer(dim)) {}

double beta_density(int d, double x) {
  check_dim(d, "beta_density");
  if (std::fabs(x) > 1.0) domain_fail("beta_density: |x| > 1");
  const double one_minus = (1.0 - x) * (1.0 + x);
  if (one_minus <= 0.0) {
    // Endpoint: zero for d > 3, Z_3 = 1/2 for d = 3, divergent for d = 2.
    if (d > 3) return 0.0;
    if (d == 3) return 0.5;
    return kInf;
  }
  return std::exp(log_beta_normalizer(d) +
                  0.5 * (d - 3) * std::log(one_minus));
}

namespace {

// log Phibar_d(t) for t in [0, 1]; substitution x = sin(theta) gives
// Z_d * integral cos(theta)^(d-2) over [asin(t), pi/2].  The integrand is
// rescaled by its value at the left endpoint so the adaptive tolerance acts
// relatively.
double log_tail_nonneg(int d, double t) {
  if (t >= 1.0) return -kInf;
  const double theta0 = std::asin(t);
  const double log_c0 = 0.5 * std::log1p(-t * t);  // log cos(theta0)
  double theta1 = 0.5 * kPi;
  if (d > 2) {
    const double c1 = std::exp(log_c0 - kTailEfolds / (d - 2));
    if (c1 < 1.0) theta1 = std::acos(c1);
  }
  const double ex = static_cast<double>(d - 2);
  const auto f = [ex, log_c0](double theta) {
    double c = std::cos(theta);
    if (c < 1e-300) c = 1e-300;
    return std::exp(ex * (std::log(c) - log_c0));
  };
  const QuadResult q = integrate_adaptive(f, theta0, theta1, 5e-14);
  if (q.value <= 0.0) return -kInf;
  return log_beta_normalizer(d) + ex * log_c0 + std::log(q.value);
}

}  // namespace

double log_beta_tail(int d, double t) {
  check_dim(d, "log_beta_tail");
  if (std::fabs(t) > 1.0) domain_fail("log_beta_tail: |t| > 1");
  if (t >= 0.0) return log_tail_nonneg(d, t);
  // Phibar(t) = 1 - Phibar(-t) by symmetry of the density.
  return std::log1p(-std::exp(log_tail_nonneg(d, -t)));
}

double beta_tail(int d, double t) {
  check_dim(d, "beta_tail");
  if (std::fabs(t) > 1.0) domain_fail("beta_tail: |t| > 1");
  if (t >= 0.0) return std::exp(log_tail_nonneg(d, t));
  return 1.0 - std::exp(log_tail_nonneg(d, -t));
}

double sandwich_upper(int d, double t) {
  check_dim(d, "sandwich_upper");
  if (!(t > 0.0 && t < 1.0)) domain_fail("sandwich_upper: need 0 < t < 1");
  const double log_u = log_beta_normalizer(d) - std::log(t * (d - 1)) +
                       0.5 * (d - 1) * std::log1p(-t * t);
  return std::exp(log_u);
}

double sandwich_lower(int d, double t) {
  check_dim(d, "sandwich_lower");
  if (!(t > 0.0 && t < 1.0)) domain_fail("sandwich_lower: need 0 < t < 1");
  const double dt2 = static_cast<double>(d) * t * t;
  const double correction = 1.0 - 4.0 * std::log1p(dt2) / dt2;
  return sandwich_upper(d, t) * correction;
}

TauResult tau_of(double p, int d) {
  check_dim(d, "tau_of");
  if (!(p >= 0.0 && p <= 1.0)) domain_fail("tau_of: p outside [0, 1]");
  if (p == 0.0) return {1.0, true};
  if (p == 1.0) return {-1.0, false};
  if (p == 0.5) return {0.0, false};
  // Phibar_d is strictly decreasing; bisect keeping Phibar(lo) >= p >=
  // Phibar(hi).
  double lo = -1.0, hi = 1.0;
  while (hi - lo > 1e-13) {
    const double mid = 0.5 * (lo + hi);
    if (beta_tail(d, mid) >= p)
      lo = mid;
    else
      hi = mid;
  }
  return {0.5 * (lo + hi), false};
}

double shifted_threshold(double x, double y, double tau) {
  if (!(tau > 0.0 && tau < 1.0))
    throw std::invalid_argument("shifted_threshold: tau outside (0, 1)");
  if (x == 1.0 || y == 1.0)
    domain_fail("shifted_threshold: singular input (x or y equals 1)");
  if (!(x >= tau && x < 1.0 && y >= tau && y < 1.0))
    throw std::invalid_argument(
        "shifted_threshold: x, y must lie in [tau, 1)");
  const double num = tau - x * y;
  const double den =
      std::sqrt((1.0 - x) * (1.0 + x)) * std::sqrt((1.0 - y) * (1.0 + y));
  return num / den;
}

CapSpec cap_from_p(int d, double p) {
  check_dim(d, "cap_from_p");
  if (!(p >= 0.0 && p <= 1.0)) domain_fail("cap_from_p: p outside [0, 1]");
  const TauResult t = tau_of(p, d);
  return {d, p, t.tau, t.degenerate};
}

CapSpec cap_from_tau(int d, double tau) {
  check_dim(d, "cap_from_tau");
  if (std::fabs(tau) > 1.0) domain_fail("cap_from_tau: |tau| > 1");
  const double p = beta_tail(d, tau);
  return {d, p, tau, p == 0.0};
}

UnitVector sample_uniform_sphere(int d, RandomStream& rng) {
  if (d < 1)
    throw std::invalid_argument(
        "sample_uniform_sphere: invalid dimension d=" + std::to_string(d));
  for (;;) {
    UnitVector g = rng.gaussian_vector(d);
    const double n = g.norm();
    if (n > 1e-150) return g / n;
  }
}

UnitVector sample_orthogonal(const UnitVector& center, RandomStream& rng) {
  const int d = static_cast<int>(center.size());
  if (d < 2)
    throw std::invalid_argument(
        "sample_orthogonal: need ambient dimension >= 2");
  if (!is_unit(center, 1e-9))
    throw std::invalid_argument("sample_orthogonal: center is not unit");
  for (;;) {
    UnitVector g = rng.gaussian_vector(d);
    g -= g.dot(center) * center;
    const double n = g.norm();
    if (n > 1e-150) return g / n;
  }
}

UnitVector sample_cap(const CapSpec& cap, const UnitVector& center,
                      RandomStream& rng) {
  check_dim(cap.d, "sample_cap");
  if (cap.p <= 0.0) domain_fail("sample_cap: empty cap (p = 0)");
  if (static_cast<int>(center.size()) != cap.d)
    throw std::invalid_argument("sample_cap: center dimension mismatch");
  if (!is_unit(center, 1e-9))
    throw std::invalid_argument("sample_cap: center is not unit");
  // Inverse CDF of the conditional law:  Pr[K >= k | K >= tau] =
  // Phibar(k) / p, so K = tau_of(v * p) with v uniform on (0, 1].
  const double v = rng.u01_open_left();
  const double kappa = tau_of(v * cap.p, cap.d).tau;
  const double s = std::sqrt(std::max(0.0, (1.0 - kappa) * (1.0 + kappa)));
  return kappa * center + s * sample_orthogonal(center, rng);
}

UnitVector sample_shell(const UnitVector& center, double tau,
                        RandomStream& rng) {
  const int d = static_cast<int>(center.size());
  if (d < 2)
    throw std::invalid_argument("sample_shell: need ambient dimension >= 2");
  if (!is_unit(center, 1e-9))
    throw std::invalid_argument("sample_shell: center is not unit");
  if (std::fabs(tau) > 1.0) domain_fail("sample_shell: |tau| > 1");
  if (tau == 1.0) return center;
  if (tau == -1.0) return -center;
  const double s = std::sqrt((1.0 - tau) * (1.0 + tau));
  return tau * center + s * sample_orthogonal(center, rng);
}

TailInterpolant::TailInterpolant(int d, double t_min, double t_max,
                                 int nodes_hint)
    : d_(d) {
  check_dim(d, "TailInterpolant");
  t_min_ = std::max(-1.0, t_min);
  t_max_ = std::min(1.0 - 1e-12, t_max);
  if (!(t_min_ < t_max_))
    throw std::invalid_argument("TailInterpolant: empty range");
  // Node spacing targets ~1e-9 interpolation error: the fourth derivative
  // of log Phibar grows like d^2, so h scales like d^(-1/2).
  const double range = t_max_ - t_min_;
  int n = static_cast<int>(range * 83.0 * std::sqrt(static_cast<double>(d))) +
          9;
  n = std::max(n, 513);
  n = std::max(n, nodes_hint);
  n = std::min(n, 40001);
  val_.resize(n);
  deriv_.resize(n);
  h_ = range / (n - 1);
  const double log_z = log_beta_normalizer(d);
  for (int i = 0; i < n; ++i) {
    const double t = (i == n - 1) ? t_max_ : t_min_ + i * h_;
    const double lt = log_beta_tail(d, t);
    val_[i] = lt;
    const double one_minus = std::max(1e-300, (1.0 - t) * (1.0 + t));
    const double log_psi = log_z + 0.5 * (d - 3) * std::log(one_minus);
    deriv_[i] = -std::exp(log_psi - lt);
  }
  // Self check against direct quadrature at bin midpoints.
  RandomStream probe(0x5eedc0de);
  for (int k = 0; k < 64; ++k) {
    const double t =
        t_min_ + (t_max_ - t_min_) * (0.5 + std::floor(probe.u01() * (n - 1))) /
                     (n - 1);
    const double err = std::fabs(log_tail(t) - log_beta_tail(d, t));
    self_check_error_ = std::max(self_check_error_, err);
  }
}

double TailInterpolant::log_tail(double t) const {
  if (t <= t_min_) return val_.front();
  if (t >= t_max_) return val_.back();
  const int n = static_cast<int>(val_.size());
  int i = static_cast<int>((t - t_min_) / h_);
  i = std::min(i, n - 2);
  const double s = (t - (t_min_ + i * h_)) / h_;
  const double s2 = s * s, s3 = s2 * s;
  const double h00 = 2 * s3 - 3 * s2 + 1;
  const double h10 = s3 - 2 * s2 + s;
  const double h01 = -2 * s3 + 3 * s2;
  const double h11 = s3 - s2;
  return h00 * val_[i] + h_ * h10 * deriv_[i] + h01 * val_[i + 1] +
         h_ * h11 * deriv_[i + 1];
}

double TailInterpolant::invert_log(double log_p) const {
  // log tail is strictly decreasing in t over the tabulated range.
  double target = log_p;
  target = std::min(target, val_.front());
  target = std::max(target, val_.back());
  double lo = t_min_, hi = t_max_;
  while (hi - lo > 1e-13) {
    const double mid = 0.5 * (lo + hi);
    if (log_tail(mid) >= target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

CapSampler::CapSampler(const CapSpec& cap)
    : cap_(cap),
      interp_(cap.d,
              std::max(-1.0, cap.tau - 1e-9),
              // Deepest reachable target is p * 2^-53; pad by a few e-folds.
              [&cap]() {
                if (cap.p <= 0.0)
                  throw std::domain_error("CapSampler: empty cap (p = 0)");
                const double deep =
                    std::max(cap.p * 0x1.0p-53 * 0.125, 1e-300);
                return std::min(1.0 - 1e-12, tau_of(deep, cap.d).tau + 1e-9);
              }()),
      log_p_(std::log(cap.p)) {
  check_dim(cap.d, "CapSampler");
}

double CapSampler::sample_kappa(RandomStream& rng) const {
  const double v = rng.u01_open_left();
  if (cap_.d == 2) {
    // Closed-form inverse: Phibar_2(t) = (pi/2 - asin t) / pi.
    return std::cos(kPi * v * cap_.p);
  }
  return interp_.invert_log(log_p_ + std::log(v));
}

UnitVector CapSampler::sample(const UnitVector& center,
                              RandomStream& rng) const {
  if (static_cast<int>(center.size()) != cap_.d)
    throw std::invalid_argument("CapSampler: center dimension mismatch");
  const double kappa = sample_kappa(rng);
  const double s = std::sqrt(std::max(0.0, (1.0 - kappa) * (1.0 + kappa)));
  return kappa * center + s * sample_orthogonal(center, rng);
}

}  // namespace hdxgeo
