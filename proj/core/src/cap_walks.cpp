#include "hdxgeo/cap_walks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace hdxgeo {

namespace {

constexpr double kStabilityLimit = 0.1;

void check_start(const UnitVector& x0) {
  if (x0.size() < 2 || !is_unit(x0, 1e-9))
    throw std::invalid_argument("start point must be a unit vector, d >= 2");
}

// One Euler-Maruyama step of dV = sqrt(2)(I - VV^T)dB - (d-1)V dt followed
// by renormalization.  g is scratch for the Gaussian increment.
void em_step(UnitVector& v, double h, UnitVector& g, RandomStream& rng) {
  const int d = static_cast<int>(v.size());
  for (int i = 0; i < d; ++i) g[i] = rng.normal();
  double gv = g.dot(v);
  double root = std::sqrt(2.0 * h);
  v = v * (1.0 - (d - 1) * h - root * gv) + root * g;
  v.normalize();
}

void check_step_size(int d, double t, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("step size must be positive");
  if (dt * (d - 1) > kStabilityLimit + 1e-12) {
    std::ostringstream os;
    os << "stability condition violated: dt * (d - 1) = " << dt * (d - 1)
       << " exceeds " << kStabilityLimit;
    throw std::invalid_argument(os.str());
  }
  if (t > 0.0 && dt > t)
    throw std::invalid_argument("step size exceeds the time horizon");
}

double lsq_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

UnitVector cap_walk(const UnitVector& x0, double p, int k, RandomStream& rng) {
  check_start(x0);
  if (k < 0) throw std::invalid_argument("step count must be nonnegative");
  if (!(p > 0.0 && p <= 1.0))
    throw std::invalid_argument("cap measure must lie in (0, 1]");
  if (k == 0) return x0;
  CapSpec cap = cap_from_p(static_cast<int>(x0.size()), p);
  UnitVector x = x0;
  for (int i = 0; i < k; ++i) x = sample_cap(cap, x, rng);
  return x;
}

std::vector<UnitVector> cap_walk_path(const UnitVector& x0, double p, int k,
                                      RandomStream& rng) {
  check_start(x0);
  if (k < 0) throw std::invalid_argument("step count must be nonnegative");
  if (!(p > 0.0 && p <= 1.0))
    throw std::invalid_argument("cap measure must lie in (0, 1]");
  std::vector<UnitVector> path;
  path.reserve(k + 1);
  path.push_back(x0);
  CapSpec cap = cap_from_p(static_cast<int>(x0.size()), p);
  for (int i = 0; i < k; ++i)
    path.push_back(sample_cap(cap, path.back(), rng));
  return path;
}

std::vector<UnitVector> cap_walk_path(const CapSampler& sampler,
                                      const UnitVector& x0, int k,
                                      RandomStream& rng) {
  check_start(x0);
  if (k < 0) throw std::invalid_argument("step count must be nonnegative");
  std::vector<UnitVector> path;
  path.reserve(k + 1);
  path.push_back(x0);
  for (int i = 0; i < k; ++i)
    path.push_back(sampler.sample(path.back(), rng));
  return path;
}

BMPath brownian_sphere(const UnitVector& x0, double t, double dt,
                       RandomStream& rng) {
  check_start(x0);
  if (t < 0.0) throw std::invalid_argument("time horizon must be nonnegative");
  const int d = static_cast<int>(x0.size());
  BMPath path;
  path.start = x0;
  path.step_size = dt;
  path.times.push_back(0.0);
  path.positions.push_back(x0);
  if (t == 0.0) return path;
  check_step_size(d, t, dt);

  UnitVector v = x0, g(d);
  double now = 0.0;
  while (now < t - 1e-15) {
    double h = std::min(dt, t - now);
    em_step(v, h, g, rng);
    now += h;
    path.times.push_back(now);
    path.positions.push_back(v);
  }
  return path;
}

BMConcentrationReport bm_concentration_check(int d, double t, double dt,
                                             int trials, int grid_points,
                                             RandomStream& rng) {
  if (d < 2) throw std::invalid_argument("invalid dimension");
  if (trials < 100) throw std::invalid_argument("too few trials");
  if (grid_points < 1) throw std::invalid_argument("empty deviation grid");
  if (t <= 0.0) throw std::invalid_argument("time horizon must be positive");
  check_step_size(d, t, dt);

  UnitVector x0 = UnitVector::Zero(d);
  x0[0] = 1.0;

  std::vector<double> inner(trials);
  UnitVector v(d), g(d);
  for (int i = 0; i < trials; ++i) {
    v = x0;
    double now = 0.0;
    while (now < t - 1e-15) {
      double h = std::min(dt, t - now);
      em_step(v, h, g, rng);
      now += h;
    }
    inner[i] = v.dot(x0);
  }

  BMConcentrationReport rep;
  rep.d = d;
  rep.t = t;
  rep.dt = dt;
  rep.trials = trials;
  rep.predicted_mean = std::exp(-(d - 1) * t);
  double mean = 0.0;
  for (double s : inner) mean += s;
  rep.mean_inner = mean / trials;
  double var_proxy = (1.0 - std::exp(-2.0 * (d - 1) * t)) / (d - 1);
  rep.mean_ci = 3.0 * std::sqrt(var_proxy / trials);
  rep.mean_ok = std::abs(rep.mean_inner - rep.predicted_mean) <= rep.mean_ci;

  double x_max = 5.0 * std::sqrt(var_proxy);
  rep.tails_ok = true;
  for (int j = 1; j <= grid_points; ++j) {
    BMTailRow row;
    row.x = x_max * j / grid_points;
    int hits = 0;
    for (double s : inner)
      if (std::abs(s - rep.predicted_mean) >= row.x) ++hits;
    row.empirical = static_cast<double>(hits) / trials;
    row.bound = 2.0 * std::exp(-0.5 * (d - 1) * row.x * row.x /
                               (1.0 - std::exp(-2.0 * (d - 1) * t)));
    row.mc_error =
        3.0 * std::sqrt(row.empirical * (1.0 - row.empirical) / trials);
    row.ok = row.empirical <= row.bound + row.mc_error;
    rep.tails_ok = rep.tails_ok && row.ok;
    rep.tails.push_back(row);
  }

  std::sort(inner.begin(), inner.end());
  double ks = 0.0;
  for (int i = 0; i < trials; ++i) {
    double cdf = 1.0 - beta_tail(d, inner[i]);
    ks = std::max(ks, std::abs(cdf - static_cast<double>(i) / trials));
    ks = std::max(ks, std::abs(static_cast<double>(i + 1) / trials - cdf));
  }
  rep.ks_vs_stationary = ks;
  rep.pass = rep.mean_ok && rep.tails_ok;
  return rep;
}

Projected1DMeasure project_1d(const std::vector<double>& inner_products,
                              int d, int bins) {
  if (bins < 10) throw std::invalid_argument("need at least 10 bins");
  if (inner_products.empty())
    throw std::invalid_argument("no samples to project");
  if (d < 2) throw std::invalid_argument("invalid dimension");
  Projected1DMeasure m;
  m.d = d;
  m.bin_count = bins;
  m.weights.assign(bins, 0.0);
  for (double x : inner_products) {
    if (!(x >= -1.0 - 1e-9 && x <= 1.0 + 1e-9))
      throw std::invalid_argument("projection outside [-1, 1]");
    int idx = static_cast<int>((x + 1.0) * 0.5 * bins);
    idx = std::min(std::max(idx, 0), bins - 1);
    m.weights[idx] += 1.0;
  }
  for (double& w : m.weights) w /= inner_products.size();
  return m;
}

Projected1DMeasure project_1d(const std::vector<UnitVector>& samples,
                              const UnitVector& axis, int bins) {
  if (samples.empty()) throw std::invalid_argument("no samples to project");
  if (!is_unit(axis, 1e-9))
    throw std::invalid_argument("axis must be a unit vector");
  std::vector<double> inner;
  inner.reserve(samples.size());
  for (const auto& s : samples) {
    if (s.size() != axis.size())
      throw std::invalid_argument("sample dimension mismatch");
    inner.push_back(s.dot(axis));
  }
  return project_1d(inner, static_cast<int>(axis.size()), bins);
}

std::vector<double> uniform_bin_masses(int d, int bins) {
  std::vector<double> mass(bins);
  double hi_tail = 1.0;  // Phibar at -1
  for (int i = 0; i < bins; ++i) {
    double edge = -1.0 + 2.0 * (i + 1) / bins;
    double next = i + 1 == bins ? 0.0 : beta_tail(d, edge);
    mass[i] = std::max(0.0, hi_tail - next);
    hi_tail = next;
  }
  return mass;
}

double tv_to_uniform(const Projected1DMeasure& m) {
  std::vector<double> ref = uniform_bin_masses(m.d, m.bin_count);
  double tv = 0.0;
  for (int i = 0; i < m.bin_count; ++i) tv += std::abs(m.weights[i] - ref[i]);
  return 0.5 * tv;
}

DecayReport fit_decay_rate(const UnitVector& x0, double p, int k_max,
                           int trials, int bins, RandomStream& rng) {
  check_start(x0);
  if (!(p > 0.0 && p <= 1.0))
    throw std::invalid_argument("cap measure must lie in (0, 1]");
  if (k_max < 2) throw std::invalid_argument("need k_max >= 2");
  if (trials < 1000) throw std::invalid_argument("too few trials");
  if (bins < 10) throw std::invalid_argument("need at least 10 bins");

  const int d = static_cast<int>(x0.size());
  CapSampler sampler(cap_from_p(d, p));

  std::vector<std::vector<double>> inner(k_max + 1,
                                         std::vector<double>(trials));
  UnitVector x(d);
  for (int i = 0; i < trials; ++i) {
    x = x0;
    inner[0][i] = 1.0;
    for (int k = 1; k <= k_max; ++k) {
      x = sampler.sample(x, rng);
      inner[k][i] = x.dot(x0);
    }
  }

  DecayReport rep;
  rep.p = p;
  rep.tau = sampler.spec().tau;
  rep.trials = trials;
  rep.bins = bins;
  for (int k = 0; k <= k_max; ++k)
    rep.tv.push_back(tv_to_uniform(project_1d(inner[k], d, bins)));
  for (int k = 0; k < k_max; ++k)
    rep.ratio.push_back(rep.tv[k] > 0.0 ? rep.tv[k + 1] / rep.tv[k] : 0.0);

  // Noise floor: self-TV of two independent uniform sample sets of the
  // same size.  Decay points below twice this floor carry no signal.
  std::vector<double> ua(trials), ub(trials);
  for (int i = 0; i < trials; ++i) {
    ua[i] = sample_uniform_sphere(d, rng)[0];
    ub[i] = sample_uniform_sphere(d, rng)[0];
  }
  Projected1DMeasure ha = project_1d(ua, d, bins);
  Projected1DMeasure hb = project_1d(ub, d, bins);
  double floor = 0.0;
  for (int i = 0; i < bins; ++i) floor += std::abs(ha.weights[i] - hb.weights[i]);
  rep.noise_floor = 0.5 * floor;

  for (int k = 0; k <= k_max; ++k)
    if (rep.tv[k] >= 2.0 * rep.noise_floor) rep.usable.push_back(k);
  bool consecutive = false;
  for (std::size_t i = 0; i + 1 < rep.usable.size(); ++i)
    if (rep.usable[i + 1] == rep.usable[i] + 1) consecutive = true;
  rep.sufficient_signal = consecutive;
  if (!consecutive)
    throw std::runtime_error(
        "insufficient signal: TV estimates do not clear the noise floor");

  std::vector<double> xs, ys;
  for (int k : rep.usable) {
    xs.push_back(k);
    ys.push_back(std::log(rep.tv[k]));
  }
  rep.slope = lsq_slope(xs, ys);
  return rep;
}

CapMixture cap_decomposition(const StepFunction& ell, int d) {
  const std::size_t m = ell.thresholds.size();
  if (m == 0 || ell.values.size() != m)
    throw std::invalid_argument("malformed step function");
  if (ell.thresholds.front() != -1.0)
    throw std::invalid_argument("step function must start at -1");
  for (std::size_t i = 0; i + 1 < m; ++i)
    if (!(ell.thresholds[i] < ell.thresholds[i + 1]))
      throw std::invalid_argument("thresholds must increase strictly");
  if (ell.thresholds.back() >= 1.0)
    throw std::invalid_argument("thresholds must stay below 1");
  double prev = 0.0;
  for (double v : ell.values) {
    if (v < 0.0) throw std::invalid_argument("density must be nonnegative");
    if (v < prev - 1e-12)
      throw std::invalid_argument("not spherically monotone");
    prev = v;
  }

  CapMixture mix;
  double total = 0.0;
  prev = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    double jump = ell.values[i] - prev;
    prev = ell.values[i];
    if (jump <= 0.0) continue;
    double mass = jump * beta_tail(d, ell.thresholds[i]);
    mix.thresholds.push_back(ell.thresholds[i]);
    mix.masses.push_back(mass);
    total += mass;
  }
  if (std::abs(total - 1.0) > 1e-6)
    throw std::invalid_argument(
        "density does not integrate to one against the reference law");
  return mix;
}

double cap_mixture_density(const CapMixture& mix, int d, double x) {
  double acc = 0.0;
  for (std::size_t i = 0; i < mix.thresholds.size(); ++i)
    if (x >= mix.thresholds[i])
      acc += mix.masses[i] / beta_tail(d, mix.thresholds[i]);
  return acc;
}

DominanceResult dominance_check(const std::vector<double>& mu_inner,
                                const std::vector<double>& nu_inner) {
  const std::size_t na = mu_inner.size(), nb = nu_inner.size();
  if (na < 10000 || nb < 10000)
    throw std::invalid_argument("need at least 10^4 samples per law");
  std::vector<double> a = mu_inner, b = nu_inner;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());

  DominanceResult res;
  // 99% DKW band: eps = sqrt(log(2/0.01) / (2n)) for each sample set.
  res.tolerance = std::sqrt(std::log(200.0) / (2.0 * na)) +
                  std::sqrt(std::log(200.0) / (2.0 * nb));

  double max_diff = -std::numeric_limits<double>::infinity();
  std::size_t i = 0, j = 0;
  while (i < na || j < nb) {
    double t = std::numeric_limits<double>::infinity();
    if (i < na) t = a[i];
    if (j < nb) t = std::min(t, b[j]);
    while (i < na && a[i] <= t) ++i;
    while (j < nb && b[j] <= t) ++j;
    max_diff = std::max(max_diff, static_cast<double>(i) / na -
                                      static_cast<double>(j) / nb);
  }
  res.dominates = max_diff <= res.tolerance;
  res.max_violation = std::max(0.0, max_diff - res.tolerance);
  return res;
}

DominanceResult dominance_check(const std::vector<UnitVector>& mu_samples,
                                const std::vector<UnitVector>& nu_samples,
                                const UnitVector& axis) {
  if (!is_unit(axis, 1e-9))
    throw std::invalid_argument("axis must be a unit vector");
  std::vector<double> a, b;
  a.reserve(mu_samples.size());
  b.reserve(nu_samples.size());
  for (const auto& s : mu_samples) a.push_back(s.dot(axis));
  for (const auto& s : nu_samples) b.push_back(s.dot(axis));
  return dominance_check(a, b);
}

double refined_decay_correction(int d, double nu) {
  if (d < 3 || !(nu > 0.0))
    throw std::invalid_argument("correction curve needs d >= 3, nu > 0");
  double den_sq = 1.0 - 2.0 * std::exp(-nu * std::sqrt(d - 1.0));
  if (den_sq <= 0.0) return std::numeric_limits<double>::infinity();
  double num = 1.0 + 4.0 / (std::pow(d - 1.0, 0.25) * std::sqrt(nu));
  return num / std::sqrt(den_sq);
}

}  // namespace hdxgeo
