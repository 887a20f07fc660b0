#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "hdxgeo/cap_walks.hpp"
#include "hdxgeo/rng.hpp"
#include "test_util.hpp"

using namespace hdxgeo;

namespace {

UnitVector pole(int d) {
  UnitVector e = UnitVector::Zero(d);
  e[0] = 1.0;
  return e;
}

}  // namespace

TEST_CASE("zero steps return the start, bad arguments throw") {
  RandomStream rng(derive_seed(31, "walk-trivial", 0));
  UnitVector x0 = pole(12);
  CHECK((cap_walk(x0, 0.3, 0, rng) - x0).norm() == 0.0);
  CHECK_THROWS_AS(cap_walk(x0, 0.0, 1, rng), std::invalid_argument);
  CHECK_THROWS_AS(cap_walk(x0, 1.5, 1, rng), std::invalid_argument);
  CHECK_THROWS_AS(cap_walk(x0, 0.3, -1, rng), std::invalid_argument);
  UnitVector bad = UnitVector::Ones(12);
  CHECK_THROWS_AS(cap_walk(bad, 0.3, 1, rng), std::invalid_argument);
}

TEST_CASE("full-sphere step is uniform") {
  const int d = 15, n = 5000;
  RandomStream rng(derive_seed(31, "walk-full", 0));
  UnitVector x0 = pole(d);
  std::vector<double> inner(n);
  for (auto& v : inner) v = cap_walk(x0, 1.0, 1, rng).dot(x0);
  auto cdf = [d](double t) { return 1.0 - beta_tail(d, t); };
  CHECK(testutil::ks_statistic(inner, cdf) < testutil::ks_crit_one(n));
}

TEST_CASE("one step lands on the conditional coordinate law") {
  const int d = 60, n = 20000;
  const double p = 0.02;
  RandomStream rng(derive_seed(31, "walk-cond", 0));
  UnitVector x0 = pole(d);
  const CapSampler sampler(cap_from_p(d, p));
  std::vector<double> inner(n);
  for (auto& v : inner) {
    v = cap_walk_path(sampler, x0, 1, rng).back().dot(x0);
  }
  auto cond_cdf = [&](double k) { return (p - beta_tail(d, k)) / p; };
  CHECK(testutil::ks_statistic(inner, cond_cdf) < testutil::ks_crit_one(n));
}

TEST_CASE("path respects the per-step cap constraint") {
  const int d = 20, k = 8;
  const double p = 0.1;
  RandomStream rng(derive_seed(31, "walk-path", 0));
  UnitVector x0 = pole(d);
  const double tau = cap_from_p(d, p).tau;
  std::vector<UnitVector> path = cap_walk_path(x0, p, k, rng);
  REQUIRE(path.size() == static_cast<std::size_t>(k + 1));
  CHECK((path[0] - x0).norm() == 0.0);
  for (int i = 0; i < k; ++i) {
    CHECK(path[i].dot(path[i + 1]) >= tau);
    CHECK(std::abs(path[i + 1].norm() - 1.0) <= 1e-10);
  }
  // Reproducible from the seed.
  RandomStream rng2(derive_seed(31, "walk-path", 0));
  std::vector<UnitVector> again = cap_walk_path(x0, p, k, rng2);
  for (int i = 0; i <= k; ++i) CHECK((path[i] - again[i]).norm() == 0.0);
}

TEST_CASE("diffusion guards its step size") {
  RandomStream rng(derive_seed(31, "bm-guard", 0));
  UnitVector x0 = pole(50);
  // dt (d-1) <= 0.1 is the stability envelope.
  CHECK_THROWS_AS(brownian_sphere(x0, 0.1, 0.003, rng), std::invalid_argument);
  CHECK_THROWS_AS(brownian_sphere(x0, 0.1, -1e-4, rng), std::invalid_argument);
  CHECK_THROWS_AS(brownian_sphere(x0, 1e-5, 1e-3, rng), std::invalid_argument);
}

TEST_CASE("zero-time diffusion is a single point") {
  RandomStream rng(derive_seed(31, "bm-zero", 0));
  UnitVector x0 = pole(10);
  BMPath path = brownian_sphere(x0, 0.0, 1e-3, rng);
  REQUIRE(path.positions.size() == 1);
  REQUIRE(path.times.size() == 1);
  CHECK(path.times[0] == 0.0);
  CHECK((path.positions[0] - x0).norm() == 0.0);
}

TEST_CASE("diffusion path invariants") {
  RandomStream rng(derive_seed(31, "bm-path", 0));
  UnitVector x0 = pole(25);
  const double t = 0.05, dt = 1e-3;
  BMPath path = brownian_sphere(x0, t, dt, rng);
  REQUIRE(path.times.size() == path.positions.size());
  CHECK(path.times.front() == 0.0);
  CHECK(path.times.back() == doctest::Approx(t).epsilon(1e-9));
  for (std::size_t i = 0; i + 1 < path.times.size(); ++i)
    CHECK(path.times[i] < path.times[i + 1]);
  for (const auto& v : path.positions)
    CHECK(std::abs(v.norm() - 1.0) <= 1e-9);
}

TEST_CASE("diffusion mean and deviation tails follow the closed form") {
  RandomStream rng(derive_seed(31, "bm-conc", 0));
  BMConcentrationReport rep =
      bm_concentration_check(50, 0.01, 5e-5, 10000, 12, rng);
  CHECK(rep.predicted_mean == doctest::Approx(std::exp(-0.49)).epsilon(1e-12));
  CHECK(rep.mean_ok);
  CHECK(std::abs(rep.mean_inner - rep.predicted_mean) <= rep.mean_ci);
  REQUIRE(rep.tails.size() == 12);
  for (const auto& row : rep.tails) {
    CHECK(row.ok);
    CHECK(row.empirical <= row.bound + row.mc_error);
  }
  CHECK(rep.tails_ok);
  CHECK(rep.pass);
}

TEST_CASE("halving the step leaves the mean inside the statistical band") {
  RandomStream rng1(derive_seed(31, "bm-dt", 1));
  RandomStream rng2(derive_seed(31, "bm-dt", 2));
  BMConcentrationReport a = bm_concentration_check(50, 0.01, 1e-4, 4000, 8, rng1);
  BMConcentrationReport b = bm_concentration_check(50, 0.01, 5e-5, 4000, 8, rng2);
  CHECK(std::abs(a.mean_inner - b.mean_inner) <= a.mean_ci + b.mean_ci);
}

TEST_CASE("long-run diffusion reaches the rotation-invariant law") {
  RandomStream rng(derive_seed(31, "bm-stat", 0));
  BMConcentrationReport rep =
      bm_concentration_check(12, 1.0, 0.1 / 11.0, 3000, 8, rng);
  CHECK(rep.ks_vs_stationary < testutil::ks_crit_one(3000));
}

TEST_CASE("projection histogram basics") {
  const int d = 30;
  UnitVector axis = pole(d);
  std::vector<UnitVector> at_axis(50, axis);
  Projected1DMeasure top = project_1d(at_axis, axis, 20);
  CHECK(top.weights.back() == 1.0);
  for (int i = 0; i + 1 < 20; ++i) CHECK(top.weights[i] == 0.0);

  CHECK_THROWS_AS(project_1d(at_axis, axis, 5), std::invalid_argument);
  CHECK_THROWS_AS(project_1d(std::vector<UnitVector>{}, axis, 20),
                  std::invalid_argument);
}

TEST_CASE("uniform projections match the reference bin masses") {
  const int d = 30, bins = 100, n = 100000;
  RandomStream rng(derive_seed(31, "hist-chi", 0));
  std::vector<double> inner(n);
  for (auto& v : inner) v = sample_uniform_sphere(d, rng)[0];
  Projected1DMeasure m = project_1d(inner, d, bins);
  std::vector<double> ref = uniform_bin_masses(d, bins);
  REQUIRE(static_cast<int>(ref.size()) == bins);

  // Chi-square over bins with a meaningful expected count.
  double chi2 = 0.0;
  int kept = 0;
  for (int i = 0; i < bins; ++i) {
    const double expected = ref[i] * n;
    if (expected < 5.0) continue;
    const double obs = m.weights[i] * n;
    chi2 += (obs - expected) * (obs - expected) / expected;
    ++kept;
  }
  REQUIRE(kept > 10);
  boost::math::chi_squared chi(kept - 1);
  CHECK(chi2 < boost::math::quantile(chi, 0.99));
}

TEST_CASE("cap projections put no mass below the cap height") {
  const int d = 25, bins = 50, n = 20000;
  const double p = 0.1;
  RandomStream rng(derive_seed(31, "hist-cap", 0));
  const CapSampler sampler(cap_from_p(d, p));
  std::vector<double> inner(n);
  for (auto& v : inner) v = sampler.sample_kappa(rng);
  Projected1DMeasure m = project_1d(inner, d, bins);
  const double tau = sampler.spec().tau;
  for (int i = 0; i < bins; ++i) {
    const double right = -1.0 + 2.0 * (i + 1) / bins;
    if (right < tau) CHECK(m.weights[i] == 0.0);
  }
}

TEST_CASE("TV against the uniform law on knowns") {
  const int d = 30, bins = 100, n = 100000;
  RandomStream rng(derive_seed(31, "tv", 0));

  std::vector<double> unif(n);
  for (auto& v : unif) v = sample_uniform_sphere(d, rng)[0];
  CHECK(tv_to_uniform(project_1d(unif, d, bins)) <= 0.02);

  std::vector<double> point(1000, 1.0);
  CHECK(tv_to_uniform(project_1d(point, d, bins)) >= 0.999);

  const double p = 0.1;
  const CapSampler sampler(cap_from_p(25, p));
  std::vector<double> cap_inner(n);
  for (auto& v : cap_inner) v = sampler.sample_kappa(rng);
  const double tv = tv_to_uniform(project_1d(cap_inner, 25, bins));
  CHECK(std::abs(tv - (1.0 - p)) <= 0.02);
}

TEST_CASE("flat relative density decomposes into the full sphere") {
  StepFunction flat{{-1.0}, {1.0}};
  CapMixture mix = cap_decomposition(flat, 40);
  REQUIRE(mix.thresholds.size() == 1);
  CHECK(mix.thresholds[0] == -1.0);
  CHECK(mix.masses[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("cap relative density decomposes into that cap") {
  const int d = 30;
  const double p = 0.2;
  const double tau = cap_from_p(d, p).tau;
  StepFunction ell{{-1.0, tau}, {0.0, 1.0 / p}};
  CapMixture mix = cap_decomposition(ell, d);
  double total = 0.0;
  for (double mass : mix.masses) total += mass;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-8));
  // All mass sits at the cap height.
  double at_tau = 0.0;
  for (std::size_t i = 0; i < mix.thresholds.size(); ++i)
    if (std::abs(mix.thresholds[i] - tau) < 1e-12) at_tau += mix.masses[i];
  CHECK(at_tau == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("random monotone step density round trips through its mixture") {
  const int d = 35;
  RandomStream rng(derive_seed(31, "decomp-rt", 0));
  // 10 breakpoints, increasing values, normalized against the projection
  // law so the relative density integrates to 1.
  std::vector<double> thresholds{-1.0};
  for (int i = 1; i < 10; ++i)
    thresholds.push_back(-0.9 + 1.7 * i / 10.0 + 0.05 * rng.u01());
  std::vector<double> values;
  double v = 0.0;
  for (int i = 0; i < 10; ++i) {
    v += 0.1 + rng.u01();
    values.push_back(v);
  }
  double mass = 0.0;
  for (int i = 0; i < 10; ++i) {
    const double hi = i + 1 < 10 ? beta_tail(d, thresholds[i + 1]) : 0.0;
    mass += values[i] * (beta_tail(d, thresholds[i]) - hi);
  }
  for (auto& x : values) x /= mass;

  StepFunction ell{thresholds, values};
  CapMixture mix = cap_decomposition(ell, d);
  for (int i = 0; i < 10; ++i) {
    CHECK(std::abs(cap_mixture_density(mix, d, thresholds[i]) - values[i]) <=
          1e-8);
  }
}

TEST_CASE("decomposition rejects non-monotone and unnormalized input") {
  CHECK_THROWS_AS(cap_decomposition(StepFunction{{-1.0, 0.0}, {1.2, 0.8}}, 20),
                  std::invalid_argument);
  CHECK_THROWS_AS(cap_decomposition(StepFunction{{0.0}, {2.0}}, 20),
                  std::invalid_argument);
  CHECK_THROWS_AS(cap_decomposition(StepFunction{{-1.0}, {3.0}}, 20),
                  std::invalid_argument);
}

TEST_CASE("smaller caps dominate larger ones") {
  const int d = 20, n = 20000;
  RandomStream rng(derive_seed(31, "dom", 0));
  const CapSampler small(cap_from_p(d, 0.01));
  const CapSampler large(cap_from_p(d, 0.1));
  std::vector<double> mu(n), nu(n);
  for (auto& v : mu) v = small.sample_kappa(rng);
  for (auto& v : nu) v = large.sample_kappa(rng);
  CHECK(dominance_check(mu, nu).dominates);
  CHECK_FALSE(dominance_check(nu, mu).dominates);

  // Equal laws dominate both ways inside the band.
  std::vector<double> nu2(n);
  for (auto& v : nu2) v = large.sample_kappa(rng);
  CHECK(dominance_check(nu, nu2).dominates);
  CHECK(dominance_check(nu2, nu).dominates);

  std::vector<double> tiny(100, 0.5);
  CHECK_THROWS_AS(dominance_check(tiny, nu), std::invalid_argument);
}

TEST_CASE("one kernel step preserves cap dominance") {
  const int d = 25, n = 20000;
  const double q = 0.05;
  RandomStream rng(derive_seed(31, "dom-step", 0));
  UnitVector e = pole(d);
  const CapSampler start_small(cap_from_p(d, 0.01));
  const CapSampler start_large(cap_from_p(d, 0.1));
  const CapSampler kernel(cap_from_p(d, q));
  std::vector<double> mu(n), nu(n);
  for (int i = 0; i < n; ++i) {
    mu[i] = kernel.sample(start_small.sample(e, rng), rng).dot(e);
    nu[i] = kernel.sample(start_large.sample(e, rng), rng).dot(e);
  }
  CHECK(dominance_check(mu, nu).dominates);
}

TEST_CASE("decay fit over a moderately contracting walk") {
  const int d = 30;
  const double p = 0.2;
  RandomStream rng(derive_seed(31, "decay", 0));
  DecayReport rep = fit_decay_rate(pole(d), p, 6, 20000, 60, rng);
  CHECK(rep.sufficient_signal);
  REQUIRE(rep.tv.size() == 7);
  CHECK(rep.tv[0] >= 0.99);
  CHECK(rep.noise_floor < 0.1);
  REQUIRE(!rep.usable.empty());
  CHECK(rep.usable[0] == 0);
  CHECK(rep.slope < 0.0);
  for (double r : rep.ratio) CHECK(r > 0.0);
  // TV to the uniform law never exceeds 1 by construction.
  for (double t : rep.tv) {
    CHECK(t >= 0.0);
    CHECK(t <= 1.0);
  }
}

TEST_CASE("equatorial cap mixes right after the first spread") {
  // One step from a point lands uniform on a half sphere, which still has
  // TV 1/2 from uniform; the next kernel application wipes the rest.
  const int d = 40;
  RandomStream rng(derive_seed(31, "decay-fast", 0));
  DecayReport rep = fit_decay_rate(pole(d), 0.5, 3, 20000, 60, rng);
  CHECK(rep.tv[1] == doctest::Approx(0.5).epsilon(0.05));
  CHECK(rep.tv[2] <= rep.noise_floor + 0.05);
}

TEST_CASE("full-sphere walk has no decay signal to fit") {
  RandomStream rng(derive_seed(31, "decay-none", 0));
  CHECK_THROWS_AS(fit_decay_rate(pole(12), 1.0, 4, 2000, 40, rng),
                  std::runtime_error);
}

TEST_CASE("correction curve shape") {
  CHECK(std::isinf(refined_decay_correction(100, 1e-9)));
  double prev = refined_decay_correction(100, 0.5);
  CHECK(prev > 1.0);
  for (double nu : {1.0, 2.0, 4.0, 8.0}) {
    double cur = refined_decay_correction(100, nu);
    CHECK(cur < prev);
    CHECK(cur > 0.9);
    prev = cur;
  }
}
