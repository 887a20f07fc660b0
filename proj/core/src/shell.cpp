#include "hdxgeo/shell.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "hdxgeo/quadrature.hpp"

namespace hdxgeo {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_shell_dim(int d) {
  if (d < 3)
    throw std::invalid_argument(
        "shell analysis needs d >= 3 (one dimension is spent on the shell)");
}

void check_tau(double tau) {
  if (!(tau > 0.0 && tau < 1.0))
    throw std::invalid_argument("shell threshold must lie in (0, 1)");
}

// log of psi_d(sin t) * cos t, the substituted density factor.
double log_density_theta(int d, double log_z, double theta) {
  double c = std::max(std::cos(theta), 1e-300);
  return log_z + (d - 2) * std::log(c);
}

// log Phibar_{d-1}(T(x, sin theta)); thresholds at or below -1 carry the
// full mass.  The y = 1 endpoint is singular; nudging it inside picks up
// the correct limit through the t <= -1 / t >= 1 branches.
double log_edge_theta(int d, double x, double tau, double theta) {
  double y = std::min(std::sin(theta), 1.0 - 1e-15);
  double t = shifted_threshold(x, y, tau);
  if (t <= -1.0) return 0.0;
  if (t >= 1.0) return -kInf;
  return log_beta_tail(d - 1, t);
}

// log of integral_lo^1 psi_d(y) Phibar_{d-1}(T(x,y)) dy via y = sin(theta),
// peak-scaled adaptive quadrature.  Returns -inf for an empty domain.
double log_outlier_integral(double x, double tau, int d, double lo) {
  if (lo >= 1.0) return -kInf;
  const double log_z = log_beta_normalizer(d);
  const double theta_lo = std::asin(std::max(lo, -1.0));
  const double theta_hi = std::asin(1.0);

  const int scan = 512;
  double peak = -kInf;
  std::vector<double> level(scan + 1);
  for (int i = 0; i <= scan; ++i) {
    double th = theta_lo + (theta_hi - theta_lo) * i / scan;
    level[i] = log_density_theta(d, log_z, th) + log_edge_theta(d, x, tau, th);
    peak = std::max(peak, level[i]);
  }
  if (peak == -kInf) return -kInf;
  int last = 0;
  for (int i = 0; i <= scan; ++i)
    if (level[i] >= peak - 65.0) last = i;
  double theta_end =
      theta_lo + (theta_hi - theta_lo) * std::min(last + 1, scan) / scan;

  auto f = [&](double th) {
    double l = log_density_theta(d, log_z, th) +
               log_edge_theta(d, x, tau, th) - peak;
    return l < -700.0 ? 0.0 : std::exp(l);
  };
  QuadResult q = integrate_adaptive_fn(f, theta_lo, theta_end, 1e-12);
  if (q.value <= 0.0) return -kInf;
  return peak + std::log(q.value);
}

}  // namespace

double conditional_edge_prob(double kappa_i, double kappa_j, double tau,
                             int d) {
  check_shell_dim(d);
  double t = shifted_threshold(kappa_i, kappa_j, tau);
  if (t <= -1.0) return 1.0;
  if (t >= 1.0) return 0.0;
  return beta_tail(d - 1, t);
}

ShellVector sample_shells(int m, double tau, int d, RandomStream& rng) {
  if (m < 2) throw std::invalid_argument("need at least two shells");
  check_shell_dim(d);
  check_tau(tau);
  CapSampler sampler(cap_from_tau(d, tau));
  ShellVector shells;
  shells.d = d;
  shells.tau = tau;
  shells.kappas.resize(m);
  for (int i = 0; i < m; ++i) shells.kappas[i] = sampler.sample_kappa(rng);
  return shells;
}

ShellMatrices build_shell_matrices(const ShellVector& shells) {
  const int m = static_cast<int>(shells.kappas.size());
  if (m < 2) throw std::invalid_argument("need at least two shells");
  if (m > 12000)
    throw std::runtime_error("resource guard: shell matrix larger than 12000");
  check_shell_dim(shells.d);
  check_tau(shells.tau);
  double k_min = kInf, k_max = -kInf;
  for (int i = 0; i < m; ++i) {
    double k = shells.kappas[i];
    if (!(k >= shells.tau && k < 1.0))
      throw std::invalid_argument("shell value outside [tau, 1)");
    k_min = std::min(k_min, k);
    k_max = std::max(k_max, k);
  }

  ShellMatrices mats;
  mats.d = shells.d;
  mats.tau = shells.tau;
  mats.kappas = shells.kappas;
  mats.q = Eigen::MatrixXd::Zero(m, m);

  // T is decreasing in each shell, so the extreme pairs pin the range of
  // thresholds the assembly needs; a cached interpolant then serves every
  // entry.  A collapsed range (all shells equal) falls back to direct
  // quadrature of the one repeated value.
  const int dm1 = shells.d - 1;
  double t_hi = shifted_threshold(k_min, k_min, shells.tau);
  double t_lo = shifted_threshold(k_max, k_max, shells.tau);
  double lo = std::max(t_lo, -1.0 + 1e-12);
  double hi = std::min(t_hi + 1e-12, 1.0 - 1e-12);
  bool use_interp = hi - lo > 1e-9;
  TailInterpolant interp =
      use_interp ? TailInterpolant(dm1, lo, hi)
                 : TailInterpolant(dm1, -0.5, 0.5, 17);  // unused stub
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) {
      double t = shifted_threshold(shells.kappas[i], shells.kappas[j],
                                   shells.tau);
      double prob;
      if (t <= -1.0 + 1e-12) {
        prob = 1.0;
      } else if (use_interp) {
        prob = std::exp(interp.log_tail(std::min(std::max(t, lo), hi)));
      } else {
        prob = beta_tail(dm1, t);
      }
      mats.q(i, j) = prob;
      mats.q(j, i) = prob;
    }
  mats.degree = mats.q.rowwise().sum();
  mats.qbar = mats.degree.cwiseInverse().asDiagonal() * mats.q;
  mats.pi = mats.degree / mats.degree.sum();
  return mats;
}

ShellClassification classify_shells(const ShellVector& shells, double gamma) {
  const int m = static_cast<int>(shells.kappas.size());
  if (m < 2) throw std::invalid_argument("need at least two shells");
  if (shells.d <= 3)
    throw std::invalid_argument("typicality width needs d > 3");
  check_tau(shells.tau);
  if (!(gamma > 0.0))
    throw std::invalid_argument("confidence exponent must be positive");

  ShellClassification cls;
  cls.gamma = gamma;
  double p_tau = beta_tail(shells.d, shells.tau);
  double target = std::pow(static_cast<double>(m), -(2.0 * gamma + 1.0)) *
                  p_tau;
  if (!(target > 0.0))
    throw std::runtime_error("degenerate eta: shell quantile underflows");
  TauResult eta = tau_of(target, shells.d);
  if (eta.degenerate || eta.tau >= 1.0 - 1e-12)
    throw std::runtime_error("degenerate eta: quantile pinned against 1");
  cls.eta = eta.tau;
  cls.alpha = 36.0 * std::log(static_cast<double>(shells.d)) /
              (shells.tau * shells.tau * (shells.d - 3) * (1.0 - cls.eta));
  cls.cutoff = shells.tau * (1.0 + cls.alpha);
  cls.is_typical.resize(m);
  bool below = true;
  for (int i = 0; i < m; ++i) {
    bool typ = shells.kappas[i] <= cls.cutoff;
    cls.is_typical[i] = typ;
    (typ ? cls.typical : cls.outliers).push_back(i);
    below = below && shells.kappas[i] <= cls.eta;
  }
  cls.all_below_eta = below;
  return cls;
}

ShellSpectralResult shell_spectral_check(const ShellMatrices& mats,
                                         double slack) {
  const int m = static_cast<int>(mats.degree.size());
  Eigen::VectorXd half = mats.degree.cwiseSqrt();
  Eigen::MatrixXd sym = half.cwiseInverse().asDiagonal() * mats.q *
                        half.cwiseInverse().asDiagonal();
  Eigen::VectorXd u = half / half.norm();

  ShellSpectralResult res;
  if (m <= 512) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym,
                                                      Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    res.detail.method = EigenMethod::dense;
    res.detail.top = ev[m - 1];
    res.detail.bottom = ev[0];
    res.detail.second_abs = std::max(std::abs(ev[m - 2]), std::abs(ev[0]));
    res.detail.converged = true;
  } else {
    res.detail = deflated_abs_extreme(SymOp::from_dense(sym), 1.0, u, 1e-10);
    res.detail.top = 1.0;
  }
  res.lambda_max_deflated = res.detail.second_abs;
  double d = mats.d;
  res.threshold = slack * std::log(d) / std::sqrt(d);
  res.pass = res.lambda_max_deflated <= res.threshold;
  return res;
}

RowSimilarityResult row_similarity_check(const ShellMatrices& mats,
                                         const ShellClassification& cls,
                                         double c_l1, double c_mass) {
  const int m = static_cast<int>(mats.degree.size());
  if (cls.typical.size() < 2)
    throw std::invalid_argument("need at least two typical shells");

  RowSimilarityResult res;
  // Rows are strided in column-major storage; the pair loop runs over
  // contiguous columns of the transposes instead.
  Eigen::MatrixXd qt = mats.qbar.transpose();
  Eigen::MatrixXd q2t = (mats.qbar * mats.qbar).transpose();
  for (std::size_t a = 0; a < cls.typical.size(); ++a)
    for (std::size_t b = a + 1; b < cls.typical.size(); ++b) {
      int i = cls.typical[a], j = cls.typical[b];
      res.max_typical_l1 =
          std::max(res.max_typical_l1,
                   (qt.col(i) - qt.col(j)).cwiseAbs().sum());
      res.max_typical_l1_sq =
          std::max(res.max_typical_l1_sq,
                   (q2t.col(i) - q2t.col(j)).cwiseAbs().sum());
    }
  for (int i = 0; i < m; ++i) {
    if (mats.kappas[i] > cls.eta) continue;
    double mass = 0.0;
    for (int k : cls.outliers) mass += mats.qbar(i, k);
    res.outlier_mass_max = std::max(res.outlier_mass_max, mass);
  }
  double d = mats.d;
  res.threshold_l1 = c_l1 * std::log(d) * std::log(d) / d;
  res.threshold_mass = c_mass / d;
  res.pass_l1 = res.max_typical_l1 <= res.threshold_l1;
  res.pass_l1_sq = res.max_typical_l1_sq <= res.threshold_l1;
  res.pass_mass = res.outlier_mass_max <= res.threshold_mass;
  return res;
}

OutlierRatio outlier_ratio_quadrature(double x, double tau, int d,
                                      double alpha) {
  check_shell_dim(d);
  check_tau(tau);
  if (!(x >= tau && x < 1.0))
    throw std::invalid_argument("evaluation shell outside [tau, 1)");
  if (!(alpha > 0.0))
    throw std::invalid_argument("typicality width must be positive");

  OutlierRatio out;
  out.log_denominator = log_outlier_integral(x, tau, d, tau);
  double lo_n = tau * (1.0 + alpha);
  out.log_numerator = log_outlier_integral(x, tau, d, lo_n);
  out.underflow = out.log_numerator < -700.0 && out.log_denominator < -700.0;
  if (out.log_numerator == -kInf) {
    out.ratio = 0.0;
  } else {
    out.ratio = std::exp(out.log_numerator - out.log_denominator);
  }
  return out;
}

RatioClaims ratio_claims_check(double kappa_i, double kappa_j, double kappa_l,
                               double tau) {
  double t_jl = shifted_threshold(kappa_j, kappa_l, tau);
  double t_it = shifted_threshold(kappa_i, tau, tau);
  double t_il = shifted_threshold(kappa_i, kappa_l, tau);
  double t_jt = shifted_threshold(kappa_j, tau, tau);

  RatioClaims rc;
  double num_rat = (tau - kappa_j * kappa_l) * (1.0 - kappa_i);
  double den_rat = (tau - kappa_i * kappa_l) * (1.0 - kappa_j);
  if (den_rat == 0.0)
    throw std::domain_error("ratio undefined: shifted threshold vanishes");
  rc.t_ratio_rational = num_rat / den_rat;
  rc.t_ratio = t_il != 0.0 && t_jt != 0.0 ? (t_jl * t_it) / (t_il * t_jt)
                                          : rc.t_ratio_rational;
  rc.t_deviation = std::abs(rc.t_ratio - 1.0);

  double a = (1.0 - t_il * t_il) * (1.0 - t_jt * t_jt);
  double b = (1.0 - t_jl * t_jl) * (1.0 - t_it * t_it);
  if (b == 0.0)
    throw std::domain_error("ratio undefined: degenerate denominator");
  rc.ab_ratio = a / b;
  rc.ab_deviation = std::abs(rc.ab_ratio - 1.0);
  return rc;
}

WeightedGraph sample_link_conditional(const ShellVector& shells,
                                      RandomStream& rng) {
  const int m = static_cast<int>(shells.kappas.size());
  if (m < 2) throw std::invalid_argument("need at least two shells");
  check_shell_dim(shells.d);
  check_tau(shells.tau);
  std::vector<UnitVector> dirs(m);
  for (int i = 0; i < m; ++i)
    dirs[i] = sample_uniform_sphere(shells.d - 1, rng);
  std::vector<std::tuple<int, int, double>> edges;
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) {
      double t = shifted_threshold(shells.kappas[i], shells.kappas[j],
                                   shells.tau);
      if (dirs[i].dot(dirs[j]) >= t) edges.emplace_back(i, j, 1.0);
    }
  return make_graph(m, edges);
}

DegreeConcentration degree_concentration_check(const WeightedGraph& link,
                                               const ShellMatrices& mats,
                                               double alpha) {
  const int m = static_cast<int>(mats.degree.size());
  if (link.n != m)
    throw std::invalid_argument("link and shell matrices disagree on m");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("deviation parameter must lie in (0, 1)");

  DegreeConcentration dc;
  dc.alpha = alpha;
  dc.bound = 1.0 / (1.0 - alpha);
  double q = conditional_edge_prob(mats.tau, mats.tau, mats.tau, mats.d);
  dc.predicted_failure =
      m * std::exp(-alpha * alpha * q * (m - 1) / 4.0);
  for (int i = 0; i < m; ++i) {
    if (link.degree[i] <= 0.0) {
      dc.zero_degree = true;
      dc.max_ratio = kInf;
      dc.argmax = i;
      continue;
    }
    double ratio = mats.degree[i] / link.degree[i];
    if (ratio > dc.max_ratio) {
      dc.max_ratio = ratio;
      dc.argmax = i;
    }
  }
  dc.within_bound = !dc.zero_degree && dc.max_ratio <= dc.bound;
  return dc;
}

}  // namespace hdxgeo
