#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "manifest.hpp"

namespace hdxgeo::cli {

// One examined link: id is the link index (sphere-spectrum) or the center
// vertex (complex experiments).  lambda2 is meaningful only when
// has_spectrum; empty links are recorded and excluded from spectra.
struct LinkRow {
  int id = -1;
  int vertices = 0;
  int effective = 0;  // vertices left after dropping isolated ones
  std::int64_t edges = 0;
  bool empty = true;
  bool connected = false;
  bool has_spectrum = false;
  double lambda2 = 0.0;
};

struct TailsParams {
  std::vector<int> d_grid;
  double t_min = 0.05, t_max = 0.9;
  int t_steps = 18;
  std::vector<double> p_grid;
  double inv_tol = 1e-10;
};

struct TailsReport {
  struct Row {
    int d;
    double t, tail, lower, upper;
    bool in_sandwich;
  };
  struct Inv {
    int d;
    double p, tau, err;
  };
  std::vector<Row> rows;
  std::vector<Inv> inversion;
  int sandwich_violations = 0;
  double max_inversion_err = 0.0;
};

TailsReport tails_run(const TailsParams& p);

struct SphereSpectrumParams {
  int d = 200;
  double tau = 0.5;
  int m = 1500;
  int links = 20;
  double window = 0.1;
  double eig_tol = 1e-10;
  std::uint64_t master_seed = 0;
  int workers = 1;
};

struct SphereSpectrumReport {
  double tau = 0.0, p = 0.0;
  double center = 0.0;  // tau/(1+tau), the window midpoint
  std::vector<LinkRow> links;
  int empty_links = 0;
  int with_spectrum = 0;
  int in_window = 0;
  double min_lambda = 0.0, max_lambda = 0.0;  // over links with spectra
};

SphereSpectrumReport sphere_spectrum_run(const SphereSpectrumParams& p);

struct HdxVerifyParams {
  int n = 600;
  double eps = 0.8;
  double eta_param = 2.0;
  int d_override = 0;       // 0: use eta_param * log_{4/3} n
  double p_override = 0.0;  // 0: use n^(eps-1)
  double min_pn = 10.0;
  double td_tol = 1e-9;
  double window = 0.1;
  double eig_tol = 1e-10;
  std::int64_t pair_budget = 500'000'000;
  std::uint64_t master_seed = 0;
  int workers = 1;
};

struct HdxVerifyReport {
  int n = 0, d = 0;
  double p = 0.0, tau = 0.0;
  double center = 0.0;  // tau/(1+tau)
  bool connected = false;
  int skeleton_vertices = 0, skeleton_dropped = 0;
  double lambda2_graph = 0.0;     // normalized adjacency of the sample
  double lambda2_skeleton = 0.0;  // triangle-weighted skeleton
  std::vector<LinkRow> links;
  int empty_links = 0, with_spectrum = 0;
  double max_link = 0.0, min_link = 0.0;
  // Trickle-down: lambda2_skeleton <= max_link/(1-max_link) + tol, vacuous
  // when max_link reaches 1.
  double td_bound = 0.0, td_margin = 0.0;
  bool td_vacuous = false;
  bool td_pass = false;
};

HdxVerifyReport hdx_verify_run(const HdxVerifyParams& p);

struct TightnessParams {
  double lambda_target = 1.0 / 3.0;
  int n = 20000;
  int d = 20;
  int attempts = 5;
  double eig_tol = 1e-10;
  int link_sample = 0;  // 0: every vertex
  std::int64_t pair_budget = 500'000'000;
  std::uint64_t master_seed = 0;
  int workers = 1;
};

struct TightnessReport {
  double lambda_target = 0.0, tau = 0.0, p = 0.0;
  int n = 0, d = 0;
  int attempts_used = 0;
  bool connected = false;
  int skeleton_vertices = 0;
  double lambda2_skeleton = 0.0;
  double rayleigh_bound = 0.0;  // certified lower bound on the top of
                                // the centered spectrum
  double tv_uniform = 0.0;      // TV(stationary, uniform) on survivors
  std::vector<LinkRow> links;
  int empty_links = 0, with_spectrum = 0;
  double max_link = 0.0;
};

TightnessReport tightness_run(const TightnessParams& p);

struct MixingParams {
  int d = 100;
  double tau = 0.5;
  int k_max = 8;
  std::uint64_t trials = 100000;
  int bins = 100;
  double ratio_factor = 1.25;
  double signal_factor = 2.0;
  std::uint64_t master_seed = 0;
};

struct MixingReport {
  double tau = 0.0, p = 0.0;
  double bound = 0.0;  // ratio_factor * tau
  double noise_floor = 0.0;
  std::vector<double> tv, ratio;
  // Steps whose ratio was checked (both endpoints above the signal bar)
  // and the outcome per checked step.
  std::vector<int> checked;
  std::vector<bool> ok;
  bool all_ok = false;
  double slope = 0.0;
};

MixingReport mixing_run(const MixingParams& p);

struct WalkCombParams {
  int ell_max = 6;
  int labels_max = 5;
  std::uint64_t budget = 10'000'000;
  int forest_count = 20;
  int forest_d = 15;
  double forest_p = 0.3;
  std::uint64_t forest_trials = 100000;
  int tri_d = 80;
  double tri_p = 0.05;
  std::uint64_t tri_trials = 1'000'000;
  double tri_factor = 1.5;
  std::uint64_t master_seed = 0;
  int workers = 1;
};

struct WalkCombReport {
  struct ClassRow {
    int ell, labels, distinct_edges, singletons, excess;
    std::uint64_t count;
    std::string bound;  // exact integer, decimal
  };
  struct SubgraphRow {
    std::string kind;  // "forest" or "triangle"
    int vertices;
    int edges;
    int d;
    double p;
    std::uint64_t trials;
    double estimate, ci_low, ci_high;
    double target_low, target_high;
    bool pass;
  };
  std::vector<ClassRow> classes;
  std::uint64_t invariant_violations = 0;  // decomposition structure
  std::uint64_t bound_violations = 0;      // class count above its bound
  std::uint64_t walks_checked = 0;
  std::vector<SubgraphRow> subgraphs;
  int forests_passed = 0;
  bool triangle_pass = false;
};

WalkCombReport walk_comb_run(const WalkCombParams& p);

struct ShellParams {
  int d = 400;
  int m = 1500;
  double tau = 0.5;
  double gamma = 1.0;
  int resamples = 100;
  int freq_required = 95;  // resamples that must pass each frequency check
  double c_spec = 3.0, c_l1 = 3.0, c_mass = 3.0;
  double nd_factor = 5.0;
  double appc_factor = 10.0;
  int triples = 100;
  std::uint64_t master_seed = 0;
  int workers = 1;
};

struct ShellReport {
  struct Row {
    int resample = -1;
    double lambda_deflated = 0.0;
    bool spec_pass = false;
    double row_err = 0.0;  // max |row sum - 1| of Qbar
    double max_l1 = 0.0, max_l1_sq = 0.0, outlier_mass = 0.0;
    int outlier_count = 0;
    bool all_below_eta = false;
    double nd_ratio = 0.0;
    double max_t_dev = 0.0, max_ab_dev = 0.0;
  };
  double tau = 0.0, q = 0.0, eta = 0.0, alpha = 0.0;
  double threshold_spec = 0.0, threshold_l1 = 0.0, threshold_mass = 0.0;
  double nd_bound = 0.0, appc_bound = 0.0;
  std::vector<Row> rows;
  int spec_passes = 0, l1_passes = 0, l1_sq_passes = 0, mass_passes = 0;
  int appc_passes = 0;
  double max_row_err = 0.0, max_nd_ratio = 0.0;
};

ShellReport shell_run(const ShellParams& p);

// Dispatch on cfg.experiment, write manifest.json / timings.txt / CSV
// tables into cfg.output_dir, print one line per check.  Returns the
// process exit code: 0 all gated checks pass, 2 a gated check failed,
// 1 execution error (the error manifest is still written if possible).
int run_experiment(const ExperimentConfig& cfg);

}  // namespace hdxgeo::cli
