// Acceptance suite: one line per criterion, exit code = failed criteria.
// Tolerances are pinned here on purpose; nothing reads them from config.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"

#include "config.hpp"
#include "experiments.hpp"
#include "hdxgeo/cap_walks.hpp"
#include "hdxgeo/geo.hpp"
#include "hdxgeo/graph.hpp"
#include "hdxgeo/rng.hpp"
#include "hdxgeo/shell.hpp"
#include "hdxgeo/spectral.hpp"
#include "hdxgeo/sphere.hpp"
#include "hdxgeo/walks.hpp"

namespace fs = std::filesystem;
using namespace hdxgeo;
using cli::LinkRow;

namespace {

constexpr std::uint64_t kSeed = 1220;
constexpr double kInvTol = 1e-10;     // inversion round trip
constexpr double kOracleTol = 1e-8;   // iterative vs dense eigensolver
constexpr double kTdTol = 1e-9;       // trickle-down slack
constexpr double kWindow = 0.1;       // spectral windows around the target

struct Outcome {
  bool pass = false;
  std::string detail;
};

int g_failures = 0;

void run_criterion(int index, const std::string& name,
                   const std::function<Outcome()>& body) {
  auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                              t0)
                    .count();
  if (!o.pass) ++g_failures;
  std::printf("%s %2d %-24s %7.1fs  %s\n", o.pass ? "PASS" : "FAIL", index,
              name.c_str(), secs, o.detail.c_str());
  std::fflush(stdout);
}

std::string g6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

WeightedGraph to_unit_graph(const GeoGraph& g) {
  std::vector<std::tuple<int, int, double>> edges;
  for (int u = 0; u < g.cloud.n; ++u)
    for (int v : g.adj[u])
      if (v > u) edges.emplace_back(u, v, 1.0);
  return make_graph(g.cloud.n, edges);
}

double lambda2_positive_part(const WeightedGraph& g) {
  std::vector<int> keep = non_isolated(g);
  if (static_cast<int>(keep.size()) == g.n) {
    NormalizedAdjacency na(g);
    return second_abs_eigenvalue(na).second_abs;
  }
  WeightedGraph sub = induced_subgraph(g, keep);
  NormalizedAdjacency na(sub);
  return second_abs_eigenvalue(na).second_abs;
}

// Connected random weighted graph: an attachment tree plus n extra edges,
// weights in [0.2, 1.2].
WeightedGraph random_weighted_graph(int n, RandomStream& rng) {
  std::set<std::pair<int, int>> seen;
  std::vector<std::tuple<int, int, double>> edges;
  for (int v = 1; v < n; ++v) {
    int u = static_cast<int>(rng.next_u64() % v);
    seen.emplace(u, v);
    edges.emplace_back(u, v, 0.2 + rng.u01());
  }
  for (int k = 0; k < n; ++k) {
    int u = static_cast<int>(rng.next_u64() % n);
    int v = static_cast<int>(rng.next_u64() % n);
    if (u == v) continue;
    if (u > v) std::swap(u, v);
    if (!seen.emplace(u, v).second) continue;
    edges.emplace_back(u, v, 0.2 + rng.u01());
  }
  return make_graph(n, edges);
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream oss;
  oss << in.rdbuf();
  return oss.str();
}

// run_experiment prints its own check lines; the suite keeps them out of
// the criterion listing.
int run_quiet(const cli::ExperimentConfig& cfg) {
  std::ostringstream sink;
  std::streambuf* old = std::cout.rdbuf(sink.rdbuf());
  int rc = cli::run_experiment(cfg);
  std::cout.rdbuf(old);
  return rc;
}

}  // namespace

int main() {
  std::optional<cli::TailsReport> tails;
  run_criterion(1, "tail-sandwich", [&] {
    cli::TailsParams p;
    p.d_grid = {20, 50, 100, 200, 500};
    p.p_grid = {1e-4, 1e-3, 1e-2, 0.1, 0.3, 0.5, 0.7, 0.9};
    tails = cli::tails_run(p);
    Outcome o;
    o.pass = tails->sandwich_violations == 0;
    o.detail = "violations " + std::to_string(tails->sandwich_violations) +
               "/" + std::to_string(tails->rows.size()) + " grid points";
    return o;
  });

  run_criterion(2, "inversion-roundtrip", [&] {
    Outcome o;
    o.pass = tails && tails->max_inversion_err <= kInvTol;
    o.detail = "max |tail(tau(p)) - p| = " +
               (tails ? g6(tails->max_inversion_err) : "n/a") + " tol 1e-10";
    return o;
  });

  run_criterion(3, "eigensolver-oracle", [&] {
    double max_diff = 0.0;
    for (int i = 0; i < 50; ++i) {
      RandomStream rng(derive_seed(kSeed, "acceptance/eig-oracle", i));
      int n = 8 + static_cast<int>(rng.next_u64() % 249);
      WeightedGraph g = random_weighted_graph(n, rng);
      NormalizedAdjacency na(g);
      double dense =
          second_abs_eigenvalue(na, EigenMethod::dense).second_abs;
      double iter =
          second_abs_eigenvalue(na, EigenMethod::iterative).second_abs;
      max_diff = std::max(max_diff, std::abs(dense - iter));
    }
    Outcome o;
    o.pass = max_diff <= kOracleTol;
    o.detail = "50 graphs n<=256, max |dense - iterative| = " + g6(max_diff);
    return o;
  });

  run_criterion(4, "trickle-down", [&] {
    Outcome o;
    o.pass = true;
    for (int n : {300, 600, 1000}) {
      cli::HdxVerifyParams p;
      p.n = n;
      p.master_seed = kSeed + n;
      cli::HdxVerifyReport r = cli::hdx_verify_run(p);
      bool ok = !r.connected || r.td_pass;
      o.pass = o.pass && ok;
      o.detail += "n=" + std::to_string(n) + (r.connected ? "" : "(disc)") +
                  " skel " + g6(r.lambda2_skeleton) +
                  (r.td_vacuous ? " vacuous; " : " <= " + g6(r.td_bound) +
                                                     (ok ? "; " : " FAIL; "));
    }
    return o;
  });

  run_criterion(5, "link-two-sided", [&] {
    cli::SphereSpectrumParams p;
    p.master_seed = kSeed;
    cli::SphereSpectrumReport r = cli::sphere_spectrum_run(p);
    Outcome o;
    o.pass = r.empty_links == 0 && r.with_spectrum == p.links &&
             r.in_window == r.with_spectrum;
    double q = conditional_edge_prob(p.tau, p.tau, p.tau, p.d);
    o.detail = std::to_string(r.in_window) + "/" + std::to_string(p.links) +
               " links in [" + g6(r.center - kWindow) + ", " +
               g6(r.center + kWindow) + "], " +
               std::to_string(r.empty_links) +
               " empty; sampled links are degenerate at edge probability q=" +
               g6(q);
    return o;
  });

  run_criterion(6, "global-spectrum", [&] {
    const int n = 3000, d = 60;
    const double p = 0.1;
    double tau = tau_of(p, d).tau;
    int in_window = 0;
    double lo = 1.0, hi = 0.0;
    for (int s = 0; s < 20; ++s) {
      GeoGraph g = sample_geo_graph(
          n, d, p, derive_seed(kSeed, "acceptance/global-spectrum", s));
      double l2 = lambda2_positive_part(to_unit_graph(g));
      lo = std::min(lo, l2);
      hi = std::max(hi, l2);
      if (std::abs(l2 - tau) <= kWindow) ++in_window;
    }
    Outcome o;
    o.pass = in_window >= 18;
    o.detail = std::to_string(in_window) +
               "/20 seeds with lambda2 in [" + g6(tau - kWindow) + ", " +
               g6(tau + kWindow) + "], observed [" + g6(lo) + ", " + g6(hi) +
               "]";
    return o;
  });

  run_criterion(7, "cap-walk-decay", [&] {
    cli::MixingParams p;
    p.master_seed = kSeed;
    cli::MixingReport r = cli::mixing_run(p);
    Outcome o;
    o.pass = r.all_ok;
    o.detail = "bound " + g6(r.bound) + "; checked ratios";
    for (std::size_t i = 0; i < r.checked.size(); ++i)
      o.detail += std::string(i ? "," : " ") + g6(r.ratio[r.checked[i]]);
    return o;
  });

  run_criterion(8, "diffusion-concentration", [&] {
    const int d = 50, trials = 10000;
    const double dt = 1e-4;
    Outcome o;
    o.pass = true;
    int idx = 0;
    for (double t : {0.005, 0.01, 0.02}) {
      RandomStream rng(derive_seed(kSeed, "acceptance/diffusion", idx++));
      BMConcentrationReport r =
          bm_concentration_check(d, t, dt, trials, 20, rng);
      o.pass = o.pass && r.pass;
      o.detail += "t=" + g6(t) + " mean " + g6(r.mean_inner) + " vs " +
                  g6(r.predicted_mean) + (r.pass ? "; " : " FAIL; ");
    }
    return o;
  });

  std::optional<cli::WalkCombReport> walks;
  run_criterion(9, "walk-combinatorics", [&] {
    cli::WalkCombParams p;
    p.master_seed = kSeed;
    walks = cli::walk_comb_run(p);
    Outcome o;
    o.pass = walks->invariant_violations == 0 && walks->bound_violations == 0;
    o.detail = std::to_string(walks->walks_checked) +
               " canonical walks, invariant violations " +
               std::to_string(walks->invariant_violations) +
               ", class-bound violations " +
               std::to_string(walks->bound_violations);
    return o;
  });

  run_criterion(10, "subgraph-probability", [&] {
    Outcome o;
    if (!walks) {
      o.detail = "walk run unavailable";
      return o;
    }
    const auto& tri = walks->subgraphs.back();
    o.pass = walks->forests_passed == 20 && walks->triangle_pass;
    o.detail = "forests " + std::to_string(walks->forests_passed) +
               "/20 within 3 sigma; triangle " + g6(tri.estimate) + " in [" +
               g6(tri.target_low) + ", " + g6(tri.target_high) + "]";
    return o;
  });

  run_criterion(11, "shell-suite", [&] {
    cli::ShellParams p;
    p.master_seed = kSeed;
    cli::ShellReport r = cli::shell_run(p);
    bool row_ok = r.max_row_err <= 1e-12;
    bool spec_ok = r.spec_passes >= p.freq_required;
    bool l1_ok = r.l1_passes >= p.freq_required;
    bool mass_ok = r.mass_passes >= p.freq_required;
    bool nd_ok = r.max_nd_ratio <= r.nd_bound;
    bool appc_ok = r.appc_passes >= p.freq_required;
    Outcome o;
    o.pass = row_ok && spec_ok && l1_ok && mass_ok && nd_ok && appc_ok;
    o.detail = "rowsum err " + g6(r.max_row_err) + "; spectral " +
               std::to_string(r.spec_passes) + ", l1 " +
               std::to_string(r.l1_passes) + ", mass " +
               std::to_string(r.mass_passes) + ", ratio-identities " +
               std::to_string(r.appc_passes) + " of " +
               std::to_string(p.resamples) + " (need " +
               std::to_string(p.freq_required) + "); N/D " +
               g6(r.max_nd_ratio) + " <= " + g6(r.nd_bound);
    return o;
  });

  run_criterion(12, "tightness", [&] {
    cli::TightnessParams p;
    p.master_seed = kSeed;
    cli::TightnessReport r = cli::tightness_run(p);
    bool skel_ok = r.connected && r.lambda2_skeleton >= 0.4;
    bool links_ok = r.with_spectrum > 0 && r.max_link <= r.lambda_target + 0.1;
    Outcome o;
    o.pass = skel_ok && links_ok;
    o.detail = "skeleton " + g6(r.lambda2_skeleton) + " >= 0.4 " +
               (skel_ok ? "ok" : "FAIL") + "; max link " + g6(r.max_link) +
               " <= " + g6(r.lambda_target + 0.1) + " " +
               (links_ok ? "ok" : "FAIL") + " (" +
               std::to_string(r.links.size()) + " links)";
    return o;
  });

  run_criterion(13, "determinism", [&] {
    fs::path base = "acceptance_out";
    fs::create_directories(base);
    Outcome o;

    cli::ExperimentConfig cfg = cli::resolve_config(
        "tails", "", kSeed, (base / "det_a").string(), 1);
    run_quiet(cfg);
    std::string m1 = read_file(base / "det_a" / "manifest.json");
    std::string t1 = read_file(base / "det_a" / "tails.csv");
    std::string i1 = read_file(base / "det_a" / "inversion.csv");
    run_quiet(cfg);
    bool rerun_ok = m1 == read_file(base / "det_a" / "manifest.json") &&
                    t1 == read_file(base / "det_a" / "tails.csv") &&
                    i1 == read_file(base / "det_a" / "inversion.csv");

    fs::path small = base / "det_small.json";
    {
      std::ofstream out(small, std::ios::binary);
      out << "{\"d\": 30, \"m\": 80, \"links\": 8, \"window\": 0.5}\n";
    }
    cli::ExperimentConfig c1 = cli::resolve_config(
        "sphere-spectrum", small.string(), kSeed, (base / "det_b1").string(),
        1);
    cli::ExperimentConfig c3 = cli::resolve_config(
        "sphere-spectrum", small.string(), kSeed, (base / "det_b2").string(),
        3);
    run_quiet(c1);
    run_quiet(c3);
    bool workers_ok = read_file(base / "det_b1" / "links.csv") ==
                      read_file(base / "det_b2" / "links.csv");
    nlohmann::json mb1 =
        nlohmann::json::parse(read_file(base / "det_b1" / "manifest.json"));
    nlohmann::json mb2 =
        nlohmann::json::parse(read_file(base / "det_b2" / "manifest.json"));
    for (auto* m : {&mb1, &mb2}) {
      (*m)["config"].erase("workers");
      (*m)["config"].erase("output_dir");
    }
    workers_ok = workers_ok && mb1 == mb2;

    o.pass = rerun_ok && workers_ok;
    o.detail = std::string("re-run byte-identical: ") +
               (rerun_ok ? "yes" : "NO") +
               "; workers 1 vs 3 agree (csv + manifest modulo echo): " +
               (workers_ok ? "yes" : "NO");
    return o;
  });

  std::printf("%d/13 criteria pass\n", 13 - g_failures);
  return g_failures;
}
