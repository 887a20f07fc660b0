#include "experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <mutex>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "hdxgeo/cap_walks.hpp"
#include "hdxgeo/geo.hpp"
#include "hdxgeo/graph.hpp"
#include "hdxgeo/rng.hpp"
#include "hdxgeo/shell.hpp"
#include "hdxgeo/spectral.hpp"
#include "hdxgeo/sphere.hpp"
#include "hdxgeo/walks.hpp"

namespace hdxgeo::cli {

namespace {

namespace fs = std::filesystem;

constexpr double kInf = std::numeric_limits<double>::infinity();

// Indices are claimed through a shared counter but every result is stored
// by index and reduced in index order, so outputs never depend on the
// worker count.
void parallel_for(int count, int workers, const std::function<void(int)>& fn) {
  workers = std::max(1, std::min(workers, count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::mutex error_mu;
  std::exception_ptr first_error;
  auto drain = [&] {
    for (;;) {
      int i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int t = 0; t < workers; ++t) pool.emplace_back(drain);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

struct WilsonInterval {
  double low = 0.0;
  double high = 0.0;
};

WilsonInterval wilson95(std::uint64_t hits, std::uint64_t trials) {
  const double z = 1.959963984540054;
  double n = static_cast<double>(trials);
  double ph = static_cast<double>(hits) / n;
  double z2 = z * z;
  double denom = 1.0 + z2 / n;
  double center = (ph + z2 / (2.0 * n)) / denom;
  double half =
      z * std::sqrt(ph * (1.0 - ph) / n + z2 / (4.0 * n * n)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

WeightedGraph unit_weight_graph(const GeoGraph& g) {
  std::vector<std::tuple<int, int, double>> edges;
  edges.reserve(static_cast<std::size_t>(g.edge_count));
  for (int u = 0; u < g.cloud.n; ++u)
    for (int v : g.adj[u])
      if (v > u) edges.emplace_back(u, v, 1.0);
  return make_graph(g.cloud.n, edges);
}

double lambda2_of(const WeightedGraph& g, double tol) {
  NormalizedAdjacency na(g);
  return second_abs_eigenvalue(na, std::nullopt, tol).second_abs;
}

// Spectrum of the graph restricted to its positive-degree part; isolated
// vertices carry no walk and are dropped first.
LinkRow link_row_from(int id, const WeightedGraph& g, double tol) {
  LinkRow row;
  row.id = id;
  row.vertices = g.n;
  row.edges = g.edge_count;
  row.empty = g.edge_count == 0;
  if (row.empty) return row;
  std::vector<int> keep = non_isolated(g);
  row.effective = static_cast<int>(keep.size());
  if (row.effective == g.n) {
    row.connected = is_connected(g);
    row.lambda2 = lambda2_of(g, tol);
  } else {
    WeightedGraph sub = induced_subgraph(g, keep);
    row.connected = is_connected(sub);
    row.lambda2 = lambda2_of(sub, tol);
  }
  row.has_spectrum = true;
  return row;
}

struct LinkStats {
  int empty = 0;
  int with_spectrum = 0;
  double max_l = 0.0;
  double min_l = 0.0;
  double max_window_dev = 0.0;  // vs a center passed by the caller
  int in_window = 0;
};

LinkStats summarize_links(const std::vector<LinkRow>& rows, double center,
                          double window) {
  LinkStats s;
  bool first = true;
  for (const LinkRow& r : rows) {
    if (r.empty) {
      ++s.empty;
      continue;
    }
    if (!r.has_spectrum) continue;
    ++s.with_spectrum;
    double dev = std::abs(r.lambda2 - center);
    s.max_window_dev = std::max(s.max_window_dev, dev);
    if (dev <= window) ++s.in_window;
    if (first) {
      s.max_l = s.min_l = r.lambda2;
      first = false;
    } else {
      s.max_l = std::max(s.max_l, r.lambda2);
      s.min_l = std::min(s.min_l, r.lambda2);
    }
  }
  return s;
}

double tv_uniform_stationary(const WeightedGraph& g) {
  double total = 0.0;
  for (double dv : g.degree) total += dv;
  double acc = 0.0;
  double u = 1.0 / g.n;
  for (double dv : g.degree) acc += std::abs(dv / total - u);
  return 0.5 * acc;
}

}  // namespace

TailsReport tails_run(const TailsParams& p) {
  if (!(p.t_min < p.t_max))
    throw std::invalid_argument("tails: t_min must be below t_max");
  TailsReport rep;
  for (int d : p.d_grid) {
    for (int i = 0; i < p.t_steps; ++i) {
      double t = p.t_min + (p.t_max - p.t_min) * i / (p.t_steps - 1);
      double tail = beta_tail(d, t);
      double lower = sandwich_lower(d, t);
      double upper = sandwich_upper(d, t);
      // The lower bound binds only where it is positive.
      bool ok = tail <= upper && (lower <= 0.0 || lower <= tail);
      if (!ok) ++rep.sandwich_violations;
      rep.rows.push_back({d, t, tail, lower, upper, ok});
    }
    for (double q : p.p_grid) {
      double tau = tau_of(q, d).tau;
      double err = std::abs(beta_tail(d, tau) - q);
      rep.max_inversion_err = std::max(rep.max_inversion_err, err);
      rep.inversion.push_back({d, q, tau, err});
    }
  }
  return rep;
}

SphereSpectrumReport sphere_spectrum_run(const SphereSpectrumParams& p) {
  SphereSpectrumReport rep;
  rep.tau = p.tau;
  rep.p = beta_tail(p.d, p.tau);
  rep.center = p.tau / (1.0 + p.tau);
  rep.links.resize(p.links);
  parallel_for(p.links, p.workers, [&](int i) {
    RandomStream rng(derive_seed(p.master_seed, "sphere-spectrum/link",
                                 static_cast<std::uint64_t>(i)));
    ShellVector shells = sample_shells(p.m, p.tau, p.d, rng);
    WeightedGraph link = sample_link_conditional(shells, rng);
    rep.links[i] = link_row_from(i, link, p.eig_tol);
  });
  LinkStats s = summarize_links(rep.links, rep.center, p.window);
  rep.empty_links = s.empty;
  rep.with_spectrum = s.with_spectrum;
  rep.in_window = s.in_window;
  rep.min_lambda = s.min_l;
  rep.max_lambda = s.max_l;
  return rep;
}

HdxVerifyReport hdx_verify_run(const HdxVerifyParams& p) {
  HdxVerifyReport rep;
  rep.n = p.n;
  rep.d = p.d_override > 0
              ? p.d_override
              : static_cast<int>(std::lround(p.eta_param * std::log(p.n) /
                                             std::log(4.0 / 3.0)));
  if (rep.d < 4)
    throw std::invalid_argument("hdx-verify: dimension below 4; raise "
                                "eta_param or d_override");
  rep.p = p.p_override > 0.0 ? p.p_override : std::pow(p.n, p.eps - 1.0);
  if (rep.p * p.n < p.min_pn)
    throw std::invalid_argument(
        "hdx-verify: expected degree below min_pn; raise n or eps");

  GeoBudget budget{p.pair_budget};
  GeoGraph g = sample_geo_graph(p.n, rep.d, rep.p,
                                derive_seed(p.master_seed, "hdx-verify/sample",
                                            0),
                                budget);
  rep.tau = g.tau;
  rep.center = rep.tau / (1.0 + rep.tau);

  {
    WeightedGraph wg = unit_weight_graph(g);
    std::vector<int> keep = non_isolated(wg);
    if (keep.size() >= 2) {
      if (static_cast<int>(keep.size()) == wg.n) {
        rep.lambda2_graph = lambda2_of(wg, p.eig_tol);
      } else {
        WeightedGraph sub = induced_subgraph(wg, keep);
        rep.lambda2_graph = lambda2_of(sub, p.eig_tol);
      }
    }
  }

  TwoComplex cx = build_two_complex(g, /*store_triangles=*/false);
  SkeletonResult skel = one_skeleton(cx);
  rep.connected = skel.connected;
  rep.skeleton_vertices = skel.graph.n;
  rep.skeleton_dropped = p.n - skel.graph.n;
  if (skel.graph.n >= 2) rep.lambda2_skeleton = lambda2_of(skel.graph, p.eig_tol);

  rep.links.resize(p.n);
  parallel_for(p.n, p.workers, [&](int v) {
    LinkGraph lg = link_of(g, v);
    rep.links[v] = link_row_from(v, lg.graph, p.eig_tol);
  });
  LinkStats s = summarize_links(rep.links, rep.center, p.window);
  rep.empty_links = s.empty;
  rep.with_spectrum = s.with_spectrum;
  rep.max_link = s.max_l;
  rep.min_link = s.min_l;

  if (rep.with_spectrum == 0 || rep.max_link >= 1.0 - 1e-12) {
    // A link eigenvalue at 1 (or no link spectra at all) makes the
    // inequality vacuous; recorded as such rather than failed.
    rep.td_vacuous = true;
    rep.td_bound = kInf;
    rep.td_margin = kInf;
    rep.td_pass = true;
  } else {
    TrickleDownResult td =
        trickle_down_check(rep.lambda2_skeleton, rep.max_link, p.td_tol);
    rep.td_bound = td.bound;
    rep.td_margin = td.margin;
    rep.td_pass = td.pass;
  }
  return rep;
}

TightnessReport tightness_run(const TightnessParams& p) {
  if (!(p.lambda_target >= 0.05 && p.lambda_target < 0.5))
    throw std::invalid_argument(
        "tightness: lambda_target must lie in [0.05, 0.5)");
  TightnessReport rep;
  rep.lambda_target = p.lambda_target;
  rep.tau = p.lambda_target / (1.0 - p.lambda_target);
  rep.p = beta_tail(p.d, rep.tau);
  rep.n = p.n;
  rep.d = p.d;

  GeoBudget budget{p.pair_budget};
  std::optional<GeoGraph> g;
  std::optional<SkeletonResult> skel;
  for (int a = 0; a < p.attempts; ++a) {
    rep.attempts_used = a + 1;
    g.emplace(sample_geo_graph(p.n, p.d, rep.p,
                               derive_seed(p.master_seed, "tightness/sample",
                                           static_cast<std::uint64_t>(a)),
                               budget));
    TwoComplex cx = build_two_complex(*g, /*store_triangles=*/false);
    skel.emplace(one_skeleton(cx));
    if (skel->connected) break;
  }
  rep.connected = skel->connected;
  rep.skeleton_vertices = skel->graph.n;
  if (skel->graph.n >= 2) {
    rep.lambda2_skeleton = lambda2_of(skel->graph, p.eig_tol);
    Eigen::MatrixXd emb(skel->graph.n, g->cloud.d);
    for (int i = 0; i < skel->graph.n; ++i)
      emb.row(i) = g->cloud.pts.row(skel->original_id[i]);
    rep.rayleigh_bound = rayleigh_lower_bound(skel->graph, emb);
    rep.tv_uniform = tv_uniform_stationary(skel->graph);
  }

  std::vector<int> centers;
  if (p.link_sample <= 0 || p.link_sample >= p.n) {
    centers.resize(p.n);
    std::iota(centers.begin(), centers.end(), 0);
  } else {
    for (int i = 0; i < p.link_sample; ++i)
      centers.push_back(static_cast<int>(
          static_cast<std::int64_t>(i) * p.n / p.link_sample));
  }
  rep.links.resize(centers.size());
  parallel_for(static_cast<int>(centers.size()), p.workers, [&](int i) {
    LinkGraph lg = link_of(*g, centers[i]);
    rep.links[i] = link_row_from(centers[i], lg.graph, p.eig_tol);
  });
  LinkStats s = summarize_links(rep.links, 0.0, 0.0);
  rep.empty_links = s.empty;
  rep.with_spectrum = s.with_spectrum;
  rep.max_link = s.max_l;
  return rep;
}

MixingReport mixing_run(const MixingParams& p) {
  MixingReport rep;
  CapSpec cap = cap_from_tau(p.d, p.tau);
  rep.tau = cap.tau;
  rep.p = cap.p;
  rep.bound = p.ratio_factor * p.tau;
  UnitVector x0 = UnitVector::Zero(p.d);
  x0[0] = 1.0;
  RandomStream rng(derive_seed(p.master_seed, "mixing/decay", 0));
  int trials = static_cast<int>(
      std::min<std::uint64_t>(p.trials, std::numeric_limits<int>::max()));
  DecayReport dr = fit_decay_rate(x0, cap.p, p.k_max, trials, p.bins, rng);
  rep.noise_floor = dr.noise_floor;
  rep.tv = dr.tv;
  rep.ratio = dr.ratio;
  rep.slope = dr.slope;
  double bar = p.signal_factor * dr.noise_floor;
  rep.all_ok = true;
  for (int k = 0; k + 1 < static_cast<int>(dr.tv.size()); ++k) {
    if (dr.tv[k] < bar || dr.tv[k + 1] < bar) continue;
    bool ok = dr.ratio[k] <= rep.bound;
    rep.checked.push_back(k);
    rep.ok.push_back(ok);
    if (!ok) rep.all_ok = false;
  }
  if (rep.checked.empty()) rep.all_ok = false;
  return rep;
}

WalkCombReport walk_comb_run(const WalkCombParams& p) {
  WalkCombReport rep;
  for (int ell = 2; ell <= p.ell_max; ++ell) {
    for (int labels = 2; labels <= p.labels_max; ++labels) {
      ShapeEnumeration en = enumerate_shapes(ell, labels, p.budget);
      for (const ShapeClass& c : en.classes) {
        BigInt bound = count_bound(ell, labels, c.distinct_edges,
                                   c.singleton_edges, c.excess);
        if (BigInt(c.count) > bound) ++rep.bound_violations;
        rep.classes.push_back({ell, labels, c.distinct_edges,
                               c.singleton_edges, c.excess, c.count,
                               bound.str()});
      }
      for (const auto& [seq, cnt] : en.canonical) {
        (void)cnt;
        std::vector<int> closed = seq;
        closed.push_back(seq[0]);
        WalkShape w = decompose(closed);
        ++rep.walks_checked;
        int mult_total =
            std::accumulate(w.multiplicity.begin(), w.multiplicity.end(), 0);
        bool ok = mult_total == ell;
        ok = ok && w.core_excess == w.excess;
        ok = ok && static_cast<int>(w.junction_edges.size()) <= 3 * w.excess;
        ok = ok && 2 * w.distinct_edges <= ell + w.singleton_edges;
        ok = ok && static_cast<int>(w.forest_edges.size() +
                                    w.core_edges.size()) == w.distinct_edges;
        ok = ok && (w.excess >= 1) == !w.junctions.empty();
        if (w.excess >= 1) ok = ok && w.junction_excess == w.excess;
        if (!ok) ++rep.invariant_violations;
      }
    }
  }

  rep.subgraphs.resize(p.forest_count + 1);
  parallel_for(p.forest_count, p.workers, [&](int i) {
    RandomStream rng(derive_seed(p.master_seed, "walk-comb/forest",
                                 static_cast<std::uint64_t>(i)));
    // Random recursive tree on 2..6 vertices; every tree is a forest and
    // its edge events are independent, so the target is exact.
    int k = 2 + static_cast<int>(rng.next_u64() % 5);
    std::vector<std::pair<int, int>> edges;
    for (int v = 1; v < k; ++v)
      edges.emplace_back(static_cast<int>(rng.next_u64() % v), v);
    PatternEstimate est = subgraph_probability_mc(
        edges, k, p.forest_d, p.forest_p, p.forest_trials, rng);
    double target = std::pow(p.forest_p, static_cast<double>(edges.size()));
    double sigma =
        std::sqrt(target * (1.0 - target) /
                  static_cast<double>(p.forest_trials));
    bool pass = std::abs(est.estimate - target) <= 3.0 * sigma;
    rep.subgraphs[i] = {"forest",          k,
                        static_cast<int>(edges.size()),
                        p.forest_d,        p.forest_p,
                        p.forest_trials,   est.estimate,
                        est.ci_low,        est.ci_high,
                        target - 3.0 * sigma, target + 3.0 * sigma,
                        pass};
  });

  constexpr int kChunks = 16;
  std::vector<std::uint64_t> chunk_hits(kChunks, 0);
  std::vector<std::uint64_t> chunk_trials(kChunks, 0);
  const std::vector<std::pair<int, int>> triangle = {{0, 1}, {0, 2}, {1, 2}};
  parallel_for(kChunks, p.workers, [&](int c) {
    std::uint64_t t = p.tri_trials / kChunks +
                      (c == 0 ? p.tri_trials % kChunks : 0);
    RandomStream rng(derive_seed(p.master_seed, "walk-comb/triangle",
                                 static_cast<std::uint64_t>(c)));
    PatternEstimate est =
        subgraph_probability_mc(triangle, 3, p.tri_d, p.tri_p, t, rng);
    chunk_hits[c] = est.hits;
    chunk_trials[c] = est.trials;
  });
  std::uint64_t hits = 0, trials = 0;
  for (int c = 0; c < kChunks; ++c) {
    hits += chunk_hits[c];
    trials += chunk_trials[c];
  }
  double estimate = static_cast<double>(hits) / static_cast<double>(trials);
  WilsonInterval wi = wilson95(hits, trials);
  double tau = cap_from_p(p.tri_d, p.tri_p).tau;
  double lo = std::pow(p.tri_p, 3.0);
  double hi = p.tri_p * p.tri_p *
              (p.tri_p + p.tri_factor * tau *
                             std::sqrt(0.5 * std::log(1.0 / p.tri_p)));
  double var = estimate > 0.0 ? estimate * (1.0 - estimate) : lo;
  double sigma = std::sqrt(var / static_cast<double>(trials));
  // target_low/high carry the Monte Carlo allowance, as for the forests.
  double lo3 = lo - 3.0 * sigma;
  double hi3 = hi + 3.0 * sigma;
  bool tri_pass = estimate >= lo3 && estimate <= hi3;
  rep.subgraphs[p.forest_count] = {"triangle", 3,       3,
                                   p.tri_d,    p.tri_p, trials,
                                   estimate,   wi.low,  wi.high,
                                   lo3,        hi3,     tri_pass};
  rep.triangle_pass = tri_pass;
  for (int i = 0; i < p.forest_count; ++i)
    if (rep.subgraphs[i].pass) ++rep.forests_passed;
  return rep;
}

ShellReport shell_run(const ShellParams& p) {
  ShellReport rep;
  rep.tau = p.tau;
  rep.q = conditional_edge_prob(p.tau, p.tau, p.tau, p.d);
  rep.rows.resize(p.resamples);
  parallel_for(p.resamples, p.workers, [&](int r) {
    RandomStream rng(derive_seed(p.master_seed, "shell-analysis/resample",
                                 static_cast<std::uint64_t>(r)));
    ShellVector shells = sample_shells(p.m, p.tau, p.d, rng);
    ShellMatrices mats = build_shell_matrices(shells);
    ShellReport::Row row;
    row.resample = r;
    row.row_err = (mats.qbar.rowwise().sum().array() - 1.0).abs().maxCoeff();
    ShellSpectralResult spec = shell_spectral_check(mats, p.c_spec);
    row.lambda_deflated = spec.lambda_max_deflated;
    row.spec_pass = spec.pass;
    ShellClassification cls = classify_shells(shells, p.gamma);
    RowSimilarityResult sim =
        row_similarity_check(mats, cls, p.c_l1, p.c_mass);
    row.max_l1 = sim.max_typical_l1;
    row.max_l1_sq = sim.max_typical_l1_sq;
    row.outlier_mass = sim.outlier_mass_max;
    row.outlier_count = static_cast<int>(cls.outliers.size());
    row.all_below_eta = cls.all_below_eta;
    row.nd_ratio = outlier_ratio_quadrature(p.tau, p.tau, p.d, cls.alpha).ratio;
    if (static_cast<int>(cls.typical.size()) >= 3) {
      for (int j = 0; j < p.triples; ++j) {
        int a = cls.typical[rng.next_u64() % cls.typical.size()];
        int b = cls.typical[rng.next_u64() % cls.typical.size()];
        int c = cls.typical[rng.next_u64() % cls.typical.size()];
        if (a == b || a == c || b == c) continue;
        try {
          RatioClaims rc =
              ratio_claims_check(shells.kappas[a], shells.kappas[b],
                                 shells.kappas[c], p.tau);
          row.max_t_dev = std::max(row.max_t_dev, rc.t_deviation);
          row.max_ab_dev = std::max(row.max_ab_dev, rc.ab_deviation);
        } catch (const std::domain_error&) {
          // A product landing exactly on tau has measure zero; skip it.
        }
      }
    }
    if (r == 0) {
      rep.eta = cls.eta;
      rep.alpha = cls.alpha;
      rep.threshold_spec = spec.threshold;
      rep.threshold_l1 = sim.threshold_l1;
      rep.threshold_mass = sim.threshold_mass;
    }
    rep.rows[r] = row;
  });
  rep.nd_bound = p.nd_factor / p.d;
  rep.appc_bound = p.appc_factor * rep.alpha * rep.alpha;
  for (const ShellReport::Row& row : rep.rows) {
    if (row.spec_pass) ++rep.spec_passes;
    if (row.max_l1 <= rep.threshold_l1) ++rep.l1_passes;
    if (row.max_l1_sq <= rep.threshold_l1) ++rep.l1_sq_passes;
    if (row.outlier_mass <= rep.threshold_mass) ++rep.mass_passes;
    if (row.max_t_dev <= rep.appc_bound && row.max_ab_dev <= rep.appc_bound)
      ++rep.appc_passes;
    rep.max_row_err = std::max(rep.max_row_err, row.row_err);
    rep.max_nd_ratio = std::max(rep.max_nd_ratio, row.nd_ratio);
  }
  return rep;
}

namespace {

struct RunContext {
  fs::path out;
  PhaseClock clock;
  std::vector<CheckResult> checks;
  nlohmann::json derived;
  std::vector<std::string> artifacts;
};

std::string short_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void print_checks(const std::vector<CheckResult>& checks) {
  for (const CheckResult& c : checks) {
    const char* tag = c.gating ? (c.pass ? "PASS" : "FAIL")
                               : (c.pass ? "cal+" : "cal-");
    std::cout << tag << ' ' << c.name;
    for (std::size_t i = c.name.size(); i < 28; ++i) std::cout << ' ';
    std::cout << ' ' << short_g(c.measured) << ' ' << c.comparator << ' '
              << short_g(c.threshold);
    if (!c.note.empty()) std::cout << "  [" << c.note << "]";
    std::cout << '\n';
  }
}

std::string count_note(int empty_links) {
  if (empty_links == 0) return {};
  return std::to_string(empty_links) + " empty links excluded";
}

void run_tails(const ExperimentConfig& cfg, RunContext& ctx) {
  TailsParams tp;
  tp.d_grid = parse_int_list(get_string(cfg, "d_grid"));
  tp.t_min = get_double(cfg, "t_min");
  tp.t_max = get_double(cfg, "t_max");
  tp.t_steps = static_cast<int>(get_int(cfg, "t_steps"));
  tp.p_grid = parse_double_list(get_string(cfg, "p_grid"));
  tp.inv_tol = get_double(cfg, "inv_tol");

  ctx.clock.start("tails/run");
  TailsReport rep = tails_run(tp);
  ctx.clock.stop();

  ctx.clock.start("tails/write");
  CsvWriter tails((ctx.out / "tails.csv").string(),
                  {"d", "t", "tail", "lower", "upper", "in_sandwich"});
  for (const auto& r : rep.rows)
    tails.row({fmt(r.d), fmt(r.t), fmt(r.tail), fmt(r.lower), fmt(r.upper),
               fmt(r.in_sandwich)});
  CsvWriter inv((ctx.out / "inversion.csv").string(),
                {"d", "p", "tau", "roundtrip_err"});
  for (const auto& r : rep.inversion)
    inv.row({fmt(r.d), fmt(r.p), fmt(r.tau), fmt(r.err)});
  ctx.clock.stop();

  ctx.artifacts = {"tails.csv", "inversion.csv"};
  ctx.derived["grid_points"] = rep.rows.size();
  ctx.derived["inversion_points"] = rep.inversion.size();
  ctx.checks.push_back({"sandwich-violations",
                        rep.sandwich_violations == 0,
                        static_cast<double>(rep.sandwich_violations), 0.0,
                        "<=", true, ""});
  ctx.checks.push_back({"inversion-max-err",
                        rep.max_inversion_err <= tp.inv_tol,
                        rep.max_inversion_err, tp.inv_tol, "<=", true, ""});
}

void write_links_csv(const std::string& path, const std::string& id_column,
                     const std::vector<LinkRow>& rows) {
  CsvWriter links(path, {id_column, "link_vertices", "link_edges", "empty",
                         "connected", "lambda2"});
  for (const LinkRow& r : rows)
    links.row({fmt(r.id), fmt(r.vertices), fmt(r.edges), fmt(r.empty),
               fmt(r.connected),
               r.has_spectrum ? fmt(r.lambda2) : std::string()});
}

void run_sphere_spectrum(const ExperimentConfig& cfg, RunContext& ctx) {
  SphereSpectrumParams sp;
  sp.d = static_cast<int>(get_int(cfg, "d"));
  sp.tau = get_double(cfg, "tau");
  sp.m = static_cast<int>(get_int(cfg, "m"));
  sp.links = static_cast<int>(get_int(cfg, "links"));
  sp.window = get_double(cfg, "window");
  sp.eig_tol = get_double(cfg, "eig_tol");
  sp.master_seed = cfg.master_seed;
  sp.workers = cfg.workers;

  ctx.clock.start("sphere-spectrum/run");
  SphereSpectrumReport rep = sphere_spectrum_run(sp);
  ctx.clock.stop();

  ctx.clock.start("sphere-spectrum/write");
  CsvWriter links((ctx.out / "links.csv").string(),
                  {"link", "m", "effective", "edges", "empty", "connected",
                   "lambda2"});
  for (const LinkRow& r : rep.links)
    links.row({fmt(r.id), fmt(r.vertices), fmt(r.effective), fmt(r.edges),
               fmt(r.empty), fmt(r.connected),
               r.has_spectrum ? fmt(r.lambda2) : std::string()});
  ctx.clock.stop();

  ctx.artifacts = {"links.csv"};
  ctx.derived["tau"] = rep.tau;
  ctx.derived["p"] = rep.p;
  ctx.derived["q"] = conditional_edge_prob(sp.tau, sp.tau, sp.tau, sp.d);
  ctx.derived["link_center"] = rep.center;
  ctx.derived["empty_links"] = rep.empty_links;
  ctx.derived["min_lambda2"] = rep.min_lambda;
  ctx.derived["max_lambda2"] = rep.max_lambda;

  bool all_in = rep.empty_links == 0 && rep.with_spectrum == sp.links &&
                rep.in_window == rep.with_spectrum;
  LinkStats s = summarize_links(rep.links, rep.center, sp.window);
  ctx.checks.push_back({"link-window", all_in, s.max_window_dev, sp.window,
                        "<=", get_bool(cfg, "assert_window"),
                        count_note(rep.empty_links)});
  ctx.checks.push_back({"empty-links", rep.empty_links == 0,
                        static_cast<double>(rep.empty_links), 0.0, "<=",
                        false, ""});
}

void run_hdx_verify(const ExperimentConfig& cfg, RunContext& ctx) {
  HdxVerifyParams hp;
  hp.n = static_cast<int>(get_int(cfg, "n"));
  hp.eps = get_double(cfg, "eps");
  hp.eta_param = get_double(cfg, "eta_param");
  hp.d_override = static_cast<int>(get_int(cfg, "d_override"));
  hp.p_override = get_double(cfg, "p_override");
  hp.min_pn = get_double(cfg, "min_pn");
  hp.td_tol = get_double(cfg, "td_tol");
  hp.window = get_double(cfg, "window");
  hp.eig_tol = get_double(cfg, "eig_tol");
  hp.pair_budget = static_cast<std::int64_t>(get_uint(cfg, "pair_budget"));
  hp.master_seed = cfg.master_seed;
  hp.workers = cfg.workers;

  ctx.clock.start("hdx-verify/run");
  HdxVerifyReport rep = hdx_verify_run(hp);
  ctx.clock.stop();

  ctx.clock.start("hdx-verify/write");
  write_links_csv((ctx.out / "links.csv").string(), "vertex", rep.links);
  ctx.clock.stop();

  ctx.artifacts = {"links.csv"};
  ctx.derived["n"] = rep.n;
  ctx.derived["d"] = rep.d;
  ctx.derived["p"] = rep.p;
  ctx.derived["tau"] = rep.tau;
  ctx.derived["q"] = conditional_edge_prob(rep.tau, rep.tau, rep.tau, rep.d);
  ctx.derived["link_center"] = rep.center;
  ctx.derived["lambda2_graph"] = rep.lambda2_graph;
  ctx.derived["lambda2_skeleton"] = rep.lambda2_skeleton;
  ctx.derived["skeleton_vertices"] = rep.skeleton_vertices;
  ctx.derived["skeleton_dropped"] = rep.skeleton_dropped;
  ctx.derived["empty_links"] = rep.empty_links;
  ctx.derived["max_link_lambda2"] = rep.max_link;
  ctx.derived["min_link_lambda2"] = rep.min_link;
  ctx.derived["trickle_down_margin"] = rep.td_margin;

  ctx.checks.push_back({"skeleton-connected", rep.connected,
                        rep.connected ? 1.0 : 0.0, 1.0, ">=", true, ""});
  ctx.checks.push_back({"trickle-down", rep.td_pass, rep.lambda2_skeleton,
                        rep.td_bound, "<=", true,
                        rep.td_vacuous ? "vacuous: link spectrum reaches 1"
                                       : count_note(rep.empty_links)});
  LinkStats s = summarize_links(rep.links, rep.center, hp.window);
  bool links_in = s.with_spectrum > 0 && s.in_window == s.with_spectrum;
  ctx.checks.push_back({"link-window", links_in, s.max_window_dev, hp.window,
                        "<=", get_bool(cfg, "assert_link_window"),
                        count_note(rep.empty_links)});
  double skel_dev = std::abs(rep.lambda2_skeleton - rep.tau);
  ctx.checks.push_back({"skeleton-window", skel_dev <= hp.window, skel_dev,
                        hp.window, "<=",
                        get_bool(cfg, "assert_skeleton_window"), ""});
  ctx.checks.push_back({"empty-links", rep.empty_links == 0,
                        static_cast<double>(rep.empty_links), 0.0, "<=",
                        false, ""});
}

void run_tightness(const ExperimentConfig& cfg, RunContext& ctx) {
  TightnessParams tp;
  tp.lambda_target = get_double(cfg, "lambda_target");
  tp.n = static_cast<int>(get_int(cfg, "n"));
  tp.d = static_cast<int>(get_int(cfg, "d"));
  tp.attempts = static_cast<int>(get_int(cfg, "attempts"));
  tp.eig_tol = get_double(cfg, "eig_tol");
  tp.link_sample = static_cast<int>(get_int(cfg, "link_sample"));
  tp.pair_budget = static_cast<std::int64_t>(get_uint(cfg, "pair_budget"));
  tp.master_seed = cfg.master_seed;
  tp.workers = cfg.workers;

  ctx.clock.start("tightness/run");
  TightnessReport rep = tightness_run(tp);
  ctx.clock.stop();

  ctx.clock.start("tightness/write");
  write_links_csv((ctx.out / "links.csv").string(), "vertex", rep.links);
  ctx.clock.stop();

  ctx.artifacts = {"links.csv"};
  ctx.derived["lambda_target"] = rep.lambda_target;
  ctx.derived["tau"] = rep.tau;
  ctx.derived["p"] = rep.p;
  ctx.derived["q"] = conditional_edge_prob(rep.tau, rep.tau, rep.tau, rep.d);
  ctx.derived["attempts_used"] = rep.attempts_used;
  ctx.derived["skeleton_vertices"] = rep.skeleton_vertices;
  ctx.derived["lambda2_skeleton"] = rep.lambda2_skeleton;
  ctx.derived["rayleigh_bound"] = rep.rayleigh_bound;
  ctx.derived["tv_uniform"] = rep.tv_uniform;
  ctx.derived["empty_links"] = rep.empty_links;
  ctx.derived["max_link_lambda2"] = rep.max_link;

  double skeleton_slack = get_double(cfg, "skeleton_slack");
  double link_slack = get_double(cfg, "link_slack");
  double tv_threshold = get_double(cfg, "tv_threshold");

  ctx.checks.push_back({"skeleton-connected", rep.connected,
                        rep.connected ? 1.0 : 0.0, 1.0, ">=", true,
                        "attempts used: " + std::to_string(rep.attempts_used)});
  ctx.checks.push_back({"skeleton-lambda2",
                        rep.lambda2_skeleton >= rep.tau - skeleton_slack,
                        rep.lambda2_skeleton, rep.tau - skeleton_slack, ">=",
                        true, ""});
  ctx.checks.push_back({"link-bound",
                        rep.with_spectrum > 0 &&
                            rep.max_link <= rep.lambda_target + link_slack,
                        rep.max_link, rep.lambda_target + link_slack, "<=",
                        get_bool(cfg, "assert_links"),
                        count_note(rep.empty_links)});
  ctx.checks.push_back({"stationary-tv", rep.tv_uniform <= tv_threshold,
                        rep.tv_uniform, tv_threshold, "<=", true, ""});
  // The variational bound must sit below the eigensolver's value; a small
  // allowance covers the solver residual.
  ctx.checks.push_back({"rayleigh-consistency",
                        rep.rayleigh_bound <= rep.lambda2_skeleton + 1e-8,
                        rep.rayleigh_bound, rep.lambda2_skeleton + 1e-8,
                        "<=", true, ""});
  ctx.checks.push_back({"rayleigh-lambda2",
                        rep.rayleigh_bound >= rep.tau - skeleton_slack,
                        rep.rayleigh_bound, rep.tau - skeleton_slack, ">=",
                        false, "measured slack, reported only"});
}

void run_mixing(const ExperimentConfig& cfg, RunContext& ctx) {
  MixingParams mp;
  mp.d = static_cast<int>(get_int(cfg, "d"));
  mp.tau = get_double(cfg, "tau");
  mp.k_max = static_cast<int>(get_int(cfg, "k_max"));
  mp.trials = get_uint(cfg, "trials");
  mp.bins = static_cast<int>(get_int(cfg, "bins"));
  mp.ratio_factor = get_double(cfg, "ratio_factor");
  mp.signal_factor = get_double(cfg, "signal_factor");
  mp.master_seed = cfg.master_seed;

  ctx.clock.start("mixing/run");
  MixingReport rep = mixing_run(mp);
  ctx.clock.stop();

  ctx.clock.start("mixing/write");
  CsvWriter decay((ctx.out / "decay.csv").string(),
                  {"k", "tv", "ratio", "usable", "bound", "checked", "ok"});
  for (int k = 0; k < static_cast<int>(rep.tv.size()); ++k) {
    bool has_ratio = k < static_cast<int>(rep.ratio.size());
    auto pos = std::find(rep.checked.begin(), rep.checked.end(), k);
    bool checked = pos != rep.checked.end();
    std::string ok_cell;
    if (checked) ok_cell = fmt(rep.ok[pos - rep.checked.begin()]);
    bool usable = rep.tv[k] >= 2.0 * rep.noise_floor;
    decay.row({fmt(k), fmt(rep.tv[k]),
               has_ratio ? fmt(rep.ratio[k]) : std::string(), fmt(usable),
               fmt(rep.bound), fmt(checked), ok_cell});
  }
  ctx.clock.stop();

  ctx.artifacts = {"decay.csv"};
  ctx.derived["tau"] = rep.tau;
  ctx.derived["p"] = rep.p;
  ctx.derived["noise_floor"] = rep.noise_floor;
  ctx.derived["slope"] = rep.slope;
  ctx.derived["ratio_bound"] = rep.bound;
  ctx.derived["checked_steps"] = rep.checked.size();

  double worst = 0.0;
  for (std::size_t i = 0; i < rep.checked.size(); ++i)
    worst = std::max(worst, rep.ratio[rep.checked[i]]);
  ctx.checks.push_back({"decay-ratio", rep.all_ok, worst, rep.bound, "<=",
                        get_bool(cfg, "assert_decay"),
                        rep.checked.empty() ? "no step cleared the signal bar"
                                            : ""});
  ctx.checks.push_back({"decay-signal", !rep.checked.empty(),
                        static_cast<double>(rep.checked.size()), 1.0, ">=",
                        false, ""});
}

void run_walk_comb(const ExperimentConfig& cfg, RunContext& ctx) {
  WalkCombParams wp;
  wp.ell_max = static_cast<int>(get_int(cfg, "ell_max"));
  wp.labels_max = static_cast<int>(get_int(cfg, "labels_max"));
  wp.budget = get_uint(cfg, "budget");
  wp.forest_count = static_cast<int>(get_int(cfg, "forest_count"));
  wp.forest_d = static_cast<int>(get_int(cfg, "forest_d"));
  wp.forest_p = get_double(cfg, "forest_p");
  wp.forest_trials = get_uint(cfg, "forest_trials");
  wp.tri_d = static_cast<int>(get_int(cfg, "tri_d"));
  wp.tri_p = get_double(cfg, "tri_p");
  wp.tri_trials = get_uint(cfg, "tri_trials");
  wp.tri_factor = get_double(cfg, "tri_factor");
  wp.master_seed = cfg.master_seed;
  wp.workers = cfg.workers;

  ctx.clock.start("walk-combinatorics/run");
  WalkCombReport rep = walk_comb_run(wp);
  ctx.clock.stop();

  ctx.clock.start("walk-combinatorics/write");
  CsvWriter classes((ctx.out / "classes.csv").string(),
                    {"ell", "labels", "distinct_edges", "singletons",
                     "excess", "count", "bound"});
  for (const auto& c : rep.classes)
    classes.row({fmt(c.ell), fmt(c.labels), fmt(c.distinct_edges),
                 fmt(c.singletons), fmt(c.excess), fmt(c.count), c.bound});
  CsvWriter sub((ctx.out / "subgraphs.csv").string(),
                {"kind", "vertices", "edges", "d", "p", "trials", "estimate",
                 "ci_low", "ci_high", "target_low", "target_high", "pass"});
  for (const auto& s : rep.subgraphs)
    sub.row({s.kind, fmt(s.vertices), fmt(s.edges), fmt(s.d), fmt(s.p),
             fmt(s.trials), fmt(s.estimate), fmt(s.ci_low), fmt(s.ci_high),
             fmt(s.target_low), fmt(s.target_high), fmt(s.pass)});
  ctx.clock.stop();

  ctx.artifacts = {"classes.csv", "subgraphs.csv"};
  ctx.derived["walks_checked"] = rep.walks_checked;
  ctx.derived["classes"] = rep.classes.size();
  ctx.derived["forests_passed"] = rep.forests_passed;

  ctx.checks.push_back({"walk-invariants", rep.invariant_violations == 0,
                        static_cast<double>(rep.invariant_violations), 0.0,
                        "<=", true, ""});
  ctx.checks.push_back({"class-count-bounds", rep.bound_violations == 0,
                        static_cast<double>(rep.bound_violations), 0.0, "<=",
                        true, ""});
  ctx.checks.push_back({"forest-probabilities",
                        rep.forests_passed == wp.forest_count,
                        static_cast<double>(rep.forests_passed),
                        static_cast<double>(wp.forest_count), ">=", true,
                        ""});
  const auto& tri = rep.subgraphs.back();
  ctx.checks.push_back({"triangle-upper", tri.estimate <= tri.target_high,
                        tri.estimate, tri.target_high, "<=", true,
                        "includes 3 sigma allowance"});
  ctx.checks.push_back({"triangle-lower", tri.estimate >= tri.target_low,
                        tri.estimate, tri.target_low, ">=", true,
                        "includes 3 sigma allowance"});
}

void run_shell(const ExperimentConfig& cfg, RunContext& ctx) {
  ShellParams sp;
  sp.d = static_cast<int>(get_int(cfg, "d"));
  sp.m = static_cast<int>(get_int(cfg, "m"));
  sp.tau = get_double(cfg, "tau");
  sp.gamma = get_double(cfg, "gamma");
  sp.resamples = static_cast<int>(get_int(cfg, "resamples"));
  sp.freq_required = static_cast<int>(get_int(cfg, "freq_required"));
  sp.c_spec = get_double(cfg, "c_spec");
  sp.c_l1 = get_double(cfg, "c_l1");
  sp.c_mass = get_double(cfg, "c_mass");
  sp.nd_factor = get_double(cfg, "nd_factor");
  sp.appc_factor = get_double(cfg, "appc_factor");
  sp.triples = static_cast<int>(get_int(cfg, "triples"));
  sp.master_seed = cfg.master_seed;
  sp.workers = cfg.workers;

  ctx.clock.start("shell-analysis/run");
  ShellReport rep = shell_run(sp);
  ctx.clock.stop();

  ctx.clock.start("shell-analysis/write");
  CsvWriter rs((ctx.out / "resamples.csv").string(),
               {"resample", "lambda_deflated", "spec_pass", "row_err",
                "max_l1", "max_l1_sq", "outlier_mass", "outlier_count",
                "all_below_eta", "nd_ratio", "max_t_dev", "max_ab_dev"});
  for (const auto& r : rep.rows)
    rs.row({fmt(r.resample), fmt(r.lambda_deflated), fmt(r.spec_pass),
            fmt(r.row_err), fmt(r.max_l1), fmt(r.max_l1_sq),
            fmt(r.outlier_mass), fmt(r.outlier_count),
            fmt(r.all_below_eta), fmt(r.nd_ratio), fmt(r.max_t_dev),
            fmt(r.max_ab_dev)});
  ctx.clock.stop();

  ctx.artifacts = {"resamples.csv"};
  ctx.derived["tau"] = rep.tau;
  ctx.derived["q"] = rep.q;
  ctx.derived["eta"] = rep.eta;
  ctx.derived["alpha"] = rep.alpha;
  ctx.derived["threshold_spec"] = rep.threshold_spec;
  ctx.derived["threshold_l1"] = rep.threshold_l1;
  ctx.derived["threshold_mass"] = rep.threshold_mass;
  ctx.derived["nd_bound"] = rep.nd_bound;
  ctx.derived["appc_bound"] = rep.appc_bound;

  double freq = static_cast<double>(sp.freq_required);
  // Row sums of a stochastic matrix are exact up to accumulation
  // round-off; 1e-12 is the double-precision reading of "exact" at this m.
  ctx.checks.push_back({"row-stochastic", rep.max_row_err <= 1e-12,
                        rep.max_row_err, 1e-12, "<=", true, ""});
  ctx.checks.push_back({"spectral-freq",
                        rep.spec_passes >= sp.freq_required,
                        static_cast<double>(rep.spec_passes), freq, ">=",
                        true, ""});
  ctx.checks.push_back({"row-l1-freq", rep.l1_passes >= sp.freq_required,
                        static_cast<double>(rep.l1_passes), freq, ">=", true,
                        ""});
  ctx.checks.push_back({"row-l1-squared-freq",
                        rep.l1_sq_passes >= sp.freq_required,
                        static_cast<double>(rep.l1_sq_passes), freq, ">=",
                        true, ""});
  ctx.checks.push_back({"outlier-mass-freq",
                        rep.mass_passes >= sp.freq_required,
                        static_cast<double>(rep.mass_passes), freq, ">=",
                        true, ""});
  ctx.checks.push_back({"nd-ratio", rep.max_nd_ratio <= rep.nd_bound,
                        rep.max_nd_ratio, rep.nd_bound, "<=", true, ""});
  ctx.checks.push_back({"ratio-identities-freq",
                        rep.appc_passes >= sp.freq_required,
                        static_cast<double>(rep.appc_passes), freq, ">=",
                        true, ""});
}

}  // namespace

int run_experiment(const ExperimentConfig& cfg) {
  RunContext ctx;
  ctx.out = fs::path(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(ctx.out, ec);
  if (ec) {
    std::cerr << "cannot create output directory '" << cfg.output_dir
              << "': " << ec.message() << "\n";
    return 1;
  }

  std::string status = "ok";
  int exit_code = 0;
  try {
    if (cfg.experiment == "tails") {
      run_tails(cfg, ctx);
    } else if (cfg.experiment == "sphere-spectrum") {
      run_sphere_spectrum(cfg, ctx);
    } else if (cfg.experiment == "hdx-verify") {
      run_hdx_verify(cfg, ctx);
    } else if (cfg.experiment == "tightness") {
      run_tightness(cfg, ctx);
    } else if (cfg.experiment == "mixing") {
      run_mixing(cfg, ctx);
    } else if (cfg.experiment == "walk-combinatorics") {
      run_walk_comb(cfg, ctx);
    } else if (cfg.experiment == "shell-analysis") {
      run_shell(cfg, ctx);
    } else {
      throw std::invalid_argument("unknown experiment '" + cfg.experiment +
                                  "'");
    }
  } catch (const std::exception& e) {
    status = std::string("error: ") + e.what();
    exit_code = 1;
  }

  if (exit_code == 0) {
    for (const CheckResult& c : ctx.checks)
      if (c.gating && !c.pass) exit_code = 2;
    if (exit_code == 2) status = "check_failure";
  }

  print_checks(ctx.checks);
  if (exit_code == 1) std::cout << status << "\n";

  // The manifest is written even when a check fails or the run errors out.
  nlohmann::json manifest =
      manifest_json(cfg, ctx.derived, ctx.checks, ctx.artifacts, status);
  write_text((ctx.out / "manifest.json").string(), manifest.dump(2) + "\n");
  write_timings((ctx.out / "timings.txt").string(), ctx.clock.timings());
  std::cout << "status: " << (exit_code == 0 ? "ok" : status) << " ("
            << (ctx.out / "manifest.json").string() << ")\n";
  return exit_code;
}

}  // namespace hdxgeo::cli
