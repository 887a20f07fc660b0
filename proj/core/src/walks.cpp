#include "hdxgeo/walks.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace hdxgeo {

namespace {

std::pair<int, int> norm_edge(int u, int v) {
  return u < v ? std::make_pair(u, v) : std::make_pair(v, u);
}

double wilson_bound(double phat, double n, double z, int sign) {
  double z2 = z * z;
  double center = phat + z2 / (2.0 * n);
  double half = z * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n));
  return (center + sign * half) / (1.0 + z2 / n);
}

}  // namespace

WalkShape decompose(const std::vector<int>& walk) {
  if (walk.size() < 2) throw std::invalid_argument("walk too short");
  if (walk.front() != walk.back())
    throw std::invalid_argument("walk is not closed");
  for (std::size_t k = 0; k + 1 < walk.size(); ++k)
    if (walk[k] == walk[k + 1])
      throw std::invalid_argument("walk repeats a vertex consecutively");

  WalkShape s;
  s.ell = static_cast<int>(walk.size()) - 1;
  s.vertices.assign(walk.begin(), walk.end() - 1);

  std::map<std::pair<int, int>, int> mult;
  for (int k = 0; k < s.ell; ++k) ++mult[norm_edge(walk[k], walk[k + 1])];
  std::set<int> vset(s.vertices.begin(), s.vertices.end());
  for (const auto& [e, m] : mult) {
    s.edges.push_back(e);
    s.multiplicity.push_back(m);
    if (m == 1) ++s.singleton_edges;
  }
  s.distinct_edges = static_cast<int>(s.edges.size());
  s.excess = s.distinct_edges - static_cast<int>(vset.size()) + 1;

  // 2-core: peel degree <= 1 vertices; peeled edges form the forest part.
  std::map<int, std::set<int>> adj;
  for (const auto& e : s.edges) {
    adj[e.first].insert(e.second);
    adj[e.second].insert(e.first);
  }
  std::set<std::pair<int, int>> forest;
  bool changed = true;
  while (changed) {
    changed = false;
    for (auto it = adj.begin(); it != adj.end();) {
      if (it->second.size() <= 1) {
        if (!it->second.empty()) {
          int nb = *it->second.begin();
          forest.insert(norm_edge(it->first, nb));
          adj[nb].erase(it->first);
        }
        it = adj.erase(it);
        changed = true;
      } else {
        ++it;
      }
    }
  }
  for (const auto& [v, nbs] : adj) {
    s.core_vertices.push_back(v);
    for (int nb : nbs)
      if (v < nb) s.core_edges.push_back({v, nb});
  }
  std::sort(s.core_edges.begin(), s.core_edges.end());
  s.core_excess =
      s.core_vertices.empty()
          ? 0
          : static_cast<int>(s.core_edges.size()) -
                static_cast<int>(s.core_vertices.size()) + 1;
  for (const auto& e : forest) {
    s.forest_edges.push_back(e);
    s.forest_vertices.push_back(e.first);
    s.forest_vertices.push_back(e.second);
  }
  std::sort(s.forest_vertices.begin(), s.forest_vertices.end());
  s.forest_vertices.erase(
      std::unique(s.forest_vertices.begin(), s.forest_vertices.end()),
      s.forest_vertices.end());

  if (!s.core_vertices.empty()) {
    std::set<int> junc;
    for (const auto& [v, nbs] : adj)
      if (nbs.size() >= 3) junc.insert(v);
    // A 2-regular core is a single cycle; it gets its minimum-label vertex
    // as the designated junction so the multigraph is well defined.
    if (junc.empty()) junc.insert(s.core_vertices.front());
    s.junctions.assign(junc.begin(), junc.end());

    // Chains between junctions, walked edge by edge through degree-2
    // vertices.  Each chain is consumed once via the visited-edge set.
    std::map<int, std::vector<std::pair<int, int>>> inc;  // v -> (nb, id)
    int next_id = 0;
    std::map<std::pair<int, int>, int> edge_id;
    for (const auto& e : s.core_edges) edge_id[e] = next_id++;
    for (const auto& e : s.core_edges) {
      inc[e.first].push_back({e.second, edge_id[e]});
      inc[e.second].push_back({e.first, edge_id[e]});
    }
    std::vector<bool> used(s.core_edges.size(), false);
    for (int j : s.junctions) {
      for (const auto& [first_nb, first_id] : inc[j]) {
        if (used[first_id]) continue;
        used[first_id] = true;
        int cur = first_nb;
        int via = first_id;
        while (!junc.count(cur)) {
          // degree-2 vertex: continue along the edge we did not arrive by
          const auto& two = inc[cur];
          const auto& next = two[0].second == via ? two[1] : two[0];
          via = next.second;
          used[via] = true;
          cur = next.first;
        }
        s.junction_edges.push_back(j <= cur ? std::make_pair(j, cur)
                                            : std::make_pair(cur, j));
      }
    }
    std::sort(s.junction_edges.begin(), s.junction_edges.end());
    s.junction_excess = static_cast<int>(s.junction_edges.size()) -
                        static_cast<int>(s.junctions.size()) + 1;
  }
  return s;
}

ShapeEnumeration enumerate_shapes(int ell, int n_labels,
                                  std::uint64_t budget) {
  if (ell < 1) throw std::invalid_argument("walk length must be positive");
  if (n_labels < 1) throw std::invalid_argument("need at least one label");
  double space = std::pow(static_cast<double>(n_labels), ell);
  if (space > static_cast<double>(budget)) {
    std::ostringstream os;
    os << "enumeration budget exceeded: " << n_labels << "^" << ell
       << " sequences, budget " << budget;
    throw std::runtime_error(os.str());
  }

  ShapeEnumeration out;
  out.ell = ell;
  out.labels = n_labels;
  std::map<std::tuple<int, int, int>, std::uint64_t> classes;

  std::vector<int> digits(ell, 0), walk(ell + 1), canon(ell);
  std::vector<int> rank(n_labels);
  while (true) {
    bool valid = true;
    for (int k = 0; k < ell && valid; ++k)
      if (digits[k] == digits[(k + 1) % ell]) valid = false;
    if (valid) {
      std::copy(digits.begin(), digits.end(), walk.begin());
      walk[ell] = digits[0];
      WalkShape s = decompose(walk);
      ++classes[{s.distinct_edges, s.singleton_edges, s.excess}];
      ++out.total_walks;
      std::fill(rank.begin(), rank.end(), -1);
      int next = 0;
      for (int k = 0; k < ell; ++k) {
        if (rank[digits[k]] < 0) rank[digits[k]] = next++;
        canon[k] = rank[digits[k]];
      }
      ++out.canonical[canon];
    }
    int pos = ell - 1;
    while (pos >= 0 && digits[pos] == n_labels - 1) digits[pos--] = 0;
    if (pos < 0) break;
    ++digits[pos];
  }
  for (const auto& [key, count] : classes) {
    ShapeClass c;
    std::tie(c.distinct_edges, c.singleton_edges, c.excess) = key;
    c.count = count;
    out.classes.push_back(c);
  }
  return out;
}

BigInt count_bound(int ell, int n, int a, int b, int c) {
  if (ell < 1 || n < 1) throw std::invalid_argument("need ell, n >= 1");
  auto in_range = [ell](int v) { return v >= 0 && v <= ell; };
  if (!in_range(a) || !in_range(b) || !in_range(c))
    throw std::invalid_argument("class statistics must lie in [0, ell]");
  if (a - c + 1 < 0)
    throw std::domain_error("bound exponent a - c + 1 is negative");
  BigInt nn = n, ll = ell;
  return boost::multiprecision::pow(nn, a - c + 1) *
         boost::multiprecision::pow(ll, 2 * (ell - b)) *
         boost::multiprecision::pow(ll, 2 * c);
}

PatternEstimate subgraph_probability_mc(
    const std::vector<std::pair<int, int>>& pattern_edges, int vertices,
    int d, double p, std::uint64_t trials, RandomStream& rng) {
  if (vertices < 1 || vertices > 8)
    throw std::invalid_argument("pattern must have 1 to 8 vertices");
  if (d < 2) throw std::invalid_argument("invalid dimension");
  if (!(p > 0.0 && p <= 1.0))
    throw std::invalid_argument("cap measure must lie in (0, 1]");
  if (trials == 0) throw std::invalid_argument("need at least one trial");
  for (const auto& [u, v] : pattern_edges)
    if (u < 0 || v < 0 || u >= vertices || v >= vertices || u == v)
      throw std::invalid_argument("malformed pattern edge");

  const double tau = tau_of(p, d).tau;
  std::vector<UnitVector> pts(vertices);
  std::uint64_t hits = 0;
  for (std::uint64_t t = 0; t < trials; ++t) {
    for (int i = 0; i < vertices; ++i) pts[i] = sample_uniform_sphere(d, rng);
    bool all = true;
    for (const auto& [u, v] : pattern_edges)
      if (pts[u].dot(pts[v]) < tau) {
        all = false;
        break;
      }
    if (all) ++hits;
  }

  PatternEstimate est;
  est.trials = trials;
  est.hits = hits;
  est.estimate = static_cast<double>(hits) / trials;
  const double z = 1.959963985;
  est.ci_low = wilson_bound(est.estimate, static_cast<double>(trials), z, -1);
  est.ci_high = wilson_bound(est.estimate, static_cast<double>(trials), z, +1);
  est.below_resolution = hits == 0;
  return est;
}

TraceEstimate trace_power_mc(int n, int d, double p, int ell,
                             std::uint64_t trials, RandomStream& rng) {
  if (n < 2 || n > 64)
    throw std::invalid_argument("need 2 <= n <= 64 for dense powers");
  if (ell < 2 || ell > 8 || ell % 2 != 0)
    throw std::invalid_argument("need even ell in [2, 8]");
  if (d < 2) throw std::invalid_argument("invalid dimension");
  if (!(p >= 0.0 && p <= 1.0))
    throw std::invalid_argument("cap measure must lie in [0, 1]");
  if (trials < 2) throw std::invalid_argument("need at least two trials");

  const double tau = p > 0.0 ? tau_of(p, d).tau : 2.0;  // p=0: no edges
  std::vector<UnitVector> pts(n);
  Eigen::MatrixXd m(n, n), power(n, n);
  double sum = 0.0, sum_sq = 0.0;
  for (std::uint64_t t = 0; t < trials; ++t) {
    for (int i = 0; i < n; ++i) pts[i] = sample_uniform_sphere(d, rng);
    m.setZero();
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        double entry = (pts[i].dot(pts[j]) >= tau ? 1.0 : 0.0) - p;
        m(i, j) = entry;
        m(j, i) = entry;
      }
    power = m;
    for (int k = 1; k < ell; ++k) power = power * m;
    double tr = power.trace();
    sum += tr;
    sum_sq += tr * tr;
  }

  TraceEstimate est;
  est.ell = ell;
  est.trials = trials;
  est.mean = sum / trials;
  double var = (sum_sq - sum * sum / trials) / (trials - 1);
  est.std_error = std::sqrt(std::max(0.0, var) / trials);
  return est;
}

}  // namespace hdxgeo
