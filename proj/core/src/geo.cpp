#include "hdxgeo/geo.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "hdxgeo/rng.hpp"

namespace hdxgeo {

bool GeoGraph::adjacent(int u, int v) const {
  const auto& a = adj[u];
  return std::binary_search(a.begin(), a.end(), v);
}

GeoGraph sample_geo_graph(int n, int d, double p, std::uint64_t seed,
                          const GeoBudget& budget) {
  if (n < 1) throw std::invalid_argument("sample_geo_graph: n < 1");
  if (d < 2) throw std::invalid_argument("sample_geo_graph: d < 2");
  if (!(p >= 0.0 && p <= 1.0))
    throw std::domain_error("sample_geo_graph: p outside [0, 1]");
  const std::int64_t pairs = static_cast<std::int64_t>(n) * (n - 1) / 2;
  if (pairs > budget.max_pair_evals)
    throw std::runtime_error(
        "sample_geo_graph: resource guard: " + std::to_string(pairs) +
        " pair evaluations exceed budget " +
        std::to_string(budget.max_pair_evals));

  GeoGraph g;
  g.cloud.n = n;
  g.cloud.d = d;
  g.cloud.pts.resize(n, d);
  g.p = p;
  g.seed = seed;
  g.tau = tau_of(p, d).tau;

  SeedSplitter split(seed);
  for (int i = 0; i < n; ++i) {
    RandomStream rs = split.stream("geo-point", static_cast<std::uint64_t>(i));
    g.cloud.pts.row(i) = sample_uniform_sphere(d, rs).transpose();
  }

  g.adj.assign(n, {});
  // Exact dot products against the threshold; ties count as edges.
  for (int i = 0; i < n; ++i) {
    const auto vi = g.cloud.pts.row(i);
    for (int j = i + 1; j < n; ++j) {
      if (vi.dot(g.cloud.pts.row(j)) >= g.tau) {
        g.adj[i].push_back(j);
        g.adj[j].push_back(i);
        ++g.edge_count;
      }
    }
  }
  return g;
}

namespace {

// Sorted-intersection walk; calls fn(w) for every w adjacent to both u and v.
template <typename Fn>
void common_neighbors(const std::vector<int>& a, const std::vector<int>& b,
                      Fn&& fn) {
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j])
      ++i;
    else if (a[i] > b[j])
      ++j;
    else {
      fn(a[i]);
      ++i;
      ++j;
    }
  }
}

}  // namespace

TwoComplex build_two_complex(const GeoGraph& g, bool store_triangles) {
  const int n = g.cloud.n;
  TwoComplex c;
  c.n = n;
  c.triangles_stored = store_triangles;
  c.vertex_weight.assign(n, 0);

  std::vector<std::tuple<int, int, double>> edges;
  for (int u = 0; u < n; ++u) {
    for (int v : g.adj[u]) {
      if (v <= u) continue;
      std::int64_t tri = 0;
      common_neighbors(g.adj[u], g.adj[v], [&](int w) {
        ++tri;
        if (store_triangles && w > v)
          c.triangles.push_back({u, v, w});
      });
      if (tri > 0) edges.emplace_back(u, v, static_cast<double>(tri));
      c.triangle_count += tri;  // counts each triangle once per edge
    }
  }
  c.triangle_count /= 3;
  c.skeleton = make_graph(n, edges);
  for (int v = 0; v < n; ++v)
    c.vertex_weight[v] = static_cast<std::int64_t>(c.skeleton.degree[v]);
  if (store_triangles) std::sort(c.triangles.begin(), c.triangles.end());
  return c;
}

LinkGraph link_of(const GeoGraph& g, int v) {
  if (v < 0 || v >= g.cloud.n)
    throw std::invalid_argument("link_of: vertex out of range");
  LinkGraph link;
  link.center = v;
  const auto& nb = g.adj[v];
  const int m = static_cast<int>(nb.size());
  std::vector<int> idx(g.cloud.n, -1);
  for (int i = 0; i < m; ++i) idx[nb[i]] = i;
  std::vector<std::tuple<int, int, double>> edges;
  std::vector<char> in_triangle(m, 0);
  for (int i = 0; i < m; ++i) {
    common_neighbors(g.adj[nb[i]], nb, [&](int w) {
      const int j = idx[w];
      if (j > i) {
        edges.emplace_back(i, j, 1.0);
        in_triangle[i] = in_triangle[j] = 1;
      }
    });
  }
  // Keep only neighbors that share at least one triangle with v.
  std::vector<int> keep;
  std::vector<int> remap(m, -1);
  for (int i = 0; i < m; ++i)
    if (in_triangle[i]) {
      remap[i] = static_cast<int>(keep.size());
      keep.push_back(i);
    }
  std::vector<std::tuple<int, int, double>> kept_edges;
  kept_edges.reserve(edges.size());
  for (auto& [a, b, wt] : edges)
    kept_edges.emplace_back(remap[a], remap[b], wt);
  link.graph = make_graph(static_cast<int>(keep.size()), kept_edges);
  link.original_id.reserve(keep.size());
  link.kappa.reserve(keep.size());
  const auto center_pt = g.cloud.pts.row(v);
  for (int i : keep) {
    link.original_id.push_back(nb[i]);
    link.kappa.push_back(center_pt.dot(g.cloud.pts.row(nb[i])));
  }
  return link;
}

SkeletonResult one_skeleton(const TwoComplex& c) {
  SkeletonResult r;
  r.original_id = non_isolated(c.skeleton);
  if (r.original_id.empty()) {
    r.graph = WeightedGraph{};
    r.graph.row_ptr.assign(1, 0);
    r.connected = false;
    return r;
  }
  r.graph = induced_subgraph(c.skeleton, r.original_id);
  r.connected = is_connected(r.graph);
  return r;
}

SerializedComplex to_serialized(const GeoGraph& g, const TwoComplex& c) {
  if (!c.triangles_stored)
    throw std::invalid_argument(
        "to_serialized: complex was built without stored triangles");
  SerializedComplex sc;
  sc.n = g.cloud.n;
  sc.d = g.cloud.d;
  sc.p = g.p;
  sc.tau = g.tau;
  sc.seed = g.seed;
  for (int u = 0; u < g.cloud.n; ++u)
    for (int v : g.adj[u])
      if (v > u) sc.edges.emplace_back(u, v);
  std::sort(sc.edges.begin(), sc.edges.end());
  sc.triangles = c.triangles;
  return sc;
}

void write_complex(std::ostream& os, const SerializedComplex& sc) {
  char buf[128];
  os << "hdxgeo-complex 1\n";
  std::snprintf(buf, sizeof buf, "%d %d %.17g %.17g %" PRIu64 "\n", sc.n,
                sc.d, sc.p, sc.tau, sc.seed);
  os << buf;
  os << "E " << sc.edges.size() << "\n";
  for (const auto& [u, v] : sc.edges) os << u << " " << v << "\n";
  os << "T " << sc.triangles.size() << "\n";
  for (const auto& t : sc.triangles)
    os << t[0] << " " << t[1] << " " << t[2] << "\n";
}

SerializedComplex parse_complex(std::istream& is) {
  SerializedComplex sc;
  std::string tag;
  int version = 0;
  if (!(is >> tag >> version) || tag != "hdxgeo-complex" || version != 1)
    throw std::runtime_error("parse_complex: bad header");
  if (!(is >> sc.n >> sc.d >> sc.p >> sc.tau >> sc.seed))
    throw std::runtime_error("parse_complex: bad parameter line");
  std::size_t count = 0;
  if (!(is >> tag >> count) || tag != "E")
    throw std::runtime_error("parse_complex: bad edge section");
  sc.edges.resize(count);
  for (auto& [u, v] : sc.edges)
    if (!(is >> u >> v)) throw std::runtime_error("parse_complex: bad edge");
  if (!(is >> tag >> count) || tag != "T")
    throw std::runtime_error("parse_complex: bad triangle section");
  sc.triangles.resize(count);
  for (auto& t : sc.triangles)
    if (!(is >> t[0] >> t[1] >> t[2]))
      throw std::runtime_error("parse_complex: bad triangle");
  return sc;
}

}  // namespace hdxgeo
