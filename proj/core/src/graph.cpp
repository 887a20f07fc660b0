#include "hdxgeo/graph.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace hdxgeo {

WeightedGraph make_graph(
    int n, const std::vector<std::tuple<int, int, double>>& edges) {
  WeightedGraph g;
  g.n = n;
  g.row_ptr.assign(n + 1, 0);
  std::vector<std::tuple<int, int, double>> dir;
  dir.reserve(edges.size() * 2);
  for (const auto& [u, v, wt] : edges) {
    if (u < 0 || u >= n || v < 0 || v >= n)
      throw std::invalid_argument("make_graph: vertex id out of range");
    if (u == v) throw std::invalid_argument("make_graph: self-loop");
    if (!(wt > 0.0)) throw std::invalid_argument("make_graph: weight <= 0");
    dir.emplace_back(u, v, wt);
    dir.emplace_back(v, u, wt);
  }
  std::sort(dir.begin(), dir.end());
  for (std::size_t i = 1; i < dir.size(); ++i) {
    if (std::get<0>(dir[i]) == std::get<0>(dir[i - 1]) &&
        std::get<1>(dir[i]) == std::get<1>(dir[i - 1]))
      throw std::invalid_argument("make_graph: duplicate edge");
  }
  for (const auto& [u, v, wt] : dir) {
    (void)v;
    (void)wt;
    ++g.row_ptr[u + 1];
  }
  for (int v = 0; v < n; ++v) g.row_ptr[v + 1] += g.row_ptr[v];
  g.col.resize(dir.size());
  g.w.resize(dir.size());
  std::vector<std::int64_t> cursor(g.row_ptr.begin(), g.row_ptr.end() - 1);
  for (const auto& [u, v, wt] : dir) {
    const std::int64_t at = cursor[u]++;
    g.col[at] = v;
    g.w[at] = wt;
  }
  g.degree.assign(n, 0.0);
  for (int v = 0; v < n; ++v)
    for (std::int64_t i = g.row_ptr[v]; i < g.row_ptr[v + 1]; ++i)
      g.degree[v] += g.w[i];
  g.edge_count = static_cast<std::int64_t>(edges.size());
  g.total_weight = 0.0;
  for (const auto& [u, v, wt] : edges) {
    (void)u;
    (void)v;
    g.total_weight += wt;
  }
  return g;
}

bool is_connected(const WeightedGraph& g) {
  if (g.n == 0) return true;
  std::vector<char> seen(g.n, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int reached = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (std::int64_t i = g.row_ptr[v]; i < g.row_ptr[v + 1]; ++i) {
      const int u = g.col[i];
      if (!seen[u]) {
        seen[u] = 1;
        ++reached;
        stack.push_back(u);
      }
    }
  }
  return reached == g.n;
}

std::vector<int> non_isolated(const WeightedGraph& g) {
  std::vector<int> keep;
  for (int v = 0; v < g.n; ++v)
    if (g.row_ptr[v + 1] > g.row_ptr[v]) keep.push_back(v);
  return keep;
}

WeightedGraph induced_subgraph(const WeightedGraph& g,
                               const std::vector<int>& keep) {
  std::vector<int> newid(g.n, -1);
  for (std::size_t i = 0; i < keep.size(); ++i) {
    const int v = keep[i];
    if (v < 0 || v >= g.n)
      throw std::invalid_argument("induced_subgraph: vertex out of range");
    newid[v] = static_cast<int>(i);
  }
  std::vector<std::tuple<int, int, double>> edges;
  for (int v : keep)
    for (std::int64_t i = g.row_ptr[v]; i < g.row_ptr[v + 1]; ++i) {
      const int u = g.col[i];
      if (u > v && newid[u] >= 0)
        edges.emplace_back(newid[v], newid[u], g.w[i]);
    }
  return make_graph(static_cast<int>(keep.size()), edges);
}

}  // namespace hdxgeo
