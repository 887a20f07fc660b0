#pragma once

#include <cstdint>
#include <tuple>
#include <vector>

namespace hdxgeo {

// Undirected weighted graph in CSR form.  Neighbor lists are sorted by
// vertex id; every undirected edge appears in both rows.  Weights must be
// positive; degree[] holds weighted row sums.
struct WeightedGraph {
  int n = 0;
  std::vector<std::int64_t> row_ptr;  // size n + 1
  std::vector<int> col;
  std::vector<double> w;
  std::vector<double> degree;
  std::int64_t edge_count = 0;   // undirected edges
  double total_weight = 0.0;     // sum of undirected edge weights

  int deg_count(int v) const {
    return static_cast<int>(row_ptr[v + 1] - row_ptr[v]);
  }
};

// Build from an undirected edge list (u, v, weight); (u, v) and (v, u) must
// not both appear.  Throws on self-loops, duplicate edges, nonpositive
// weights, or ids outside [0, n).
WeightedGraph make_graph(int n,
                         const std::vector<std::tuple<int, int, double>>& edges);

// Connectivity over all n vertices (an isolated vertex makes the graph
// disconnected).
bool is_connected(const WeightedGraph& g);

// Vertices with degree > 0, ascending.
std::vector<int> non_isolated(const WeightedGraph& g);

// Subgraph induced on `keep` (ascending vertex ids).  New ids follow the
// order of `keep`.
WeightedGraph induced_subgraph(const WeightedGraph& g,
                               const std::vector<int>& keep);

}  // namespace hdxgeo
