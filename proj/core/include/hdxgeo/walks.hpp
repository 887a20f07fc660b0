#pragma once

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "hdxgeo/sphere.hpp"

namespace hdxgeo {

using BigInt = boost::multiprecision::cpp_int;

// Decomposition of a closed walk into the structures the counting argument
// tracks: the simple graph of walked edges, its 2-core, the forest part,
// and the junction multigraph.  Vertices keep their original labels.
struct WalkShape {
  int ell = 0;                     // number of steps
  std::vector<int> vertices;       // i_0 .. i_{ell-1}

  std::vector<std::pair<int, int>> edges;  // distinct, u < v, sorted
  std::vector<int> multiplicity;           // parallel to edges
  int distinct_edges = 0;   // e(W)
  int singleton_edges = 0;  // edges walked exactly once
  int excess = 0;           // |E| - |V| + 1 of the walk graph

  std::vector<int> core_vertices;                // 2-core: all degrees >= 2
  std::vector<std::pair<int, int>> core_edges;
  int core_excess = 0;

  std::vector<int> forest_vertices;              // endpoints of forest edges
  std::vector<std::pair<int, int>> forest_edges;

  // Junctions: core vertices of core-degree >= 3; a 2-regular core (a
  // single cycle) designates its minimum-label vertex instead.  The
  // junction multigraph keeps parallel edges and self-loops (u == v); a
  // self-loop adds 2 to the degree of its vertex.
  std::vector<int> junctions;
  std::vector<std::pair<int, int>> junction_edges;  // u <= v, sorted
  int junction_excess = 0;
};

// walk is the explicit vertex sequence including the closing vertex:
// i_0, i_1, ..., i_ell with i_ell == i_0.  A sequence that does not close
// or that repeats a vertex on consecutive steps is rejected.
WalkShape decompose(const std::vector<int>& walk);

struct ShapeClass {
  int distinct_edges = 0;
  int singleton_edges = 0;
  int excess = 0;
  std::uint64_t count = 0;  // labeled walks in this class
};

struct ShapeEnumeration {
  int ell = 0;
  int labels = 0;
  std::uint64_t total_walks = 0;
  std::vector<ShapeClass> classes;  // sorted by (e, sing, exc)
  // First-visit-relabeled walk sequence -> number of labeled walks mapping
  // to it.  The class sizes of the counting argument are sums over these.
  std::map<std::vector<int>, std::uint64_t> canonical;
};

// Exhaustive enumeration of the closed walks of length ell on the complete
// graph with n_labels vertices (consecutive vertices distinct, cyclically).
// n_labels^ell beyond the budget raises a resource error.
ShapeEnumeration enumerate_shapes(int ell, int n_labels,
                                  std::uint64_t budget = 10'000'000);

// Counting bound n^(a-c+1) * ell^(2(ell-b)) * ell^(2c) as an exact big
// integer, for a class with a distinct edges, b singletons, c excess.
// a - c + 1 < 0 has no integer value and raises a domain error.
BigInt count_bound(int ell, int n, int a, int b, int c);

struct PatternEstimate {
  std::uint64_t trials = 0;
  std::uint64_t hits = 0;
  double estimate = 0.0;
  double ci_low = 0.0;   // Wilson 95%
  double ci_high = 0.0;
  bool below_resolution = false;  // no hits: only the upper bound binds
};

// Probability that `vertices` i.i.d. uniform sphere points realize every
// pattern edge at the threshold of the measure-p cap.  Patterns are capped
// at 8 vertices.
PatternEstimate subgraph_probability_mc(
    const std::vector<std::pair<int, int>>& pattern_edges, int vertices,
    int d, double p, std::uint64_t trials, RandomStream& rng);

struct TraceEstimate {
  int ell = 0;
  std::uint64_t trials = 0;
  double mean = 0.0;       // estimate of E tr((A - E A)^ell)
  double std_error = 0.0;
};

// Monte Carlo E tr((A - E A)^ell) for the adjacency of n i.i.d. sphere
// points at cap measure p, with exact centering p off the diagonal and a
// zero diagonal.  Dense powers keep n <= 64 and even ell <= 8.
TraceEstimate trace_power_mc(int n, int d, double p, int ell,
                             std::uint64_t trials, RandomStream& rng);

}  // namespace hdxgeo
