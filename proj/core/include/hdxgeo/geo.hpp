#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "hdxgeo/graph.hpp"
#include "hdxgeo/sphere.hpp"

namespace hdxgeo {

// Random geometric graph on the unit sphere: n i.i.d. uniform points,
// edge iff <u_i, u_j> >= tau with tau = tau_of(p, d).  Ties (exact
// equality) count as edges.  The sample is a pure function of
// (n, d, p, seed).

struct PointCloud {
  int n = 0;
  int d = 0;
  Eigen::MatrixXd pts;  // n x d, rows are unit vectors
};

struct GeoGraph {
  PointCloud cloud;
  double p = 0.0;
  double tau = 1.0;
  std::uint64_t seed = 0;
  std::vector<std::vector<int>> adj;  // sorted neighbor lists
  std::int64_t edge_count = 0;

  bool adjacent(int u, int v) const;
};

// Guard against accidental quadratic blowups; n*(n-1)/2 pair evaluations
// above the budget raise a resource error.  Budget is configurable by the
// caller.
struct GeoBudget {
  std::int64_t max_pair_evals = 500'000'000;
};

GeoGraph sample_geo_graph(int n, int d, double p, std::uint64_t seed,
                          const GeoBudget& budget = {});

// Downward-closed 2-complex on the triangles of g: weight of an edge is
// the number of triangles containing it (edges in no triangle are
// dropped), weight of a vertex is the sum of its incident edge weights.
struct TwoComplex {
  int n = 0;
  std::int64_t triangle_count = 0;
  WeightedGraph skeleton;                    // edges weighted by triangle count
  std::vector<std::int64_t> vertex_weight;   // 2 * (#triangles at v)
  std::vector<std::array<int, 3>> triangles;  // ascending triples, lexicographic;
                                              // empty when not stored
  bool triangles_stored = false;
};

TwoComplex build_two_complex(const GeoGraph& g, bool store_triangles = true);

// Link of v: graph on the neighbors of v that share a triangle with v,
// with an edge per triangle through v.  kappa[i] is the inner product of
// link vertex i with the center point.  original_id maps link ids back to
// graph ids.  An empty link (no triangles at v) is valid output.
struct LinkGraph {
  int center = -1;
  WeightedGraph graph;  // unit edge weights
  std::vector<int> original_id;
  std::vector<double> kappa;
};

LinkGraph link_of(const GeoGraph& g, int v);

// Weighted 1-skeleton of the complex plus its connectivity flag
// (connectivity is judged on the vertices that survive in the skeleton, of
// which there must be at least one; an empty complex reports false).
struct SkeletonResult {
  WeightedGraph graph;          // on surviving vertices, re-indexed
  std::vector<int> original_id;
  bool connected = false;
};

SkeletonResult one_skeleton(const TwoComplex& c);

// Plain-text serialization: header line with a format tag and version,
// then "n d p tau seed", the sorted edge list and the sorted triangle
// list.  Floating-point fields are printed with enough digits to
// round-trip, so parse followed by write reproduces the bytes exactly.
struct SerializedComplex {
  int n = 0;
  int d = 0;
  double p = 0.0;
  double tau = 1.0;
  std::uint64_t seed = 0;
  std::vector<std::pair<int, int>> edges;
  std::vector<std::array<int, 3>> triangles;
};

SerializedComplex to_serialized(const GeoGraph& g, const TwoComplex& c);
void write_complex(std::ostream& os, const SerializedComplex& sc);
SerializedComplex parse_complex(std::istream& is);

}  // namespace hdxgeo
