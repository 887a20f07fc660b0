#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "hdxgeo/sphere.hpp"
#include "hdxgeo/walks.hpp"
#include "test_util.hpp"

using namespace hdxgeo;

namespace {

int distinct_vertex_count(const WalkShape& s) {
  std::set<int> uniq(s.vertices.begin(), s.vertices.end());
  return static_cast<int>(uniq.size());
}

}  // namespace

TEST_CASE("decompose rejects malformed sequences") {
  CHECK_THROWS_AS(decompose({0}), std::invalid_argument);
  CHECK_THROWS_AS(decompose({0, 1, 2}), std::invalid_argument);
  CHECK_THROWS_AS(decompose({0, 0, 1, 0}), std::invalid_argument);
  CHECK_THROWS_AS(decompose({0, 1, 1, 0}), std::invalid_argument);
}

TEST_CASE("backtracking walk is pure forest") {
  WalkShape s = decompose({0, 1, 0});
  CHECK(s.ell == 2);
  CHECK(s.distinct_edges == 1);
  CHECK(s.singleton_edges == 0);
  CHECK(s.excess == 0);
  REQUIRE(s.multiplicity.size() == 1);
  CHECK(s.multiplicity[0] == 2);
  CHECK(s.core_vertices.empty());
  CHECK(s.core_edges.empty());
  CHECK(s.forest_edges.size() == 1);
  CHECK(s.junctions.empty());
  CHECK(s.junction_edges.empty());
}

TEST_CASE("hexagon walk is a single cycle") {
  WalkShape s = decompose({0, 1, 2, 3, 4, 5, 0});
  CHECK(s.distinct_edges == 6);
  CHECK(s.singleton_edges == 6);
  CHECK(s.excess == 1);
  CHECK(s.core_vertices.size() == 6);
  CHECK(s.core_excess == 1);
  CHECK(s.forest_edges.empty());
  // A 2-regular core designates its minimum label as the junction and
  // the cycle collapses to one self-loop.
  REQUIRE(s.junctions.size() == 1);
  CHECK(s.junctions[0] == 0);
  REQUIRE(s.junction_edges.size() == 1);
  CHECK(s.junction_edges[0] == std::pair<int, int>{0, 0});
  CHECK(s.junction_excess == 1);
}

TEST_CASE("theta walk exposes two junctions with three parallel chains") {
  // Three chains between 0 and 1: direct, via 2, via 3.
  WalkShape s = decompose({0, 1, 2, 0, 3, 1, 0});
  CHECK(s.distinct_edges == 5);
  CHECK(s.singleton_edges == 4);
  CHECK(s.excess == 2);
  CHECK(s.core_vertices.size() == 4);
  CHECK(s.forest_edges.empty());
  CHECK(s.junctions == std::vector<int>{0, 1});
  REQUIRE(s.junction_edges.size() == 3);
  for (const auto& e : s.junction_edges)
    CHECK(e == std::pair<int, int>{0, 1});
  CHECK(s.junction_excess == 2);
  // Walked-edge bound is tight here: 2 e(W) = ell + singletons.
  CHECK(2 * s.distinct_edges == s.ell + s.singleton_edges);
}

TEST_CASE("lollipop walk separates forest from core") {
  WalkShape s = decompose({0, 1, 2, 3, 1, 0});
  CHECK(s.distinct_edges == 4);
  CHECK(s.excess == 1);
  CHECK(s.core_vertices == std::vector<int>{1, 2, 3});
  CHECK(s.core_excess == 1);
  REQUIRE(s.forest_edges.size() == 1);
  CHECK(s.forest_edges[0] == std::pair<int, int>{0, 1});
  REQUIRE(s.junctions.size() == 1);
  CHECK(s.junctions[0] == 1);
  REQUIRE(s.junction_edges.size() == 1);
  CHECK(s.junction_edges[0] == std::pair<int, int>{1, 1});
}

TEST_CASE("decomposition statistics are label-invariant") {
  WalkShape a = decompose({0, 1, 2, 0});
  WalkShape b = decompose({7, 3, 9, 7});
  CHECK(a.distinct_edges == b.distinct_edges);
  CHECK(a.singleton_edges == b.singleton_edges);
  CHECK(a.excess == b.excess);
  CHECK(a.core_vertices.size() == b.core_vertices.size());
  CHECK(a.junction_edges.size() == b.junction_edges.size());
}

TEST_CASE("exhaustive decomposition invariants up to length six") {
  for (int ell = 2; ell <= 6; ++ell) {
    for (int labels = 2; labels <= 5; ++labels) {
      ShapeEnumeration e = enumerate_shapes(ell, labels);

      // Closed non-backtracking sequence count on the complete graph.
      const double expect = std::pow(labels - 1.0, ell) +
                            (labels - 1.0) * (ell % 2 == 0 ? 1.0 : -1.0);
      CHECK(static_cast<double>(e.total_walks) == expect);

      std::uint64_t class_sum = 0, canon_sum = 0;
      for (const auto& c : e.classes) {
        class_sum += c.count;
        CHECK(count_bound(ell, labels, c.distinct_edges, c.singleton_edges,
                          c.excess) >= BigInt(c.count));
      }
      CHECK(class_sum == e.total_walks);

      for (const auto& [canon, count] : e.canonical) {
        canon_sum += count;
        std::vector<int> closed = canon;
        closed.push_back(canon[0]);
        WalkShape s = decompose(closed);

        int mult_sum = 0, singles = 0;
        for (int m : s.multiplicity) {
          mult_sum += m;
          if (m == 1) ++singles;
        }
        CHECK(mult_sum == ell);
        CHECK(singles == s.singleton_edges);
        CHECK(distinct_vertex_count(s) == s.distinct_edges - s.excess + 1);
        CHECK(s.forest_edges.size() + s.core_edges.size() ==
              static_cast<std::size_t>(s.distinct_edges));

        // Removing the forest preserves the excess, and so does the
        // contraction to the junction multigraph.
        CHECK(s.core_excess == s.excess);
        if (s.excess >= 1) {
          CHECK(s.junction_excess == s.excess);
          CHECK(static_cast<int>(s.junction_edges.size()) <= 3 * s.excess);
          CHECK(!s.junctions.empty());
        } else {
          CHECK(s.core_vertices.empty());
          CHECK(s.junction_edges.empty());
        }

        // Every junction lives in the core; every core vertex of core
        // degree >= 3 is a junction.
        std::set<int> core(s.core_vertices.begin(), s.core_vertices.end());
        std::map<int, int> core_deg;
        for (const auto& ed : s.core_edges) {
          ++core_deg[ed.first];
          ++core_deg[ed.second];
        }
        std::set<int> junc(s.junctions.begin(), s.junctions.end());
        for (int j : s.junctions) CHECK(core.count(j) == 1);
        for (const auto& [v, deg] : core_deg)
          if (deg >= 3) CHECK(junc.count(v) == 1);

        // Walked-edge bound: each singleton contributes one step, every
        // other distinct edge at least two.
        CHECK(2 * s.distinct_edges <= ell + s.singleton_edges);
      }
      CHECK(canon_sum == e.total_walks);
    }
  }
}

TEST_CASE("small enumerations match hand counts") {
  ShapeEnumeration a = enumerate_shapes(2, 5);
  CHECK(a.total_walks == 20);
  REQUIRE(a.classes.size() == 1);
  CHECK(a.classes[0].distinct_edges == 1);
  CHECK(a.classes[0].singleton_edges == 0);
  CHECK(a.classes[0].excess == 0);

  ShapeEnumeration b = enumerate_shapes(3, 4);
  CHECK(b.total_walks == 24);
  REQUIRE(b.classes.size() == 1);
  CHECK(b.classes[0].distinct_edges == 3);
  CHECK(b.classes[0].singleton_edges == 3);
  CHECK(b.classes[0].excess == 1);
}

TEST_CASE("enumeration guards its budget and arguments") {
  CHECK_THROWS_AS(enumerate_shapes(0, 3), std::invalid_argument);
  CHECK_THROWS_AS(enumerate_shapes(3, 0), std::invalid_argument);
  CHECK_THROWS_AS(enumerate_shapes(10, 6, 1000), std::runtime_error);
}

TEST_CASE("counting bound arithmetic") {
  // n^(a-c+1) ell^(2(ell-b)) ell^(2c) at ell=4, n=10, a=2, b=0, c=1.
  BigInt expect = BigInt(100) * BigInt(65536) * BigInt(16);
  CHECK(count_bound(4, 10, 2, 0, 1) == expect);
  CHECK(count_bound(2, 5, 1, 0, 0) == BigInt(25) * BigInt(16));
  CHECK_THROWS_AS(count_bound(4, 10, 0, 0, 2), std::domain_error);
  CHECK_THROWS_AS(count_bound(0, 10, 1, 0, 0), std::invalid_argument);
  CHECK_THROWS_AS(count_bound(4, 10, 5, 0, 0), std::invalid_argument);
}

TEST_CASE("single-edge pattern probability is the cap measure") {
  RandomStream rng(derive_seed(37, "mc-edge", 0));
  const double p = 0.1;
  PatternEstimate est =
      subgraph_probability_mc({{0, 1}}, 2, 25, p, 40000, rng);
  CHECK(est.trials == 40000);
  const double sigma = std::sqrt(p * (1 - p) / 40000.0);
  CHECK(std::abs(est.estimate - p) <= 3 * sigma);
  CHECK(est.ci_low < est.estimate);
  CHECK(est.estimate < est.ci_high);
  CHECK_FALSE(est.below_resolution);
}

TEST_CASE("forest patterns factor into per-edge probabilities") {
  RandomStream rng(derive_seed(37, "mc-forest", 0));
  const double p2 = 0.2;
  PatternEstimate path =
      subgraph_probability_mc({{0, 1}, {1, 2}}, 3, 30, p2, 40000, rng);
  CHECK(std::abs(path.estimate - p2 * p2) <=
        3 * std::sqrt(p2 * p2 / 40000.0));

  // Star plus a detached edge: four independent edges.
  const double p4 = 0.3;
  PatternEstimate forest = subgraph_probability_mc(
      {{0, 1}, {0, 2}, {0, 3}, {4, 5}}, 6, 15, p4, 100000, rng);
  const double target = std::pow(p4, 4);
  CHECK(std::abs(forest.estimate - target) <=
        3 * std::sqrt(target / 100000.0));
}

TEST_CASE("triangle probability sits between the product and the boost") {
  RandomStream rng(derive_seed(37, "mc-tri", 0));
  const int d = 40;
  const double p = 0.2;
  const std::uint64_t n = 200000;
  PatternEstimate tri =
      subgraph_probability_mc({{0, 1}, {1, 2}, {0, 2}}, 3, d, p, n, rng);
  const double tau = cap_from_p(d, p).tau;
  const double lower = p * p * p;
  const double upper =
      p * p * (p + 1.5 * tau * std::sqrt(0.5 * std::log(1.0 / p)));
  const double sigma =
      std::sqrt(std::max(tri.estimate, lower) / static_cast<double>(n));
  CHECK(tri.estimate >= lower - 3 * sigma);
  CHECK(tri.estimate <= upper + 3 * sigma);
}

TEST_CASE("undetectable patterns report resolution loss") {
  RandomStream rng(derive_seed(37, "mc-zero", 0));
  PatternEstimate est = subgraph_probability_mc(
      {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}, 4, 30, 0.01, 1000,
      rng);
  CHECK(est.hits == 0);
  CHECK(est.estimate == 0.0);
  CHECK(est.below_resolution);
  CHECK(est.ci_high > 0.0);
}

TEST_CASE("pattern estimator rejects malformed input") {
  RandomStream rng(derive_seed(37, "mc-bad", 0));
  CHECK_THROWS_AS(subgraph_probability_mc({{0, 0}}, 2, 10, 0.1, 10, rng),
                  std::invalid_argument);
  CHECK_THROWS_AS(subgraph_probability_mc({{0, 1}}, 9, 10, 0.1, 10, rng),
                  std::invalid_argument);
  CHECK_THROWS_AS(subgraph_probability_mc({{0, 1}}, 2, 10, 0.0, 10, rng),
                  std::invalid_argument);
  CHECK_THROWS_AS(subgraph_probability_mc({{0, 1}}, 2, 10, 0.1, 0, rng),
                  std::invalid_argument);
  CHECK_THROWS_AS(subgraph_probability_mc({{0, 2}}, 2, 10, 0.1, 10, rng),
                  std::invalid_argument);
}

TEST_CASE("second-moment trace matches the closed form") {
  RandomStream rng(derive_seed(37, "trace2", 0));
  TraceEstimate a = trace_power_mc(30, 20, 0.1, 2, 2000, rng);
  const double target_a = 30.0 * 29.0 * 0.1 * 0.9;
  CHECK(std::abs(a.mean - target_a) <= 3 * a.std_error);

  TraceEstimate b = trace_power_mc(40, 15, 0.3, 2, 1500, rng);
  const double target_b = 40.0 * 39.0 * 0.3 * 0.7;
  CHECK(std::abs(b.mean - target_b) <= 3 * b.std_error);
}

TEST_CASE("deterministic adjacency has zero centered trace") {
  RandomStream rng(derive_seed(37, "trace-const", 0));
  TraceEstimate full = trace_power_mc(20, 10, 1.0, 2, 50, rng);
  CHECK(full.mean == 0.0);
  CHECK(full.std_error == 0.0);
  TraceEstimate empty = trace_power_mc(20, 10, 0.0, 4, 50, rng);
  CHECK(empty.mean == 0.0);
}

TEST_CASE("fourth-moment trace is stable across runs") {
  RandomStream rng1(derive_seed(37, "trace4", 1));
  RandomStream rng2(derive_seed(37, "trace4", 2));
  TraceEstimate a = trace_power_mc(24, 30, 0.15, 4, 1500, rng1);
  TraceEstimate b = trace_power_mc(24, 30, 0.15, 4, 1500, rng2);
  CHECK(a.mean > 0.0);
  CHECK(std::abs(a.mean - b.mean) <=
        3 * std::sqrt(a.std_error * a.std_error + b.std_error * b.std_error));
}

TEST_CASE("trace estimator rejects out-of-range input") {
  RandomStream rng(derive_seed(37, "trace-bad", 0));
  CHECK_THROWS_AS(trace_power_mc(65, 10, 0.1, 2, 10, rng),
                  std::invalid_argument);
  CHECK_THROWS_AS(trace_power_mc(30, 10, 0.1, 3, 10, rng),
                  std::invalid_argument);
  CHECK_THROWS_AS(trace_power_mc(30, 10, 0.1, 10, 10, rng),
                  std::invalid_argument);
  CHECK_THROWS_AS(trace_power_mc(30, 10, 1.5, 2, 10, rng),
                  std::invalid_argument);
  CHECK_THROWS_AS(trace_power_mc(30, 10, 0.1, 2, 1, rng),
                  std::invalid_argument);
}
