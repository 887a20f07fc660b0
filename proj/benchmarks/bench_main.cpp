#include <benchmark/benchmark.h>

#include "hdxgeo/geo.hpp"
#include "hdxgeo/rng.hpp"
#include "hdxgeo/shell.hpp"
#include "hdxgeo/spectral.hpp"
#include "hdxgeo/sphere.hpp"

namespace {

using namespace hdxgeo;

void BM_BetaTail(benchmark::State& state) {
  int d = static_cast<int>(state.range(0));
  double t = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(beta_tail(d, 0.05 + t));
    t = t < 0.8 ? t + 0.01 : 0.0;
  }
}
BENCHMARK(BM_BetaTail)->Arg(50)->Arg(200)->Arg(500);

void BM_TauOf(benchmark::State& state) {
  int d = static_cast<int>(state.range(0));
  double p = 0.001;
  for (auto _ : state) {
    benchmark::DoNotOptimize(tau_of(p, d).tau);
    p = p < 0.9 ? p * 1.7 : 0.001;
  }
}
BENCHMARK(BM_TauOf)->Arg(50)->Arg(500);

void BM_SampleCap(benchmark::State& state) {
  int d = static_cast<int>(state.range(0));
  CapSpec cap = cap_from_tau(d, 0.5);
  CapSampler sampler(cap);
  RandomStream rng(11);
  UnitVector center = sample_uniform_sphere(d, rng);
  for (auto _ : state) benchmark::DoNotOptimize(sampler.sample(center, rng));
}
BENCHMARK(BM_SampleCap)->Arg(50)->Arg(200);

void BM_GeoGraph(benchmark::State& state) {
  int n = static_cast<int>(state.range(0));
  for (auto _ : state) {
    GeoGraph g = sample_geo_graph(n, 40, 0.3, 5);
    benchmark::DoNotOptimize(g.edge_count);
  }
}
BENCHMARK(BM_GeoGraph)->Arg(200)->Arg(600)->Unit(benchmark::kMillisecond);

void BM_TwoComplex(benchmark::State& state) {
  int n = static_cast<int>(state.range(0));
  GeoGraph g = sample_geo_graph(n, 40, 0.3, 5);
  for (auto _ : state) {
    TwoComplex c = build_two_complex(g, false);
    benchmark::DoNotOptimize(c.triangle_count);
  }
}
BENCHMARK(BM_TwoComplex)->Arg(200)->Arg(600)->Unit(benchmark::kMillisecond);

void BM_SecondEigenvalue(benchmark::State& state) {
  int n = static_cast<int>(state.range(0));
  GeoGraph g = sample_geo_graph(n, 40, 0.3, 5);
  TwoComplex c = build_two_complex(g, false);
  SkeletonResult skel = one_skeleton(c);
  for (auto _ : state) {
    NormalizedAdjacency na(skel.graph);
    benchmark::DoNotOptimize(second_abs_eigenvalue(na).second_abs);
  }
}
BENCHMARK(BM_SecondEigenvalue)
    ->Arg(200)
    ->Arg(600)
    ->Unit(benchmark::kMillisecond);

void BM_ShellMatrices(benchmark::State& state) {
  int m = static_cast<int>(state.range(0));
  RandomStream rng(3);
  ShellVector shells = sample_shells(m, 0.5, 400, rng);
  for (auto _ : state) {
    ShellMatrices mats = build_shell_matrices(shells);
    benchmark::DoNotOptimize(mats.qbar(0, 0));
  }
}
BENCHMARK(BM_ShellMatrices)->Arg(300)->Arg(1500)->Unit(benchmark::kMillisecond);

void BM_RowSimilarity(benchmark::State& state) {
  int m = static_cast<int>(state.range(0));
  RandomStream rng(3);
  ShellVector shells = sample_shells(m, 0.5, 400, rng);
  ShellMatrices mats = build_shell_matrices(shells);
  ShellClassification cls = classify_shells(shells, 1.0);
  for (auto _ : state) {
    RowSimilarityResult r = row_similarity_check(mats, cls);
    benchmark::DoNotOptimize(r.max_typical_l1);
  }
}
BENCHMARK(BM_RowSimilarity)->Arg(300)->Arg(1500)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
