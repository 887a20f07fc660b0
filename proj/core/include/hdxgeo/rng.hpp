#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

#include <Eigen/Core>

namespace hdxgeo {

// Seed derivation scheme, fixed for reproducibility across runs and worker
// counts:
//
//   child = splitmix64(splitmix64(master ^ fnv1a64(phase)) ^ (index * PHI))
//
// where PHI is the 64-bit golden-ratio constant used by splitmix64 itself.
// Every parallel work item (trial, resample, link, ...) draws from its own
// RandomStream seeded by derive_seed(master, phase, index).  Results are
// stored by index and reduced in index order, so the output of a run is a
// function of (config, master seed) only, never of the worker count.

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t derive_seed(std::uint64_t master, std::string_view phase,
                                 std::uint64_t index) {
  return splitmix64(splitmix64(master ^ fnv1a64(phase)) ^ (index * kGolden));
}

// Deterministic random stream.  The engine is std::mt19937_64 (its output
// sequence is pinned by the standard); the uniform and normal transforms are
// implemented here rather than with std::*_distribution so that the mapping
// from engine output to variates is also pinned.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // Uniform on [0, 1), 53-bit resolution.
  double u01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1]; safe as a log argument.
  double u01_open_left() { return 1.0 - u01(); }

  // Standard normal via Box-Muller; the second variate of each pair is
  // cached, so a stream's variate sequence depends only on its seed.
  double normal() {
    if (have_cache_) {
      have_cache_ = false;
      return cache_;
    }
    double u1 = u01_open_left();
    double u2 = u01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    cache_ = r * std::sin(a);
    have_cache_ = true;
    return r * std::cos(a);
  }

  Eigen::VectorXd gaussian_vector(int d) {
    Eigen::VectorXd v(d);
    for (int i = 0; i < d; ++i) v[i] = normal();
    return v;
  }

  // Uniform integer in [0, n).  Rejection keeps the draw unbiased.
  std::uint64_t uniform_index(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = eng_();
    } while (x >= limit);
    return x % n;
  }

 private:
  std::mt19937_64 eng_;
  double cache_ = 0.0;
  bool have_cache_ = false;
};

// Hands out child streams from a master seed by (phase, index).
class SeedSplitter {
 public:
  explicit SeedSplitter(std::uint64_t master) : master_(master) {}
  std::uint64_t master() const { return master_; }
  std::uint64_t seed_for(std::string_view phase, std::uint64_t index) const {
    return derive_seed(master_, phase, index);
  }
  RandomStream stream(std::string_view phase, std::uint64_t index) const {
    return RandomStream(seed_for(phase, index));
  }

 private:
  std::uint64_t master_;
};

}  // namespace hdxgeo
