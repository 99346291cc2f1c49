// Copyright 2026 The mlasr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace mlasr {

// Deterministic RNG with named substreams. One run seed fans out to
// independent streams like rng_for(seed, "data", lang) so components can be
// re-run in isolation. Distributions are implemented by hand (not the
// implementation-defined std:: ones) so sequences are stable across
// platforms and toolchains.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [lo, hi] inclusive.
  int64_t uniform_int(int64_t lo, int64_t hi);

  // Standard normal via Box-Muller; one value per call, no caching so the
  // stream position is easy to reason about.
  double normal() ;
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  void fill_normal(double* dst, int64_t n, double mean, double stddev);

  // Fisher-Yates.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (int64_t i = static_cast<int64_t>(v.size()) - 1; i > 0; --i) {
      int64_t j = uniform_int(0, i);
      std::swap(v[static_cast<size_t>(i)], v[static_cast<size_t>(j)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// Derives the substream seed by hashing the run seed together with a stream
// name and an optional index.
uint64_t substream_seed(uint64_t run_seed, const std::string& name, uint64_t index = 0);

inline Rng rng_for(uint64_t run_seed, const std::string& name, uint64_t index = 0) {
  return Rng(substream_seed(run_seed, name, index));
}

}  // namespace mlasr
