// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace gatclust {

// Deterministic random source. All sampling is derived from the raw engine
// output so that sequences are identical across standard library
// implementations, not just across runs of the same binary.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller with a cached spare.
  double normal();

  // Uniform integer in [0, n). n must be positive.
  std::size_t index(std::size_t n);

  std::uint64_t raw() { return engine_(); }

  // Engine state as text; round-trips exactly.
  std::string serialize() const;
  void deserialize(const std::string& state);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace gatclust
