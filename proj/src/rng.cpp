// SPDX-License-Identifier: Apache-2.0
#include "gatclust/rng.hpp"

#include <cmath>
#include <cstring>
#include <sstream>
#include <stdexcept>

namespace gatclust {

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = 0.0;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * M_PI * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

std::size_t Rng::index(std::size_t n) {
  if (n == 0) throw std::invalid_argument("Rng::index: n must be positive");
  // Rejection sampling keeps the draw exactly uniform.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x = 0;
  do {
    x = engine_();
  } while (x >= limit);
  return static_cast<std::size_t>(x % n);
}

std::string Rng::serialize() const {
  std::ostringstream out;
  out << engine_ << ' ' << (has_spare_ ? 1 : 0);
  if (has_spare_) {
    // Store the exact bit pattern; textual decimal would not round-trip.
    std::uint64_t bits = 0;
    std::memcpy(&bits, &spare_, sizeof(bits));
    out << ' ' << bits;
  }
  return out.str();
}

void Rng::deserialize(const std::string& state) {
  std::istringstream in(state);
  in >> engine_;
  int spare_flag = 0;
  in >> spare_flag;
  if (in.fail()) throw std::runtime_error("Rng::deserialize: malformed state");
  has_spare_ = spare_flag != 0;
  if (has_spare_) {
    std::uint64_t bits = 0;
    in >> bits;
    if (in.fail()) throw std::runtime_error("Rng::deserialize: malformed state");
    std::memcpy(&spare_, &bits, sizeof(bits));
  }
}

}  // namespace gatclust
