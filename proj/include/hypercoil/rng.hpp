#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

namespace hypercoil {

// Derives an independent stream seed from (base, stream) via splitmix64.
inline uint64_t mix_seed(uint64_t base, uint64_t stream) {
  uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Seeded generator with fully specified output. All randomness in the
// project flows through explicit Rng instances; there is no global state.
// mt19937_64 is bit-reproducible across platforms, and the distribution
// helpers below avoid the implementation-defined std:: distributions.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next_u64() { return eng_(); }

  // [0, 1) with 53-bit resolution
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // inclusive bounds
  int uniform_int(int lo, int hi) {
    const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
    const uint64_t r =
        static_cast<uint64_t>((static_cast<unsigned __int128>(next_u64()) * span) >> 64);
    return lo + static_cast<int>(r);
  }

  // standard normal via Box-Muller
  double normal() {
    double u1 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  // engine state round-trips exactly through the text form
  std::string state() const {
    std::ostringstream oss;
    oss << eng_;
    return oss.str();
  }

  void set_state(const std::string& s) {
    std::istringstream iss(s);
    iss >> eng_;
    if (!iss) throw std::invalid_argument("bad rng state string");
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace hypercoil
