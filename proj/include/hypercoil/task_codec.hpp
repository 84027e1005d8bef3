#pragma once

#include <array>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "hypercoil/rng.hpp"

namespace hypercoil {

inline constexpr int kMaxCoils = 32;  // maximum embedding vector size

// Binary coil-switching vector: bits[j] == 1 means coil j+1 is present.
// Coils are 1-based in all text formats and 0-based in code; the bitstring
// form is ASCII '0'/'1' with the first character denoting coil 1.
struct TaskVector {
  std::vector<uint8_t> bits;

  int n_coils() const { return static_cast<int>(bits.size()); }
  bool active(int j) const { return bits[static_cast<size_t>(j)] != 0; }
  int popcount() const {
    int n = 0;
    for (uint8_t b : bits) n += b;
    return n;
  }
  std::string to_bitstring() const {
    std::string s;
    s.reserve(bits.size());
    for (uint8_t b : bits) s.push_back(b ? '1' : '0');
    return s;
  }
  bool operator==(const TaskVector& o) const { return bits == o.bits; }
};

// Fixed-width hypernetwork input: the first n_c entries copy the task bits,
// the remaining entries up to 32 are 1.0.
struct EmbeddedTask {
  std::array<double, kMaxCoils> values{};
};

// present holds 1-based coil indices.
TaskVector encode_config(const std::set<int>& present, int n_c);
TaskVector encode_config(const std::string& bitstring);

// Uniformly samples a task with exactly k of n_c coils present.
TaskVector sample_config(int n_c, int k, Rng& rng);

EmbeddedTask embed_task(const TaskVector& v);

// All-ones conditioning used by the configuration-invariant baseline.
EmbeddedTask all_ones_embedding();

}  // namespace hypercoil
