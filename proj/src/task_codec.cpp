#include "hypercoil/task_codec.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace hypercoil {

namespace {

void check_coil_count(int n_c) {
  if (n_c < 1 || n_c > kMaxCoils)
    throw std::invalid_argument("coil count must be in [1, " + std::to_string(kMaxCoils) +
                                "], got " + std::to_string(n_c));
}

}  // namespace

TaskVector encode_config(const std::set<int>& present, int n_c) {
  check_coil_count(n_c);
  if (present.empty()) throw std::invalid_argument("empty coil configuration");
  TaskVector v;
  v.bits.assign(static_cast<size_t>(n_c), 0);
  for (int idx : present) {
    if (idx < 1 || idx > n_c)
      throw std::invalid_argument("coil index " + std::to_string(idx) + " out of range [1, " +
                                  std::to_string(n_c) + "]");
    v.bits[static_cast<size_t>(idx - 1)] = 1;
  }
  return v;
}

TaskVector encode_config(const std::string& bitstring) {
  check_coil_count(static_cast<int>(bitstring.size()));
  TaskVector v;
  v.bits.reserve(bitstring.size());
  for (char c : bitstring) {
    if (c != '0' && c != '1')
      throw std::invalid_argument("bitstring must contain only '0'/'1'");
    v.bits.push_back(c == '1' ? 1 : 0);
  }
  if (v.popcount() == 0) throw std::invalid_argument("empty coil configuration");
  return v;
}

TaskVector sample_config(int n_c, int k, Rng& rng) {
  check_coil_count(n_c);
  if (k < 1 || k > n_c)
    throw std::invalid_argument("k must be in [1, n_c], got k=" + std::to_string(k) +
                                " n_c=" + std::to_string(n_c));
  // partial Fisher-Yates: the first k slots are a uniform k-subset
  std::vector<int> idx(static_cast<size_t>(n_c));
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < k; ++i) std::swap(idx[i], idx[rng.uniform_int(i, n_c - 1)]);
  TaskVector v;
  v.bits.assign(static_cast<size_t>(n_c), 0);
  for (int i = 0; i < k; ++i) v.bits[static_cast<size_t>(idx[i])] = 1;
  return v;
}

EmbeddedTask embed_task(const TaskVector& v) {
  check_coil_count(v.n_coils());
  EmbeddedTask e;
  e.values.fill(1.0);
  for (int j = 0; j < v.n_coils(); ++j) e.values[static_cast<size_t>(j)] = v.bits[j] ? 1.0 : 0.0;
  return e;
}

EmbeddedTask all_ones_embedding() {
  EmbeddedTask e;
  e.values.fill(1.0);
  return e;
}

}  // namespace hypercoil
