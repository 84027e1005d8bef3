#pragma once

#include <cstddef>
#include <cstdlib>
#include <new>
#include <vector>

namespace hypercoil {

// 64-byte aligned allocator. Keeping every numeric buffer at a fixed
// alignment makes the vectorized kernels take the same code path on every
// run, which keeps float summation order (and therefore training curves)
// bit-reproducible.
template <typename T>
struct AlignedAlloc {
  using value_type = T;
  static constexpr std::size_t kAlign = 64;

  AlignedAlloc() = default;
  template <typename U>
  AlignedAlloc(const AlignedAlloc<U>&) {}

  T* allocate(std::size_t n) {
    if (n == 0) return nullptr;
    void* p = std::aligned_alloc(kAlign, ((n * sizeof(T) + kAlign - 1) / kAlign) * kAlign);
    if (!p) throw std::bad_alloc();
    return static_cast<T*>(p);
  }
  void deallocate(T* p, std::size_t) noexcept { std::free(p); }

  template <typename U>
  bool operator==(const AlignedAlloc<U>&) const {
    return true;
  }
  template <typename U>
  bool operator!=(const AlignedAlloc<U>&) const {
    return false;
  }
};

template <typename T>
using avec = std::vector<T, AlignedAlloc<T>>;

}  // namespace hypercoil
