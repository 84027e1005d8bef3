#pragma once

#include <complex>

#include "hypercoil/aligned.hpp"
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace hypercoil {

// 2-D complex-valued image slice, row-major.
template <typename T>
struct ComplexImage {
  int height = 0;
  int width = 0;
  avec<std::complex<T>> data;

  ComplexImage() = default;
  ComplexImage(int h, int w) : height(h), width(w), data(static_cast<size_t>(h) * w) {}

  std::complex<T>& at(int y, int x) { return data[static_cast<size_t>(y) * width + x]; }
  const std::complex<T>& at(int y, int x) const {
    return data[static_cast<size_t>(y) * width + x];
  }
  size_t numel() const { return data.size(); }
  bool same_shape(const ComplexImage& o) const {
    return height == o.height && width == o.width;
  }
};

// Stack of per-coil 2-D complex arrays (n_c x H x W), coil-major, row-major
// within each coil.
template <typename T>
struct CoilStack {
  int n_coils = 0;
  int height = 0;
  int width = 0;
  avec<std::complex<T>> data;

  CoilStack() = default;
  CoilStack(int nc, int h, int w)
      : n_coils(nc), height(h), width(w), data(static_cast<size_t>(nc) * h * w) {}

  std::complex<T>* coil(int j) { return data.data() + static_cast<size_t>(j) * height * width; }
  const std::complex<T>* coil(int j) const {
    return data.data() + static_cast<size_t>(j) * height * width;
  }
  std::complex<T>& at(int j, int y, int x) {
    return data[(static_cast<size_t>(j) * height + y) * width + x];
  }
  const std::complex<T>& at(int j, int y, int x) const {
    return data[(static_cast<size_t>(j) * height + y) * width + x];
  }
  size_t plane_size() const { return static_cast<size_t>(height) * width; }
};

// Per-coil complex sensitivity maps S_j.
template <typename T>
struct SensitivitySet {
  CoilStack<T> maps;

  int n_coils() const { return maps.n_coils; }
  int height() const { return maps.height; }
  int width() const { return maps.width; }
};

enum class MaskKind { kCartesian, kPoisson };

inline std::string to_string(MaskKind k) {
  return k == MaskKind::kCartesian ? "cartesian" : "poisson";
}

inline MaskKind mask_kind_from_string(const std::string& s) {
  if (s == "cartesian") return MaskKind::kCartesian;
  if (s == "poisson") return MaskKind::kPoisson;
  throw std::invalid_argument("unknown mask kind: " + s);
}

// Binary k-space sampling pattern. Cartesian masks are constant along the
// readout (row) axis; the ACS block is a run of central columns.
struct Mask {
  int height = 0;
  int width = 0;
  MaskKind kind = MaskKind::kCartesian;
  double acceleration = 1.0;
  int acs = 0;
  std::vector<uint8_t> data;  // row-major, values in {0, 1}

  Mask() = default;
  Mask(int h, int w) : height(h), width(w), data(static_cast<size_t>(h) * w, 0) {}

  uint8_t& at(int y, int x) { return data[static_cast<size_t>(y) * width + x]; }
  uint8_t at(int y, int x) const { return data[static_cast<size_t>(y) * width + x]; }
  size_t ones() const {
    size_t n = 0;
    for (uint8_t v : data) n += v;
    return n;
  }
};

// Under-sampled per-coil k-space together with the mask that produced it.
// Entries at mask-zero locations are exactly zero.
template <typename T>
struct MultiCoilKspace {
  CoilStack<T> data;
  Mask mask;
};

template <typename To, typename From>
ComplexImage<To> cast_image(const ComplexImage<From>& in) {
  ComplexImage<To> out(in.height, in.width);
  for (size_t i = 0; i < in.data.size(); ++i)
    out.data[i] = std::complex<To>(static_cast<To>(in.data[i].real()),
                                   static_cast<To>(in.data[i].imag()));
  return out;
}

template <typename To, typename From>
CoilStack<To> cast_stack(const CoilStack<From>& in) {
  CoilStack<To> out(in.n_coils, in.height, in.width);
  for (size_t i = 0; i < in.data.size(); ++i)
    out.data[i] = std::complex<To>(static_cast<To>(in.data[i].real()),
                                   static_cast<To>(in.data[i].imag()));
  return out;
}

template <typename T>
T max_abs(const ComplexImage<T>& img) {
  T m = 0;
  for (const auto& v : img.data) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace hypercoil
