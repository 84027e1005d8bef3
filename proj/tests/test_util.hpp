#pragma once

#include <complex>
#include <vector>

#include "hypercoil/rng.hpp"
#include "hypercoil/types.hpp"

namespace hypercoil::testutil {

// Independent dense centered DFT: out[u,v] = 1/sqrt(HW) *
//   sum_{y,x} in[y,x] exp(-2*pi*i*((u-cu)(y-cy)/H + (v-cv)(x-cx)/W))
// with cu=H/2, cv=W/2. Quadratic cost; oracle for the FFT-based transform.
template <typename T>
ComplexImage<T> dense_dft2c(const ComplexImage<T>& in, bool inverse = false) {
  const int h = in.height, w = in.width;
  const int cy = h / 2, cx = w / 2;
  const double sign = inverse ? 1.0 : -1.0;
  ComplexImage<T> out(h, w);
  for (int u = 0; u < h; ++u) {
    for (int v = 0; v < w; ++v) {
      std::complex<double> acc(0, 0);
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const double ph = 2.0 * M_PI *
                            (static_cast<double>(u - cy) * (y - cy) / h +
                             static_cast<double>(v - cx) * (x - cx) / w);
          const std::complex<double> tw(std::cos(ph), sign * std::sin(ph));
          acc += std::complex<double>(in.at(y, x).real(), in.at(y, x).imag()) * tw;
        }
      }
      acc /= std::sqrt(static_cast<double>(h) * w);
      out.at(u, v) = std::complex<T>(static_cast<T>(acc.real()), static_cast<T>(acc.imag()));
    }
  }
  return out;
}

template <typename T>
ComplexImage<T> random_image(int h, int w, Rng& rng) {
  ComplexImage<T> img(h, w);
  for (auto& v : img.data)
    v = std::complex<T>(static_cast<T>(rng.normal()), static_cast<T>(rng.normal()));
  return img;
}

template <typename T>
CoilStack<T> random_stack(int nc, int h, int w, Rng& rng) {
  CoilStack<T> s(nc, h, w);
  for (auto& v : s.data)
    v = std::complex<T>(static_cast<T>(rng.normal()), static_cast<T>(rng.normal()));
  return s;
}

template <typename T>
double max_abs_diff(const ComplexImage<T>& a, const ComplexImage<T>& b) {
  double m = 0;
  for (size_t i = 0; i < a.data.size(); ++i)
    m = std::max(m, std::abs(std::complex<double>(a.data[i].real() - b.data[i].real(),
                                                  a.data[i].imag() - b.data[i].imag())));
  return m;
}

template <typename VecA, typename VecB>
std::complex<double> inner(const VecA& a, const VecB& b) {
  std::complex<double> acc(0, 0);
  for (size_t i = 0; i < a.size(); ++i)
    acc += std::complex<double>(a[i].real(), a[i].imag()) *
           std::conj(std::complex<double>(b[i].real(), b[i].imag()));
  return acc;
}

inline Mask random_mask(int h, int w, double keep_prob, Rng& rng) {
  Mask m(h, w);
  for (auto& v : m.data) v = rng.uniform() < keep_prob ? 1 : 0;
  return m;
}

}  // namespace hypercoil::testutil
