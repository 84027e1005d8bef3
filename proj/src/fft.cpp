#include "hypercoil/fft.hpp"

#include <fftw3.h>

#include <map>
#include <tuple>
#include <vector>

namespace hypercoil {
namespace {

// One cached plan pair per (H, W). Scratch buffers are owned by the cache
// entry; the shift+scale copies in and out make the user-facing transform
// centered and orthonormal.
template <typename T>
struct FftwTraits;

template <>
struct FftwTraits<double> {
  using complex_t = fftw_complex;
  using plan_t = fftw_plan;
  static plan_t plan(int h, int w, complex_t* in, complex_t* out, int sign) {
    return fftw_plan_dft_2d(h, w, in, out, sign, FFTW_ESTIMATE);
  }
  static void execute(plan_t p) { fftw_execute(p); }
  static void* alloc(size_t n) { return fftw_malloc(n * sizeof(complex_t)); }
};

template <>
struct FftwTraits<float> {
  using complex_t = fftwf_complex;
  using plan_t = fftwf_plan;
  static plan_t plan(int h, int w, complex_t* in, complex_t* out, int sign) {
    return fftwf_plan_dft_2d(h, w, in, out, sign, FFTW_ESTIMATE);
  }
  static void execute(plan_t p) { fftwf_execute(p); }
  static void* alloc(size_t n) { return fftwf_malloc(n * sizeof(complex_t)); }
};

template <typename T>
struct PlanEntry {
  typename FftwTraits<T>::complex_t* in = nullptr;
  typename FftwTraits<T>::complex_t* out = nullptr;
  typename FftwTraits<T>::plan_t fwd{};
  typename FftwTraits<T>::plan_t bwd{};
};

template <typename T>
PlanEntry<T>& get_plan(int h, int w) {
  static std::map<std::pair<int, int>, PlanEntry<T>> cache;
  auto it = cache.find({h, w});
  if (it != cache.end()) return it->second;
  PlanEntry<T> e;
  const size_t n = static_cast<size_t>(h) * w;
  e.in = static_cast<typename FftwTraits<T>::complex_t*>(FftwTraits<T>::alloc(n));
  e.out = static_cast<typename FftwTraits<T>::complex_t*>(FftwTraits<T>::alloc(n));
  e.fwd = FftwTraits<T>::plan(h, w, e.in, e.out, FFTW_FORWARD);
  e.bwd = FftwTraits<T>::plan(h, w, e.in, e.out, FFTW_BACKWARD);
  return cache.emplace(std::make_pair(h, w), e).first->second;
}

// copy with ifftshift: scratch[y][x] = in[(y + H/2) % H][(x + W/2) % W]
template <typename T, typename C>
void copy_ifftshift(const std::complex<T>* in, C* scratch, int h, int w) {
  const int sy = h / 2, sx = w / 2;
  for (int y = 0; y < h; ++y) {
    const int yin = (y + sy) % h;
    for (int x = 0; x < w; ++x) {
      const int xin = (x + sx) % w;
      const std::complex<T>& v = in[static_cast<size_t>(yin) * w + xin];
      C& dst = scratch[static_cast<size_t>(y) * w + x];
      dst[0] = v.real();
      dst[1] = v.imag();
    }
  }
}

// copy with fftshift and scaling: out[(y + H/2) % H][(x + W/2) % W] = s * scratch[y][x]
template <typename T, typename C>
void copy_fftshift_scaled(const C* scratch, std::complex<T>* out, int h, int w, T scale) {
  const int sy = h / 2, sx = w / 2;
  for (int y = 0; y < h; ++y) {
    const int yout = (y + sy) % h;
    for (int x = 0; x < w; ++x) {
      const int xout = (x + sx) % w;
      const C& v = scratch[static_cast<size_t>(y) * w + x];
      out[static_cast<size_t>(yout) * w + xout] =
          std::complex<T>(static_cast<T>(v[0]) * scale, static_cast<T>(v[1]) * scale);
    }
  }
}

template <typename T>
void transform(const std::complex<T>* in, std::complex<T>* out, int h, int w, bool forward) {
  auto& e = get_plan<T>(h, w);
  copy_ifftshift(in, e.in, h, w);
  FftwTraits<T>::execute(forward ? e.fwd : e.bwd);
  const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(h) * w));
  copy_fftshift_scaled(e.out, out, h, w, scale);
}

}  // namespace

template <typename T>
void fft2c_raw(const std::complex<T>* in, std::complex<T>* out, int h, int w) {
  transform(in, out, h, w, true);
}

template <typename T>
void ifft2c_raw(const std::complex<T>* in, std::complex<T>* out, int h, int w) {
  transform(in, out, h, w, false);
}

template void fft2c_raw<float>(const std::complex<float>*, std::complex<float>*, int, int);
template void fft2c_raw<double>(const std::complex<double>*, std::complex<double>*, int, int);
template void ifft2c_raw<float>(const std::complex<float>*, std::complex<float>*, int, int);
template void ifft2c_raw<double>(const std::complex<double>*, std::complex<double>*, int, int);

}  // namespace hypercoil
