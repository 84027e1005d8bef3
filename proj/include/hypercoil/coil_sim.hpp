#pragma once

#include <string>

#include "hypercoil/fft.hpp"
#include "hypercoil/types.hpp"

namespace hypercoil {

enum class PhantomKind { kSheppLogan, kSmoothRandom };

PhantomKind phantom_kind_from_string(const std::string& s);
std::string to_string(PhantomKind k);

// Synthetic fully-sampled complex slice, magnitude normalized to max 1.
// Deterministic per (size, kind, seed). The Shepp-Logan kind applies a
// seed-dependent affine jitter (rotation/scale/shift, intensity) so that
// distinct seeds yield distinct slices; the smooth-random kind is a
// band-limited random field. Both carry a random low-frequency phase.
ComplexImage<double> generate_phantom(int size, PhantomKind kind, uint64_t seed);

// Gaussian-lobe coil profiles at equal angles on a circle around the FOV
// with random linear phase. If normalize, sum_j |S_j|^2 == 1 pixelwise.
SensitivitySet<double> simulate_sensitivities(int n_c, int size, uint64_t seed, bool normalize);

// Binary under-sampling pattern. Cartesian selects whole phase-encode
// columns: `acs` central columns plus uniformly drawn extras so that the
// kept-column count equals round(W / acceleration). Poisson generates a
// variable-density Poisson-disc pattern (density ~ 1/(1+r^2), fully sampled
// central disc of radius 6) calibrated so the kept fraction is within a few
// percent of 1/acceleration.
Mask make_mask(int h, int w, MaskKind kind, double acceleration, int acs, uint64_t seed);

// y_j = M * FFT(S_j * x) for every coil.
template <typename T>
MultiCoilKspace<T> forward_acquire(const ComplexImage<T>& x, const SensitivitySet<T>& s,
                                   const Mask& mask) {
  if (s.height() != x.height || s.width() != x.width || mask.height != x.height ||
      mask.width != x.width)
    throw std::invalid_argument("forward_acquire shape mismatch");
  MultiCoilKspace<T> y;
  y.mask = mask;
  y.data = CoilStack<T>(s.n_coils(), x.height, x.width);
  ComplexImage<T> coil_img(x.height, x.width);
  const size_t n = x.numel();
  for (int j = 0; j < s.n_coils(); ++j) {
    const std::complex<T>* sj = s.maps.coil(j);
    for (size_t i = 0; i < n; ++i) coil_img.data[i] = sj[i] * x.data[i];
    fft2c_raw(coil_img.data.data(), y.data.coil(j), x.height, x.width);
    std::complex<T>* yj = y.data.coil(j);
    for (size_t i = 0; i < n; ++i)
      if (!mask.data[i]) yj[i] = std::complex<T>(0, 0);
  }
  return y;
}

}  // namespace hypercoil
