#pragma once

#include "hypercoil/types.hpp"

namespace hypercoil {

// Centered orthonormal 2-D Fourier transforms:
//   fft2c  = fftshift o FFT o ifftshift, scaled by 1/sqrt(H*W)
//   ifft2c = fftshift o IFFT o ifftshift, scaled by 1/sqrt(H*W)
// Both are unitary and mutually inverse; the DC bin sits at (H/2, W/2).
// Backed by FFTW (plans cached per shape); works for any H, W >= 1.
template <typename T>
void fft2c_raw(const std::complex<T>* in, std::complex<T>* out, int h, int w);
template <typename T>
void ifft2c_raw(const std::complex<T>* in, std::complex<T>* out, int h, int w);

template <typename T>
ComplexImage<T> fft2c(const ComplexImage<T>& img) {
  ComplexImage<T> out(img.height, img.width);
  fft2c_raw(img.data.data(), out.data.data(), img.height, img.width);
  return out;
}

template <typename T>
ComplexImage<T> ifft2c(const ComplexImage<T>& img) {
  ComplexImage<T> out(img.height, img.width);
  ifft2c_raw(img.data.data(), out.data.data(), img.height, img.width);
  return out;
}

}  // namespace hypercoil
