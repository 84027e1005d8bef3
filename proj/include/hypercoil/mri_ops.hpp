#pragma once

#include <stdexcept>

#include "hypercoil/fft.hpp"
#include "hypercoil/task_codec.hpp"
#include "hypercoil/types.hpp"

namespace hypercoil {

// Per-cascade penalty scalars of the variable-splitting updates.
template <typename T>
struct CascadePenalties {
  T lambda;  // data-fidelity weight
  T alpha;   // splitting weight
  T beta;    // denoiser-coupling weight
};

template <typename T>
void check_penalties_positive(const CascadePenalties<T>& p, bool need_lambda, bool need_beta) {
  if (p.alpha <= T(0)) throw std::invalid_argument("alpha must be positive");
  if (need_lambda && p.lambda <= T(0)) throw std::invalid_argument("lambda must be positive");
  if (need_beta && p.beta <= T(0)) throw std::invalid_argument("beta must be positive");
}

namespace detail {

template <typename T>
void check_gamma(const TaskVector& gamma, int n_coils) {
  if (gamma.n_coils() != n_coils)
    throw std::invalid_argument("task vector length " + std::to_string(gamma.n_coils()) +
                                " does not match coil count " + std::to_string(n_coils));
  if (gamma.popcount() == 0) throw std::invalid_argument("task vector has no active coil");
}

}  // namespace detail

// S_j * x for each active coil; inactive coils are zero.
template <typename T>
CoilStack<T> sense_forward(const ComplexImage<T>& x, const SensitivitySet<T>& s,
                           const TaskVector& gamma) {
  detail::check_gamma<T>(gamma, s.n_coils());
  if (s.height() != x.height || s.width() != x.width)
    throw std::invalid_argument("image/sensitivity shape mismatch");
  CoilStack<T> out(s.n_coils(), x.height, x.width);
  const size_t n = x.numel();
  for (int j = 0; j < s.n_coils(); ++j) {
    if (!gamma.active(j)) continue;
    const std::complex<T>* sj = s.maps.coil(j);
    std::complex<T>* oj = out.coil(j);
    for (size_t i = 0; i < n; ++i) oj[i] = sj[i] * x.data[i];
  }
  return out;
}

// sum_j S_j^H * x_j over active coils.
template <typename T>
ComplexImage<T> sense_adjoint(const CoilStack<T>& xj, const SensitivitySet<T>& s,
                              const TaskVector& gamma) {
  detail::check_gamma<T>(gamma, s.n_coils());
  if (s.height() != xj.height || s.width() != xj.width || s.n_coils() != xj.n_coils)
    throw std::invalid_argument("coil-stack/sensitivity shape mismatch");
  ComplexImage<T> out(xj.height, xj.width);
  const size_t n = out.numel();
  for (int j = 0; j < s.n_coils(); ++j) {
    if (!gamma.active(j)) continue;
    const std::complex<T>* sj = s.maps.coil(j);
    const std::complex<T>* cj = xj.coil(j);
    for (size_t i = 0; i < n; ++i) out.data[i] += std::conj(sj[i]) * cj[i];
  }
  return out;
}

// Sensitivity-weighted zero-filled reconstruction m0 = sum_j S_j^H IFFT(y_j)
// over active coils (y is already mask-zeroed).
template <typename T>
ComplexImage<T> zero_filled_recon(const MultiCoilKspace<T>& y, const SensitivitySet<T>& s,
                                  const TaskVector& gamma) {
  detail::check_gamma<T>(gamma, s.n_coils());
  if (s.height() != y.data.height || s.width() != y.data.width ||
      s.n_coils() != y.data.n_coils)
    throw std::invalid_argument("k-space/sensitivity shape mismatch");
  const int h = y.data.height, w = y.data.width;
  ComplexImage<T> out(h, w);
  ComplexImage<T> tmp(h, w);
  const size_t n = out.numel();
  for (int j = 0; j < s.n_coils(); ++j) {
    if (!gamma.active(j)) continue;
    ifft2c_raw(y.data.coil(j), tmp.data.data(), h, w);
    const std::complex<T>* sj = s.maps.coil(j);
    for (size_t i = 0; i < n; ++i) out.data[i] += std::conj(sj[i]) * tmp.data[i];
  }
  return out;
}

// Data-consistency update, one closed-form solve per frequency bin:
//   sampled bins:   khat = (alpha * FFT(S_j m) + lambda * y) / (lambda + alpha)
//   unsampled bins: khat = FFT(S_j m)
// Returns IFFT(khat) per active coil; inactive coils are zero.
// If k_pre_out is non-null it receives the per-coil FFT(S_j m) before the
// data mix (used by the training backward pass).
template <typename T>
CoilStack<T> dcb_update(const ComplexImage<T>& m, const MultiCoilKspace<T>& y,
                        const SensitivitySet<T>& s, const TaskVector& gamma,
                        const CascadePenalties<T>& p, CoilStack<T>* k_pre_out = nullptr) {
  detail::check_gamma<T>(gamma, s.n_coils());
  check_penalties_positive(p, /*need_lambda=*/true, /*need_beta=*/false);
  if (y.data.height != m.height || y.data.width != m.width || s.height() != m.height ||
      s.width() != m.width || s.n_coils() != y.data.n_coils)
    throw std::invalid_argument("dcb_update shape mismatch");
  const int h = m.height, w = m.width;
  const size_t n = m.numel();
  CoilStack<T> out(s.n_coils(), h, w);
  if (k_pre_out) *k_pre_out = CoilStack<T>(s.n_coils(), h, w);
  ComplexImage<T> coil_img(h, w), khat(h, w);
  const T inv_la = T(1) / (p.lambda + p.alpha);
  for (int j = 0; j < s.n_coils(); ++j) {
    if (!gamma.active(j)) continue;
    const std::complex<T>* sj = s.maps.coil(j);
    for (size_t i = 0; i < n; ++i) coil_img.data[i] = sj[i] * m.data[i];
    fft2c_raw(coil_img.data.data(), khat.data.data(), h, w);
    if (k_pre_out) std::copy(khat.data.begin(), khat.data.end(), k_pre_out->coil(j));
    const std::complex<T>* yj = y.data.coil(j);
    for (size_t i = 0; i < n; ++i) {
      if (y.mask.data[i])
        khat.data[i] = (p.alpha * khat.data[i] + p.lambda * yj[i]) * inv_la;
    }
    ifft2c_raw(khat.data.data(), out.coil(j), h, w);
  }
  return out;
}

// Weighted-average update, one closed-form solve per pixel:
//   m = (beta * u + alpha * sum_j S_j^H x_j) / (beta + alpha * sum_j |S_j|^2)
// with sums over active coils only. den_out / t_out optionally receive the
// pixelwise denominator and the coil-combined sum (training backward pass).
template <typename T>
ComplexImage<T> wab_update(const ComplexImage<T>& u, const CoilStack<T>& xj,
                           const SensitivitySet<T>& s, const TaskVector& gamma,
                           const CascadePenalties<T>& p, std::vector<T>* den_out = nullptr,
                           ComplexImage<T>* t_out = nullptr) {
  detail::check_gamma<T>(gamma, s.n_coils());
  check_penalties_positive(p, /*need_lambda=*/false, /*need_beta=*/true);
  if (s.height() != u.height || s.width() != u.width || xj.height != u.height ||
      xj.width != u.width || xj.n_coils != s.n_coils())
    throw std::invalid_argument("wab_update shape mismatch");
  const size_t n = u.numel();
  ComplexImage<T> t(u.height, u.width);
  std::vector<T> den(n, p.beta);
  for (int j = 0; j < s.n_coils(); ++j) {
    if (!gamma.active(j)) continue;
    const std::complex<T>* sj = s.maps.coil(j);
    const std::complex<T>* cj = xj.coil(j);
    for (size_t i = 0; i < n; ++i) {
      t.data[i] += std::conj(sj[i]) * cj[i];
      den[i] += p.alpha * std::norm(sj[i]);
    }
  }
  ComplexImage<T> out(u.height, u.width);
  for (size_t i = 0; i < n; ++i)
    out.data[i] = (p.beta * u.data[i] + p.alpha * t.data[i]) / den[i];
  if (den_out) *den_out = den;
  if (t_out) *t_out = std::move(t);
  return out;
}

}  // namespace hypercoil
