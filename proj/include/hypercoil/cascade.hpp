#pragma once

#include <cmath>

#include "hypercoil/hyper_denoiser.hpp"
#include "hypercoil/mri_ops.hpp"

namespace hypercoil {

struct ModelConfig {
  int cascades = 5;
  DenoiserConfig denoiser;
  bool learnable_penalties = true;
  bool tied_denoiser = true;
};

template <typename T>
T softplus(T x) {
  return x > T(20) ? x : static_cast<T>(std::log1p(std::exp(static_cast<double>(x))));
}

template <typename T>
T softplus_inverse(T y) {
  return y > T(20) ? y : static_cast<T>(std::log(std::expm1(static_cast<double>(y))));
}

template <typename T>
T sigmoid(T x) {
  return static_cast<T>(1.0 / (1.0 + std::exp(-static_cast<double>(x))));
}

// Unrolled reconstruction: m0 = zero-filled, then `cascades` rounds of
// denoiser -> data consistency -> weighted average. Penalties are positive
// via softplus reparameterization and learnable per cascade.
template <typename T>
class CascadeModel {
 public:
  using Denoiser = HyperDenoiser<T>;

  struct PerCascadeTrace {
    ComplexImage<T> m_in;
    typename Denoiser::Trace den_tr;
    ComplexImage<T> u;
    CoilStack<T> k_pre;  // FFT(S_j m) per active coil, before the data mix
    CoilStack<T> xj;
    std::vector<T> wab_den;
    ComplexImage<T> t;
    ComplexImage<T> m_out;
  };

  struct Trace {
    ComplexImage<T> m0;
    std::vector<PerCascadeTrace> casc;
  };

  CascadeModel() = default;

  explicit CascadeModel(const ModelConfig& cfg) : cfg_(cfg) {
    if (cfg.cascades < 1) throw std::invalid_argument("cascades must be >= 1");
    const int n_den = cfg.tied_denoiser ? 1 : cfg.cascades;
    for (int i = 0; i < n_den; ++i) den_.emplace_back(cfg.denoiser);
    const T raw1 = softplus_inverse(T(1));
    raw_pen_.resize(static_cast<size_t>(cfg.cascades));
    raw_pen_grad_.resize(static_cast<size_t>(cfg.cascades));
    for (int k = 0; k < cfg.cascades; ++k) {
      raw_pen_[static_cast<size_t>(k)] = nn::Tensor<T>({3});
      raw_pen_[static_cast<size_t>(k)].v = {raw1, raw1, raw1};
      raw_pen_grad_[static_cast<size_t>(k)] = nn::Tensor<T>({3});
    }
  }

  const ModelConfig& config() const { return cfg_; }

  void init(Rng& rng) {
    for (auto& d : den_) d.init(rng);
  }

  Denoiser& denoiser(int cascade) {
    return den_[cfg_.tied_denoiser ? 0 : static_cast<size_t>(cascade)];
  }
  const Denoiser& denoiser(int cascade) const {
    return den_[cfg_.tied_denoiser ? 0 : static_cast<size_t>(cascade)];
  }

  CascadePenalties<T> penalties(int cascade) const {
    const auto& r = raw_pen_[static_cast<size_t>(cascade)].v;
    return {softplus(r[0]), softplus(r[1]), softplus(r[2])};
  }

  void set_penalties(int cascade, const CascadePenalties<T>& p) {
    check_penalties_positive(p, true, true);
    auto& r = raw_pen_[static_cast<size_t>(cascade)].v;
    r[0] = softplus_inverse(p.lambda);
    r[1] = softplus_inverse(p.alpha);
    r[2] = softplus_inverse(p.beta);
  }

  ComplexImage<T> forward(const MultiCoilKspace<T>& y, const SensitivitySet<T>& s,
                          const TaskVector& gamma, const EmbeddedTask& e,
                          Trace* trace = nullptr) const {
    ComplexImage<T> m = zero_filled_recon(y, s, gamma);
    if (trace) {
      trace->m0 = m;
      trace->casc.clear();
      trace->casc.resize(static_cast<size_t>(cfg_.cascades));
    }
    typename Denoiser::Trace local_tr;
    for (int k = 0; k < cfg_.cascades; ++k) {
      PerCascadeTrace* pc = trace ? &trace->casc[static_cast<size_t>(k)] : nullptr;
      const CascadePenalties<T> p = penalties(k);
      typename Denoiser::Trace& dt = pc ? pc->den_tr : local_tr;
      ComplexImage<T> u = denoiser(k).denoise(m, e, dt);
      CoilStack<T> xj = dcb_update(m, y, s, gamma, p, pc ? &pc->k_pre : nullptr);
      std::vector<T> den;
      ComplexImage<T> t;
      ComplexImage<T> m_next = wab_update(u, xj, s, gamma, p, pc ? &den : nullptr,
                                          pc ? &t : nullptr);
      if (pc) {
        pc->m_in = std::move(m);
        pc->u = std::move(u);
        pc->xj = std::move(xj);
        pc->wab_den = std::move(den);
        pc->t = std::move(t);
        pc->m_out = m_next;
      }
      m = std::move(m_next);
    }
    return m;
  }

  // Defaults the conditioning to the task's own embedding.
  ComplexImage<T> reconstruct(const MultiCoilKspace<T>& y, const SensitivitySet<T>& s,
                              const TaskVector& gamma, Trace* trace = nullptr) const {
    return forward(y, s, gamma, embed_task(gamma), trace);
  }

  // Reverse pass; accumulates all parameter gradients.
  void backward(const ComplexImage<T>& grad_out, const MultiCoilKspace<T>& y,
                const SensitivitySet<T>& s, const TaskVector& gamma, const Trace& trace) {
    const int h = grad_out.height, w = grad_out.width;
    const size_t n = grad_out.numel();
    ComplexImage<T> gm = grad_out;
    for (int k = cfg_.cascades - 1; k >= 0; --k) {
      const PerCascadeTrace& pc = trace.casc[static_cast<size_t>(k)];
      const CascadePenalties<T> p = penalties(k);

      // WAB backward: m = (beta*u + alpha*t) / d
      ComplexImage<T> gu(h, w), gt(h, w);
      T d_beta = 0, d_alpha = 0;
      for (size_t i = 0; i < n; ++i) {
        const T d = pc.wab_den[i];
        gu.data[i] = gm.data[i] * (p.beta / d);
        gt.data[i] = gm.data[i] * (p.alpha / d);
        const std::complex<T> dmdb = (pc.u.data[i] - pc.m_out.data[i]) / d;
        const T wsum = (d - p.beta) / p.alpha;
        const std::complex<T> dmda = (pc.t.data[i] - wsum * pc.m_out.data[i]) / d;
        d_beta += re_dot(gm.data[i], dmdb);
        d_alpha += re_dot(gm.data[i], dmda);
      }

      // DCB backward per active coil; contributes to gm_next and lambda/alpha
      ComplexImage<T> gm_next(h, w);
      ComplexImage<T> gxj(h, w), ghat(h, w), gmix(h, w), gsm(h, w);
      T d_lambda = 0;
      const T inv_la = T(1) / (p.lambda + p.alpha);
      const T inv_la2 = inv_la * inv_la;
      for (int j = 0; j < s.n_coils(); ++j) {
        if (!gamma.active(j)) continue;
        const std::complex<T>* sj = s.maps.coil(j);
        const std::complex<T>* yj = y.data.coil(j);
        const std::complex<T>* kj = pc.k_pre.coil(j);
        // gradient w.r.t. x_j = S_j * gt
        for (size_t i = 0; i < n; ++i) gxj.data[i] = sj[i] * gt.data[i];
        fft2c_raw(gxj.data.data(), ghat.data.data(), h, w);
        for (size_t i = 0; i < n; ++i) {
          if (y.mask.data[i]) {
            gmix.data[i] = ghat.data[i] * (p.alpha * inv_la);
            d_lambda += re_dot(ghat.data[i], (yj[i] - kj[i]) * (p.alpha * inv_la2));
            d_alpha += re_dot(ghat.data[i], (kj[i] - yj[i]) * (p.lambda * inv_la2));
          } else {
            gmix.data[i] = ghat.data[i];
          }
        }
        ifft2c_raw(gmix.data.data(), gsm.data.data(), h, w);
        for (size_t i = 0; i < n; ++i) gm_next.data[i] += std::conj(sj[i]) * gsm.data[i];
      }

      // denoiser backward (u path): contributes to gm_next and the params
      auto gu2 = Denoiser::to_channels(gu);
      auto gden = denoiser(k).backward(gu2, pc.den_tr);
      const ComplexImage<T> gm_den = Denoiser::from_channels(gden);
      for (size_t i = 0; i < n; ++i) gm_next.data[i] += gm_den.data[i];

      // chain penalties through softplus
      auto& rg = raw_pen_grad_[static_cast<size_t>(k)].v;
      const auto& rv = raw_pen_[static_cast<size_t>(k)].v;
      rg[0] += d_lambda * sigmoid(rv[0]);
      rg[1] += d_alpha * sigmoid(rv[1]);
      rg[2] += d_beta * sigmoid(rv[2]);

      gm = std::move(gm_next);
    }
  }

  // optimizable parameters
  std::vector<nn::ParamRef<T>> params() {
    return collect_refs(cfg_.learnable_penalties);
  }

  // full learned state, for serialization (penalties always included)
  std::vector<nn::ParamRef<T>> all_tensors() { return collect_refs(true); }

  void zero_grad() {
    for (auto& pr : params()) pr.grad->zero();
  }

 private:
  std::vector<nn::ParamRef<T>> collect_refs(bool with_penalties) {
    std::vector<nn::ParamRef<T>> out;
    for (size_t i = 0; i < den_.size(); ++i) {
      const std::string prefix = cfg_.tied_denoiser ? "den." : "den" + std::to_string(i) + ".";
      den_[i].collect(prefix, out);
    }
    if (with_penalties) {
      for (int k = 0; k < cfg_.cascades; ++k) {
        out.push_back({"cascade" + std::to_string(k) + ".penalties",
                       &raw_pen_[static_cast<size_t>(k)], &raw_pen_grad_[static_cast<size_t>(k)]});
      }
    }
    return out;
  }

  static T re_dot(const std::complex<T>& a, const std::complex<T>& b) {
    return a.real() * b.real() + a.imag() * b.imag();
  }

  ModelConfig cfg_;
  std::vector<Denoiser> den_;
  std::vector<nn::Tensor<T>> raw_pen_;
  std::vector<nn::Tensor<T>> raw_pen_grad_;
};

}  // namespace hypercoil
