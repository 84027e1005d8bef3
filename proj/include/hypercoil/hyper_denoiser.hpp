#pragma once

#include <string>
#include <vector>

#include "hypercoil/nn/layers.hpp"
#include "hypercoil/task_codec.hpp"
#include "hypercoil/types.hpp"

namespace hypercoil {

enum class DwpMode { kNone, kBottleneck, kAll };

inline std::string to_string(DwpMode m) {
  switch (m) {
    case DwpMode::kNone: return "none";
    case DwpMode::kBottleneck: return "bottleneck";
    default: return "all";
  }
}

inline DwpMode dwp_mode_from_string(const std::string& s) {
  if (s == "none") return DwpMode::kNone;
  if (s == "bottleneck") return DwpMode::kBottleneck;
  if (s == "all") return DwpMode::kAll;
  throw std::invalid_argument("unknown dwp mode: " + s);
}

struct DenoiserConfig {
  int levels = 3;         // sub-sampling levels of the decoder
  int base_channels = 16; // doubled at each level
  int embed_dim = 16;     // hypernetwork hidden width
  DwpMode dwp_mode = DwpMode::kAll;
};

// Task-conditioned encoder-decoder denoiser. The encoder is task-invariant;
// at each conditioned decoder level the skip features are passed through a
// 1x1 convolution whose kernel and bias are predicted from the task
// embedding by a small per-level hypernetwork, then concatenated with the
// upsampled decoder features. A residual head maps back to 2 channels.
template <typename T>
class HyperDenoiser {
 public:
  using Tensor = nn::Tensor<T>;

  // FC(32->E) -> LReLU -> FC(E->E) -> LReLU -> FC(E -> C^2 + C)
  struct HyperNet {
    nn::Linear<T> fc1, fc2, fc3;

    struct Trace {
      typename nn::Linear<T>::Trace t1, t2, t3;
      typename nn::LeakyRelu<T>::Trace r1, r2;
      Tensor tau;
    };

    Tensor forward(const Tensor& e, Trace& tr) const {
      Tensor h1 = nn::LeakyRelu<T>::forward(fc1.forward(e, tr.t1), tr.r1);
      tr.tau = nn::LeakyRelu<T>::forward(fc2.forward(h1, tr.t2), tr.r2);
      return fc3.forward(tr.tau, tr.t3);
    }

    void backward(const Tensor& gweights, const Trace& tr) {
      Tensor g = fc3.backward(gweights, tr.t3);
      g = nn::LeakyRelu<T>::backward(g, tr.r2);
      g = fc2.backward(g, tr.t2);
      g = nn::LeakyRelu<T>::backward(g, tr.r1);
      fc1.backward(g, tr.t1);  // embedding gradient discarded
    }
  };

  struct ConvBlock {
    nn::Conv2d<T> c1, c2;

    struct Trace {
      typename nn::Conv2d<T>::Trace t1, t2;
      typename nn::LeakyRelu<T>::Trace r1, r2;
    };

    Tensor forward(const Tensor& x, Trace& tr) const {
      Tensor h = nn::LeakyRelu<T>::forward(c1.forward(x, tr.t1), tr.r1);
      return nn::LeakyRelu<T>::forward(c2.forward(h, tr.t2), tr.r2);
    }

    Tensor backward(const Tensor& gy, const Trace& tr) {
      Tensor g = nn::LeakyRelu<T>::backward(gy, tr.r2);
      g = c2.backward(g, tr.t2);
      g = nn::LeakyRelu<T>::backward(g, tr.r1);
      return c1.backward(g, tr.t1);
    }
  };

  struct Trace {
    Tensor input;
    std::vector<typename ConvBlock::Trace> enc_tr;
    std::vector<Tensor> enc_feats;
    std::vector<typename nn::MaxPool2<T>::Trace> pool_tr;
    typename ConvBlock::Trace bott_tr;
    std::vector<typename ConvBlock::Trace> dec_tr;
    std::vector<Tensor> dyn_w;  // predicted 1x1 weights per conditioned level
    std::vector<typename HyperNet::Trace> hyper_tr;
    typename nn::Conv2d<T>::Trace head_tr;
  };

  HyperDenoiser() = default;

  explicit HyperDenoiser(const DenoiserConfig& cfg) : cfg_(cfg) {
    if (cfg.levels < 1) throw std::invalid_argument("levels must be >= 1");
    if (cfg.base_channels < 1 || cfg.embed_dim < 1)
      throw std::invalid_argument("channel widths must be positive");
    int in_c = 2;
    for (int i = 0; i < cfg.levels; ++i) {
      const int c = channels(i + 1);
      enc_.push_back({nn::Conv2d<T>(in_c, c, 3), nn::Conv2d<T>(c, c, 3)});
      in_c = c;
    }
    const int cb = cfg.base_channels << cfg.levels;
    bott_ = {nn::Conv2d<T>(in_c, cb, 3), nn::Conv2d<T>(cb, cb, 3)};
    dec_.resize(static_cast<size_t>(cfg.levels));
    for (int i = cfg.levels - 1; i >= 0; --i) {
      const int c = channels(i + 1);
      const int up = (i == cfg.levels - 1) ? cb : channels(i + 2);
      dec_[static_cast<size_t>(i)] = {nn::Conv2d<T>(up + c, c, 3), nn::Conv2d<T>(c, c, 3)};
    }
    head_ = nn::Conv2d<T>(cfg.base_channels, 2, 1);
    hyper_.resize(static_cast<size_t>(cfg.levels));
    for (int lvl = 1; lvl <= cfg.levels; ++lvl) {
      if (!is_conditioned(lvl)) continue;
      const int c = channels(lvl);
      auto& h = hyper_[static_cast<size_t>(lvl - 1)];
      h.fc1 = nn::Linear<T>(kMaxCoils, cfg.embed_dim);
      h.fc2 = nn::Linear<T>(cfg.embed_dim, cfg.embed_dim);
      h.fc3 = nn::Linear<T>(cfg.embed_dim, c * c + c);
    }
  }

  const DenoiserConfig& config() const { return cfg_; }

  // channel width at 1-based level (level `levels` is the deepest skip)
  int channels(int level) const { return cfg_.base_channels << (level - 1); }

  bool is_conditioned(int level) const {
    switch (cfg_.dwp_mode) {
      case DwpMode::kNone: return false;
      case DwpMode::kBottleneck: return level == cfg_.levels;
      default: return level >= 1 && level <= cfg_.levels;
    }
  }

  int conditioned_count() const {
    int n = 0;
    for (int lvl = 1; lvl <= cfg_.levels; ++lvl) n += is_conditioned(lvl);
    return n;
  }

  void init(Rng& rng) {
    for (auto& b : enc_) {
      b.c1.init(rng);
      b.c2.init(rng);
    }
    bott_.c1.init(rng);
    bott_.c2.init(rng);
    for (auto& b : dec_) {
      b.c1.init(rng);
      b.c2.init(rng);
    }
    head_.init(rng);
    for (int lvl = 1; lvl <= cfg_.levels; ++lvl) {
      if (!is_conditioned(lvl)) continue;
      auto& h = hyper_[static_cast<size_t>(lvl - 1)];
      h.fc1.init(rng);
      h.fc2.init(rng);
      h.fc3.init(rng, 0.1);  // small output scale; shared path dominates early
    }
  }

  static Tensor embedding_tensor(const EmbeddedTask& e) {
    Tensor t({kMaxCoils});
    for (int i = 0; i < kMaxCoils; ++i) t.v[static_cast<size_t>(i)] = static_cast<T>(e.values[i]);
    return t;
  }

  // Predicted 1x1 kernel+bias and the hidden task embedding tau for a
  // conditioned level.
  std::pair<Tensor, Tensor> hypernet_forward(const EmbeddedTask& e, int level) const {
    if (level < 1 || level > cfg_.levels || !is_conditioned(level))
      throw std::invalid_argument("level " + std::to_string(level) +
                                  " has no hypernetwork under dwp mode " +
                                  to_string(cfg_.dwp_mode));
    typename HyperNet::Trace tr;
    Tensor w = hyper_[static_cast<size_t>(level - 1)].forward(embedding_tensor(e), tr);
    return {std::move(w), std::move(tr.tau)};
  }

  // Hidden embedding of the deepest conditioned hypernetwork (used for the
  // task-similarity analysis).
  Tensor task_embedding(const EmbeddedTask& e) const {
    if (cfg_.dwp_mode == DwpMode::kNone)
      throw std::invalid_argument("task embeddings require dwp mode != none");
    return hypernet_forward(e, cfg_.levels).second;
  }

  // 2-channel real forward pass with residual output.
  Tensor forward(const Tensor& x, const EmbeddedTask& e, Trace& tr) const {
    check_input(x);
    tr.input = x;
    tr.enc_tr.resize(enc_.size());
    tr.enc_feats.resize(enc_.size());
    tr.pool_tr.resize(enc_.size());
    tr.dec_tr.resize(dec_.size());
    tr.dyn_w.resize(dec_.size());
    tr.hyper_tr.resize(dec_.size());

    Tensor cur = x;
    for (size_t i = 0; i < enc_.size(); ++i) {
      tr.enc_feats[i] = enc_[i].forward(cur, tr.enc_tr[i]);
      cur = nn::MaxPool2<T>::forward(tr.enc_feats[i], tr.pool_tr[i]);
    }
    cur = bott_.forward(cur, tr.bott_tr);
    const Tensor et = embedding_tensor(e);
    for (int lvl = cfg_.levels; lvl >= 1; --lvl) {
      const size_t i = static_cast<size_t>(lvl - 1);
      cur = nn::Upsample2<T>::forward(cur);
      Tensor skip;
      if (is_conditioned(lvl)) {
        tr.dyn_w[i] = hyper_[i].forward(et, tr.hyper_tr[i]);
        skip = nn::dyn_conv1x1_forward(tr.enc_feats[i], tr.dyn_w[i]);
      } else {
        skip = tr.enc_feats[i];
      }
      cur = dec_[i].forward(nn::concat_channels(cur, skip), tr.dec_tr[i]);
    }
    Tensor out = head_.forward(cur, tr.head_tr);
    for (long i = 0; i < out.numel(); ++i) out.v[static_cast<size_t>(i)] += x.v[static_cast<size_t>(i)];
    return out;
  }

  // Accumulates parameter gradients; returns the gradient w.r.t. the input.
  Tensor backward(const Tensor& gy, const Trace& tr) {
    Tensor gin = gy;  // residual path
    Tensor g = head_.backward(gy, tr.head_tr);
    std::vector<Tensor> g_enc(enc_.size());
    for (int lvl = 1; lvl <= cfg_.levels; ++lvl) {
      const size_t i = static_cast<size_t>(lvl - 1);
      Tensor gcat = dec_[i].backward(g, tr.dec_tr[i]);
      const int c_skip = channels(lvl);
      const int c_up = gcat.shape[0] - c_skip;
      Tensor gup({c_up, gcat.shape[1], gcat.shape[2]});
      Tensor gskip({c_skip, gcat.shape[1], gcat.shape[2]});
      nn::split_channels(gcat, gup, gskip);
      if (is_conditioned(lvl)) {
        Tensor gw({static_cast<int>(tr.dyn_w[i].numel())});
        g_enc[i] = nn::dyn_conv1x1_backward(gskip, tr.enc_feats[i], tr.dyn_w[i], gw);
        hyper_[i].backward(gw, tr.hyper_tr[i]);
      } else {
        g_enc[i] = std::move(gskip);
      }
      g = nn::Upsample2<T>::backward(gup);
    }
    g = bott_.backward(g, tr.bott_tr);
    for (size_t ii = enc_.size(); ii-- > 0;) {
      Tensor ge = nn::MaxPool2<T>::backward(g, tr.pool_tr[ii]);
      for (size_t k = 0; k < ge.v.size(); ++k) ge.v[k] += g_enc[ii].v[k];
      g = enc_[ii].backward(ge, tr.enc_tr[ii]);
    }
    for (size_t k = 0; k < gin.v.size(); ++k) gin.v[k] += g.v[k];
    return gin;
  }

  // Complex-image entry point of the u-update.
  ComplexImage<T> denoise(const ComplexImage<T>& m, const EmbeddedTask& e, Trace& tr) const {
    return from_channels(forward(to_channels(m), e, tr));
  }

  static Tensor to_channels(const ComplexImage<T>& m) {
    Tensor x({2, m.height, m.width});
    const size_t n = m.numel();
    for (size_t i = 0; i < n; ++i) {
      x.v[i] = m.data[i].real();
      x.v[n + i] = m.data[i].imag();
    }
    return x;
  }

  static ComplexImage<T> from_channels(const Tensor& x) {
    ComplexImage<T> m(x.shape[1], x.shape[2]);
    const size_t n = m.numel();
    for (size_t i = 0; i < n; ++i) m.data[i] = std::complex<T>(x.v[i], x.v[n + i]);
    return m;
  }

  void collect(const std::string& prefix, std::vector<nn::ParamRef<T>>& out) {
    for (size_t i = 0; i < enc_.size(); ++i) {
      enc_[i].c1.collect(prefix + "enc" + std::to_string(i + 1) + ".conv1", out);
      enc_[i].c2.collect(prefix + "enc" + std::to_string(i + 1) + ".conv2", out);
    }
    bott_.c1.collect(prefix + "bottleneck.conv1", out);
    bott_.c2.collect(prefix + "bottleneck.conv2", out);
    for (size_t i = 0; i < dec_.size(); ++i) {
      dec_[i].c1.collect(prefix + "dec" + std::to_string(i + 1) + ".conv1", out);
      dec_[i].c2.collect(prefix + "dec" + std::to_string(i + 1) + ".conv2", out);
    }
    head_.collect(prefix + "head", out);
    for (int lvl = 1; lvl <= cfg_.levels; ++lvl) {
      if (!is_conditioned(lvl)) continue;
      auto& h = hyper_[static_cast<size_t>(lvl - 1)];
      const std::string hp = prefix + "hyper" + std::to_string(lvl);
      h.fc1.collect(hp + ".fc1", out);
      h.fc2.collect(hp + ".fc2", out);
      h.fc3.collect(hp + ".fc3", out);
    }
  }

 private:
  void check_input(const Tensor& x) const {
    if (x.shape.size() != 3 || x.shape[0] != 2)
      throw std::invalid_argument("denoiser input must be [2, H, W]");
    const int div = 1 << cfg_.levels;
    if (x.shape[1] % div || x.shape[2] % div || x.shape[1] < div || x.shape[2] < div)
      throw std::invalid_argument("spatial dims must be divisible by 2^levels");
  }

  DenoiserConfig cfg_;
  std::vector<ConvBlock> enc_;
  ConvBlock bott_;
  std::vector<ConvBlock> dec_;
  nn::Conv2d<T> head_;
  std::vector<HyperNet> hyper_;
};

}  // namespace hypercoil
