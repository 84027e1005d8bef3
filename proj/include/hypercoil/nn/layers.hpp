#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "hypercoil/nn/tensor.hpp"
#include "hypercoil/rng.hpp"

namespace hypercoil::nn {

inline constexpr double kLeakySlope = 0.01;

template <typename T>
using MatRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapM = Eigen::Map<MatRM<T>>;
template <typename T>
using CMapM = Eigen::Map<const MatRM<T>>;

// Kaiming-uniform fan-in initialization, leaky-ReLU gain by default.
template <typename T>
void init_kaiming_uniform(Tensor<T>& w, int fan_in, Rng& rng, double gain_scale = 1.0) {
  const double gain = std::sqrt(2.0 / (1.0 + kLeakySlope * kLeakySlope));
  const double bound = gain_scale * gain * std::sqrt(3.0 / fan_in);
  for (auto& x : w.v) x = static_cast<T>(rng.uniform(-bound, bound));
}

template <typename T>
void init_bias_uniform(Tensor<T>& b, int fan_in, Rng& rng, double gain_scale = 1.0) {
  const double bound = gain_scale / std::sqrt(static_cast<double>(fan_in));
  for (auto& x : b.v) x = static_cast<T>(rng.uniform(-bound, bound));
}

namespace detail {
// shared scratch for im2col matrices; single-threaded training path
template <typename T>
avec<T>& scratch(int which) {
  static avec<T> bufs[2];
  return bufs[which];
}
}  // namespace detail

// ---------------------------------------------------------------------------
// Conv2d: kxk, stride 1, same padding (pad = k/2). Weight layout
// [out_c, in_c*k*k]; forward/backward via im2col + GEMM.
// ---------------------------------------------------------------------------
template <typename T>
struct Conv2d {
  int in_c = 0, out_c = 0, k = 3;
  Tensor<T> w, b, gw, gb;

  Conv2d() = default;
  Conv2d(int ic, int oc, int kernel) : in_c(ic), out_c(oc), k(kernel) {
    w = Tensor<T>({oc, ic * k * k});
    b = Tensor<T>({oc});
    gw = Tensor<T>({oc, ic * k * k});
    gb = Tensor<T>({oc});
  }

  void init(Rng& rng) {
    init_kaiming_uniform(w, in_c * k * k, rng);
    init_bias_uniform(b, in_c * k * k, rng);
  }

  struct Trace {
    Tensor<T> x;  // input, re-expanded to im2col in backward
  };

  void im2col(const Tensor<T>& x, avec<T>& col) const {
    const int h = x.shape[1], wd = x.shape[2];
    const int pad = k / 2;
    const long hw = static_cast<long>(h) * wd;
    col.assign(static_cast<size_t>(in_c) * k * k * hw, T(0));
    for (int c = 0; c < in_c; ++c) {
      const T* xc = x.data() + static_cast<long>(c) * hw;
      for (int dy = 0; dy < k; ++dy) {
        for (int dx = 0; dx < k; ++dx) {
          T* row = col.data() + ((static_cast<long>(c) * k + dy) * k + dx) * hw;
          for (int y = 0; y < h; ++y) {
            const int sy = y + dy - pad;
            if (sy < 0 || sy >= h) continue;
            const int x0 = std::max(0, pad - dx);
            const int x1 = std::min(wd, wd + pad - dx);
            const T* src = xc + static_cast<long>(sy) * wd + (x0 + dx - pad);
            T* dst = row + static_cast<long>(y) * wd + x0;
            std::copy(src, src + (x1 - x0), dst);
          }
        }
      }
    }
  }

  void col2im(const avec<T>& col, Tensor<T>& gx) const {
    const int h = gx.shape[1], wd = gx.shape[2];
    const int pad = k / 2;
    const long hw = static_cast<long>(h) * wd;
    for (int c = 0; c < in_c; ++c) {
      T* xc = gx.data() + static_cast<long>(c) * hw;
      for (int dy = 0; dy < k; ++dy) {
        for (int dx = 0; dx < k; ++dx) {
          const T* row = col.data() + ((static_cast<long>(c) * k + dy) * k + dx) * hw;
          for (int y = 0; y < h; ++y) {
            const int sy = y + dy - pad;
            if (sy < 0 || sy >= h) continue;
            const int x0 = std::max(0, pad - dx);
            const int x1 = std::min(wd, wd + pad - dx);
            T* dst = xc + static_cast<long>(sy) * wd + (x0 + dx - pad);
            const T* src = row + static_cast<long>(y) * wd + x0;
            for (int i = 0; i < x1 - x0; ++i) dst[i] += src[i];
          }
        }
      }
    }
  }

  Tensor<T> forward(const Tensor<T>& x, Trace& tr) const {
    const int h = x.shape[1], wd = x.shape[2];
    const long hw = static_cast<long>(h) * wd;
    tr.x = x;
    auto& col = detail::scratch<T>(0);
    im2col(x, col);
    Tensor<T> y({out_c, h, wd});
    CMapM<T> wm(w.data(), out_c, in_c * k * k);
    CMapM<T> cm(col.data(), in_c * k * k, hw);
    MapM<T> ym(y.data(), out_c, hw);
    ym.noalias() = wm * cm;
    for (int oc = 0; oc < out_c; ++oc) ym.row(oc).array() += b.v[static_cast<size_t>(oc)];
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy, const Trace& tr) {
    const int h = tr.x.shape[1], wd = tr.x.shape[2];
    const long hw = static_cast<long>(h) * wd;
    auto& col = detail::scratch<T>(0);
    im2col(tr.x, col);
    CMapM<T> gym(gy.data(), out_c, hw);
    CMapM<T> cm(col.data(), in_c * k * k, hw);
    MapM<T> gwm(gw.data(), out_c, in_c * k * k);
    gwm.noalias() += gym * cm.transpose();
    for (int oc = 0; oc < out_c; ++oc) gb.v[static_cast<size_t>(oc)] += gym.row(oc).sum();
    auto& gcol = detail::scratch<T>(1);
    gcol.resize(static_cast<size_t>(in_c) * k * k * hw);
    MapM<T> gcm(gcol.data(), in_c * k * k, hw);
    CMapM<T> wm(w.data(), out_c, in_c * k * k);
    gcm.noalias() = wm.transpose() * gym;
    Tensor<T> gx({in_c, h, wd});
    col2im(gcol, gx);
    return gx;
  }

  void collect(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    out.push_back({prefix + ".w", &w, &gw});
    out.push_back({prefix + ".b", &b, &gb});
  }
};

// ---------------------------------------------------------------------------
// LeakyReLU
// ---------------------------------------------------------------------------
template <typename T>
struct LeakyRelu {
  struct Trace {
    std::vector<uint8_t> pos;
  };

  static Tensor<T> forward(const Tensor<T>& x, Trace& tr) {
    Tensor<T> y(x.shape);
    tr.pos.resize(x.v.size());
    for (size_t i = 0; i < x.v.size(); ++i) {
      const bool p = x.v[i] > T(0);
      tr.pos[i] = p;
      y.v[i] = p ? x.v[i] : static_cast<T>(kLeakySlope) * x.v[i];
    }
    return y;
  }

  static Tensor<T> backward(const Tensor<T>& gy, const Trace& tr) {
    Tensor<T> gx(gy.shape);
    for (size_t i = 0; i < gy.v.size(); ++i)
      gx.v[i] = tr.pos[i] ? gy.v[i] : static_cast<T>(kLeakySlope) * gy.v[i];
    return gx;
  }
};

// ---------------------------------------------------------------------------
// 2x2 max pooling, stride 2 (even spatial dims required)
// ---------------------------------------------------------------------------
template <typename T>
struct MaxPool2 {
  struct Trace {
    std::vector<int> argmax;  // input flat index per output element
    std::vector<int> in_shape;
  };

  static Tensor<T> forward(const Tensor<T>& x, Trace& tr) {
    const int c = x.shape[0], h = x.shape[1], w = x.shape[2];
    if (h % 2 || w % 2) throw std::invalid_argument("maxpool2 requires even spatial dims");
    Tensor<T> y({c, h / 2, w / 2});
    tr.argmax.resize(static_cast<size_t>(y.numel()));
    tr.in_shape = x.shape;
    long o = 0;
    for (int ch = 0; ch < c; ++ch) {
      const T* xc = x.data() + static_cast<long>(ch) * h * w;
      for (int y0 = 0; y0 < h; y0 += 2) {
        for (int x0 = 0; x0 < w; x0 += 2, ++o) {
          int best = y0 * w + x0;
          T bv = xc[best];
          const int cand[3] = {y0 * w + x0 + 1, (y0 + 1) * w + x0, (y0 + 1) * w + x0 + 1};
          for (int idx : cand)
            if (xc[idx] > bv) {
              bv = xc[idx];
              best = idx;
            }
          y.v[static_cast<size_t>(o)] = bv;
          tr.argmax[static_cast<size_t>(o)] = static_cast<int>(ch * h * w + best);
        }
      }
    }
    return y;
  }

  static Tensor<T> backward(const Tensor<T>& gy, const Trace& tr) {
    Tensor<T> gx(tr.in_shape);
    for (size_t i = 0; i < gy.v.size(); ++i)
      gx.v[static_cast<size_t>(tr.argmax[i])] += gy.v[i];
    return gx;
  }
};

// ---------------------------------------------------------------------------
// 2x nearest-neighbour upsampling
// ---------------------------------------------------------------------------
template <typename T>
struct Upsample2 {
  static Tensor<T> forward(const Tensor<T>& x) {
    const int c = x.shape[0], h = x.shape[1], w = x.shape[2];
    Tensor<T> y({c, 2 * h, 2 * w});
    for (int ch = 0; ch < c; ++ch) {
      const T* xc = x.data() + static_cast<long>(ch) * h * w;
      T* yc = y.data() + static_cast<long>(ch) * 4 * h * w;
      for (int iy = 0; iy < h; ++iy)
        for (int ix = 0; ix < w; ++ix) {
          const T v = xc[iy * w + ix];
          T* row = yc + (2 * iy) * (2 * w) + 2 * ix;
          row[0] = v;
          row[1] = v;
          row[2 * w] = v;
          row[2 * w + 1] = v;
        }
    }
    return y;
  }

  static Tensor<T> backward(const Tensor<T>& gy) {
    const int c = gy.shape[0], h2 = gy.shape[1], w2 = gy.shape[2];
    Tensor<T> gx({c, h2 / 2, w2 / 2});
    for (int ch = 0; ch < c; ++ch) {
      const T* gc = gy.data() + static_cast<long>(ch) * h2 * w2;
      T* xc = gx.data() + static_cast<long>(ch) * (h2 / 2) * (w2 / 2);
      for (int iy = 0; iy < h2 / 2; ++iy)
        for (int ix = 0; ix < w2 / 2; ++ix) {
          const T* row = gc + (2 * iy) * w2 + 2 * ix;
          xc[iy * (w2 / 2) + ix] = row[0] + row[1] + row[w2] + row[w2 + 1];
        }
    }
    return gx;
  }
};

// ---------------------------------------------------------------------------
// channel concatenation
// ---------------------------------------------------------------------------
template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  Tensor<T> y({a.shape[0] + b.shape[0], a.shape[1], a.shape[2]});
  std::copy(a.v.begin(), a.v.end(), y.v.begin());
  std::copy(b.v.begin(), b.v.end(), y.v.begin() + a.numel());
  return y;
}

template <typename T>
void split_channels(const Tensor<T>& gy, Tensor<T>& ga, Tensor<T>& gb) {
  std::copy(gy.v.begin(), gy.v.begin() + ga.numel(), ga.v.begin());
  std::copy(gy.v.begin() + ga.numel(), gy.v.end(), gb.v.begin());
}

// ---------------------------------------------------------------------------
// Fully connected layer, weight [out, in]
// ---------------------------------------------------------------------------
template <typename T>
struct Linear {
  int in_n = 0, out_n = 0;
  Tensor<T> w, b, gw, gb;

  Linear() = default;
  Linear(int in, int out) : in_n(in), out_n(out) {
    w = Tensor<T>({out, in});
    b = Tensor<T>({out});
    gw = Tensor<T>({out, in});
    gb = Tensor<T>({out});
  }

  void init(Rng& rng, double gain_scale = 1.0) {
    init_kaiming_uniform(w, in_n, rng, gain_scale);
    init_bias_uniform(b, in_n, rng, gain_scale);
  }

  struct Trace {
    Tensor<T> x;
  };

  Tensor<T> forward(const Tensor<T>& x, Trace& tr) const {
    tr.x = x;
    Tensor<T> y({out_n});
    CMapM<T> wm(w.data(), out_n, in_n);
    Eigen::Map<const Eigen::Vector<T, Eigen::Dynamic>> xv(x.data(), in_n);
    Eigen::Map<Eigen::Vector<T, Eigen::Dynamic>> yv(y.data(), out_n);
    yv.noalias() = wm * xv;
    for (int i = 0; i < out_n; ++i) y.v[static_cast<size_t>(i)] += b.v[static_cast<size_t>(i)];
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy, const Trace& tr) {
    CMapM<T> wm(w.data(), out_n, in_n);
    MapM<T> gwm(gw.data(), out_n, in_n);
    Eigen::Map<const Eigen::Vector<T, Eigen::Dynamic>> gyv(gy.data(), out_n);
    Eigen::Map<const Eigen::Vector<T, Eigen::Dynamic>> xv(tr.x.data(), in_n);
    gwm.noalias() += gyv * xv.transpose();
    for (int i = 0; i < out_n; ++i) gb.v[static_cast<size_t>(i)] += gy.v[static_cast<size_t>(i)];
    Tensor<T> gx({in_n});
    Eigen::Map<Eigen::Vector<T, Eigen::Dynamic>> gxv(gx.data(), in_n);
    gxv.noalias() = wm.transpose() * gyv;
    return gx;
  }

  void collect(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    out.push_back({prefix + ".w", &w, &gw});
    out.push_back({prefix + ".b", &b, &gb});
  }
};

// ---------------------------------------------------------------------------
// 1x1 convolution whose kernel/bias arrive per call (hypernetwork output).
// weights layout: C*C kernel entries (row = out channel) followed by C biases.
// ---------------------------------------------------------------------------
template <typename T>
Tensor<T> dyn_conv1x1_forward(const Tensor<T>& x, const Tensor<T>& weights) {
  const int c = x.shape[0];
  const long hw = static_cast<long>(x.shape[1]) * x.shape[2];
  Tensor<T> y(x.shape);
  CMapM<T> wm(weights.data(), c, c);
  CMapM<T> xm(x.data(), c, hw);
  MapM<T> ym(y.data(), c, hw);
  ym.noalias() = wm * xm;
  const T* bias = weights.data() + static_cast<long>(c) * c;
  for (int oc = 0; oc < c; ++oc) ym.row(oc).array() += bias[oc];
  return y;
}

// returns gx; gweights (length C*C + C) is accumulated.
template <typename T>
Tensor<T> dyn_conv1x1_backward(const Tensor<T>& gy, const Tensor<T>& x, const Tensor<T>& weights,
                               Tensor<T>& gweights) {
  const int c = x.shape[0];
  const long hw = static_cast<long>(x.shape[1]) * x.shape[2];
  CMapM<T> gym(gy.data(), c, hw);
  CMapM<T> xm(x.data(), c, hw);
  MapM<T> gwm(gweights.data(), c, c);
  gwm.noalias() += gym * xm.transpose();
  T* gbias = gweights.data() + static_cast<long>(c) * c;
  for (int oc = 0; oc < c; ++oc) gbias[oc] += gym.row(oc).sum();
  Tensor<T> gx(x.shape);
  CMapM<T> wm(weights.data(), c, c);
  MapM<T> gxm(gx.data(), c, hw);
  gxm.noalias() = wm.transpose() * gym;
  return gx;
}

}  // namespace hypercoil::nn
