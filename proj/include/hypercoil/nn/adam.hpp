#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "hypercoil/nn/tensor.hpp"

namespace hypercoil::nn {

// Adaptive moment estimation over a parameter registry. Params whose name
// matches the frozen predicate are skipped entirely.
template <typename T>
class Adam {
 public:
  Adam(std::vector<ParamRef<T>> params, double lr, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8)
      : params_(std::move(params)), lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {
    m_.resize(params_.size());
    v_.resize(params_.size());
    for (size_t i = 0; i < params_.size(); ++i) {
      m_[i].assign(params_[i].value->v.size(), 0.0);
      v_[i].assign(params_[i].value->v.size(), 0.0);
    }
  }

  void set_frozen(std::function<bool(const std::string&)> pred) { frozen_ = std::move(pred); }

  void step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(b1_, t_);
    const double bc2 = 1.0 - std::pow(b2_, t_);
    for (size_t i = 0; i < params_.size(); ++i) {
      if (frozen_ && frozen_(params_[i].name)) continue;
      auto& p = params_[i].value->v;
      auto& g = params_[i].grad->v;
      for (size_t k = 0; k < p.size(); ++k) {
        const double gk = static_cast<double>(g[k]);
        m_[i][k] = b1_ * m_[i][k] + (1.0 - b1_) * gk;
        v_[i][k] = b2_ * v_[i][k] + (1.0 - b2_) * gk * gk;
        const double mh = m_[i][k] / bc1;
        const double vh = v_[i][k] / bc2;
        p[k] = static_cast<T>(static_cast<double>(p[k]) - lr_ * mh / (std::sqrt(vh) + eps_));
      }
    }
  }

 private:
  std::vector<ParamRef<T>> params_;
  double lr_, b1_, b2_, eps_;
  long t_ = 0;
  std::vector<std::vector<double>> m_, v_;
  std::function<bool(const std::string&)> frozen_;
};

}  // namespace hypercoil::nn
