#include "hypercoil/nn/layers.hpp"

#include "doctest.h"

using namespace hypercoil;
using namespace hypercoil::nn;

namespace {

Tensor<double> random_tensor(std::vector<int> shape, Rng& rng) {
  Tensor<double> t(std::move(shape));
  for (auto& v : t.v) v = rng.normal();
  return t;
}

double dot(const Tensor<double>& a, const Tensor<double>& b) {
  double s = 0;
  for (size_t i = 0; i < a.v.size(); ++i) s += a.v[i] * b.v[i];
  return s;
}

// central finite differences of f at x, compared entrywise to g
template <typename F>
void check_grad(Tensor<double>& x, const Tensor<double>& g, F f, double h = 1e-6,
                double tol = 1e-6) {
  double num = 0, den = 0;
  for (size_t i = 0; i < x.v.size(); ++i) {
    const double keep = x.v[i];
    x.v[i] = keep + h;
    const double fp = f();
    x.v[i] = keep - h;
    const double fm = f();
    x.v[i] = keep;
    const double fd = (fp - fm) / (2 * h);
    num += (fd - g.v[i]) * (fd - g.v[i]);
    den += fd * fd;
  }
  CHECK(std::sqrt(num) <= tol * std::max(1.0, std::sqrt(den)));
}

}  // namespace

TEST_CASE("conv2d gradients match finite differences") {
  Rng rng(1);
  for (int k : {3, 1}) {
    Conv2d<double> conv(3, 4, k);
    conv.init(rng);
    Tensor<double> x = random_tensor({3, 6, 6}, rng);
    const Tensor<double> r = random_tensor({4, 6, 6}, rng);
    auto loss = [&] {
      Conv2d<double>::Trace tr;
      return dot(conv.forward(x, tr), r);
    };
    Conv2d<double>::Trace tr;
    conv.forward(x, tr);
    conv.gw.zero();
    conv.gb.zero();
    const Tensor<double> gx = conv.backward(r, tr);
    check_grad(x, gx, loss);
    check_grad(conv.w, conv.gw, loss);
    check_grad(conv.b, conv.gb, loss);
  }
}

TEST_CASE("linear gradients match finite differences") {
  Rng rng(2);
  Linear<double> fc(5, 7);
  fc.init(rng);
  Tensor<double> x = random_tensor({5}, rng);
  const Tensor<double> r = random_tensor({7}, rng);
  auto loss = [&] {
    Linear<double>::Trace tr;
    return dot(fc.forward(x, tr), r);
  };
  Linear<double>::Trace tr;
  fc.forward(x, tr);
  fc.gw.zero();
  fc.gb.zero();
  const Tensor<double> gx = fc.backward(r, tr);
  check_grad(x, gx, loss);
  check_grad(fc.w, fc.gw, loss);
  check_grad(fc.b, fc.gb, loss);
}

TEST_CASE("pooling, upsampling, activation backward passes") {
  Rng rng(3);
  Tensor<double> x = random_tensor({2, 6, 6}, rng);
  const Tensor<double> r = random_tensor({2, 3, 3}, rng);
  auto pool_loss = [&] {
    MaxPool2<double>::Trace tr;
    return dot(MaxPool2<double>::forward(x, tr), r);
  };
  MaxPool2<double>::Trace ptr;
  MaxPool2<double>::forward(x, ptr);
  check_grad(x, MaxPool2<double>::backward(r, ptr), pool_loss, 1e-7);

  Tensor<double> xu = random_tensor({2, 3, 3}, rng);
  const Tensor<double> ru = random_tensor({2, 6, 6}, rng);
  auto up_loss = [&] { return dot(Upsample2<double>::forward(xu), ru); };
  check_grad(xu, Upsample2<double>::backward(ru), up_loss);

  Tensor<double> xa = random_tensor({2, 4, 4}, rng);
  const Tensor<double> ra = random_tensor({2, 4, 4}, rng);
  auto act_loss = [&] {
    LeakyRelu<double>::Trace tr;
    return dot(LeakyRelu<double>::forward(xa, tr), ra);
  };
  LeakyRelu<double>::Trace atr;
  LeakyRelu<double>::forward(xa, atr);
  check_grad(xa, LeakyRelu<double>::backward(ra, atr), act_loss, 1e-7, 1e-5);
}

TEST_CASE("dynamic 1x1 convolution gradients") {
  Rng rng(4);
  Tensor<double> x = random_tensor({4, 5, 5}, rng);
  Tensor<double> w = random_tensor({4 * 4 + 4}, rng);
  const Tensor<double> r = random_tensor({4, 5, 5}, rng);
  auto loss = [&] { return dot(dyn_conv1x1_forward(x, w), r); };
  Tensor<double> gw({4 * 4 + 4});
  const Tensor<double> gx = dyn_conv1x1_backward(r, x, w, gw);
  check_grad(x, gx, loss);
  check_grad(w, gw, loss);
}

TEST_CASE("concat/split are mutually consistent") {
  Rng rng(5);
  const Tensor<double> a = random_tensor({2, 4, 4}, rng);
  const Tensor<double> b = random_tensor({3, 4, 4}, rng);
  const Tensor<double> y = concat_channels(a, b);
  CHECK(y.shape == std::vector<int>{5, 4, 4});
  Tensor<double> ga({2, 4, 4}), gb({3, 4, 4});
  split_channels(y, ga, gb);
  CHECK(ga.v == a.v);
  CHECK(gb.v == b.v);
}
