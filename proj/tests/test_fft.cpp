#include "hypercoil/fft.hpp"

#include "doctest.h"
#include "test_util.hpp"

using namespace hypercoil;
using namespace hypercoil::testutil;

TEST_CASE("fft2c/ifft2c round trip") {
  Rng rng(1);
  for (auto [h, w] : {std::pair{8, 8}, {16, 12}, {9, 7}, {64, 64}}) {
    auto x = random_image<double>(h, w, rng);
    auto back = ifft2c(fft2c(x));
    CHECK(max_abs_diff(x, back) < 1e-12);
    auto xf = random_image<float>(h, w, rng);
    CHECK(max_abs_diff(xf, ifft2c(fft2c(xf))) < 1e-6);
  }
}

TEST_CASE("fft2c preserves the l2 norm") {
  Rng rng(2);
  auto x = random_image<double>(32, 24, rng);
  const double n0 = std::sqrt(inner(x.data, x.data).real());
  auto k = fft2c(x);
  const double n1 = std::sqrt(inner(k.data, k.data).real());
  CHECK(std::abs(n0 - n1) / n0 < 1e-12);
}

TEST_CASE("constant image concentrates at the centered DC bin") {
  for (auto [h, w] : {std::pair{8, 8}, {6, 10}, {9, 5}}) {
    ComplexImage<double> x(h, w);
    const std::complex<double> c(0.7, -0.3);
    for (auto& v : x.data) v = c;
    auto k = fft2c(x);
    const std::complex<double> expect = c * std::sqrt(static_cast<double>(h) * w);
    CHECK(std::abs(k.at(h / 2, w / 2) - expect) < 1e-10);
    double off = 0;
    for (int y = 0; y < h; ++y)
      for (int x2 = 0; x2 < w; ++x2)
        if (y != h / 2 || x2 != w / 2) off = std::max(off, std::abs(k.at(y, x2)));
    CHECK(off < 1e-10);
  }
}

TEST_CASE("fft2c matches the dense centered DFT oracle") {
  Rng rng(3);
  for (auto [h, w] : {std::pair{8, 6}, {7, 9}, {12, 12}}) {
    auto x = random_image<double>(h, w, rng);
    CHECK(max_abs_diff(fft2c(x), dense_dft2c(x)) < 1e-10);
    CHECK(max_abs_diff(ifft2c(x), dense_dft2c(x, /*inverse=*/true)) < 1e-10);
  }
}
