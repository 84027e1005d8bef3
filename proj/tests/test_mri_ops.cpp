#include "hypercoil/mri_ops.hpp"

#include "doctest.h"
#include "hypercoil/coil_sim.hpp"
#include "test_util.hpp"

using namespace hypercoil;
using namespace hypercoil::testutil;

namespace {

TaskVector all_active(int n) {
  TaskVector v;
  v.bits.assign(static_cast<size_t>(n), 1);
  return v;
}

SensitivitySet<double> identity_sens(int h, int w) {
  SensitivitySet<double> s;
  s.maps = CoilStack<double>(1, h, w);
  for (auto& v : s.maps.data) v = 1.0;
  return s;
}

}  // namespace

TEST_CASE("sense operators: identity coil and inactive channels") {
  Rng rng(1);
  auto x = random_image<double>(12, 12, rng);
  const auto s1 = identity_sens(12, 12);
  const auto fwd = sense_forward(x, s1, all_active(1));
  for (size_t i = 0; i < x.data.size(); ++i) CHECK(fwd.data[i] == x.data[i]);
  const auto adj = sense_adjoint(fwd, s1, all_active(1));
  for (size_t i = 0; i < x.data.size(); ++i) CHECK(std::abs(adj.data[i] - x.data[i]) < 1e-15);

  SensitivitySet<double> s3;
  s3.maps = random_stack<double>(3, 12, 12, rng);
  TaskVector g = all_active(3);
  g.bits[1] = 0;
  const auto f3 = sense_forward(x, s3, g);
  for (size_t i = 0; i < x.data.size(); ++i) CHECK(std::abs(f3.coil(1)[i]) == 0.0);
  // adjoint ignores the inactive channel even when its data is nonzero
  auto stack = random_stack<double>(3, 12, 12, rng);
  const auto a_partial = sense_adjoint(stack, s3, g);
  for (size_t i = 0; i < 12 * 12; ++i) stack.coil(1)[i] = 0.0;
  const auto a_zeroed = sense_adjoint(stack, s3, g);
  CHECK(a_partial.data == a_zeroed.data);

  TaskVector none;
  none.bits.assign(3, 0);
  CHECK_THROWS_AS(sense_forward(x, s3, none), std::invalid_argument);
}

TEST_CASE("sense forward/adjoint pass the dot-product test") {
  Rng rng(2);
  SensitivitySet<double> s;
  s.maps = random_stack<double>(4, 16, 16, rng);
  const TaskVector g = all_active(4);
  for (int trial = 0; trial < 20; ++trial) {
    auto x = random_image<double>(16, 16, rng);
    auto z = random_stack<double>(4, 16, 16, rng);
    const auto ax = sense_forward(x, s, g);
    const auto az = sense_adjoint(z, s, g);
    const auto lhs = inner(ax.data, z.data);
    const auto rhs = inner(x.data, az.data);
    CHECK(std::abs(lhs - rhs) / std::abs(lhs) < 1e-12);
  }
}

TEST_CASE("zero-filled reconstruction") {
  Rng rng(3);
  auto x = random_image<double>(16, 16, rng);
  const auto s = identity_sens(16, 16);
  Mask full(16, 16);
  std::fill(full.data.begin(), full.data.end(), 1);
  const auto y = forward_acquire(x, s, full);
  const auto m0 = zero_filled_recon(y, s, all_active(1));
  CHECK(max_abs_diff(m0, x) < 1e-6);

  MultiCoilKspace<double> zeros;
  zeros.data = CoilStack<double>(1, 16, 16);
  zeros.mask = full;
  const auto mz = zero_filled_recon(zeros, s, all_active(1));
  for (const auto& v : mz.data) CHECK(std::abs(v) == 0.0);
}

TEST_CASE("zero-filled matches the dense oracle") {
  Rng rng(4);
  SensitivitySet<double> s;
  s.maps = random_stack<double>(3, 8, 8, rng);
  const Mask m = random_mask(8, 8, 0.5, rng);
  MultiCoilKspace<double> y;
  y.mask = m;
  y.data = random_stack<double>(3, 8, 8, rng);
  for (int j = 0; j < 3; ++j)
    for (size_t i = 0; i < 64; ++i)
      if (!m.data[i]) y.data.coil(j)[i] = 0.0;
  const auto m0 = zero_filled_recon(y, s, all_active(3));
  ComplexImage<double> oracle(8, 8);
  for (int j = 0; j < 3; ++j) {
    ComplexImage<double> yj(8, 8);
    std::copy(y.data.coil(j), y.data.coil(j) + 64, yj.data.begin());
    const auto img = dense_dft2c(yj, /*inverse=*/true);
    for (size_t i = 0; i < 64; ++i) oracle.data[i] += std::conj(s.maps.coil(j)[i]) * img.data[i];
  }
  CHECK(max_abs_diff(m0, oracle) <= 1e-10);
}

TEST_CASE("dcb_update trivial limits") {
  Rng rng(5);
  auto m = random_image<double>(16, 16, rng);
  SensitivitySet<double> s;
  s.maps = random_stack<double>(2, 16, 16, rng);
  const TaskVector g = all_active(2);
  Mask full(16, 16);
  std::fill(full.data.begin(), full.data.end(), 1);

  // consistent data on a full mask collapses to S_j m for any penalties
  const auto y = forward_acquire(m, s, full);
  for (auto [lambda, alpha] : {std::pair{1.0, 1.0}, {10.0, 0.3}, {0.01, 5.0}}) {
    const auto xj = dcb_update(m, y, s, g, {lambda, alpha, 1.0});
    const auto sm = sense_forward(m, s, g);
    double err = 0;
    for (size_t i = 0; i < xj.data.size(); ++i) err = std::max(err, std::abs(xj.data[i] - sm.data[i]));
    CHECK(err < 1e-12);
  }

  // lambda -> 0: the data term vanishes everywhere
  MultiCoilKspace<double> yr;
  yr.mask = random_mask(16, 16, 0.5, rng);
  yr.data = random_stack<double>(2, 16, 16, rng);
  for (int j = 0; j < 2; ++j)
    for (size_t i = 0; i < yr.mask.data.size(); ++i)
      if (!yr.mask.data[i]) yr.data.coil(j)[i] = 0.0;
  const auto xj = dcb_update(m, yr, s, g, {1e-14, 1.0, 1.0});
  const auto sm = sense_forward(m, s, g);
  double err = 0;
  for (size_t i = 0; i < xj.data.size(); ++i) err = std::max(err, std::abs(xj.data[i] - sm.data[i]));
  CHECK(err < 1e-10);

  CHECK_THROWS_AS(dcb_update(m, yr, s, g, {0.0, 1.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(dcb_update(m, yr, s, g, {1.0, -1.0, 1.0}), std::invalid_argument);
}

// generic per-frequency least squares: minimize
//   lambda*|M khat - y|^2 + alpha*|khat - k|^2
// assembled as a 2x2 real normal system per bin, solved independently.
static std::complex<double> per_bin_ls(double lambda, double alpha, bool sampled,
                                       std::complex<double> y, std::complex<double> k) {
  const double a11 = lambda * (sampled ? 1.0 : 0.0) + alpha;
  // decoupled real/imag: same coefficient, rhs = lambda*M*y + alpha*k
  const std::complex<double> rhs = lambda * (sampled ? y : 0.0) + alpha * k;
  return {rhs.real() / a11, rhs.imag() / a11};
}

TEST_CASE("dcb_update matches the per-frequency least-squares oracle") {
  Rng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    auto m = random_image<double>(8, 8, rng);
    SensitivitySet<double> s;
    s.maps = random_stack<double>(3, 8, 8, rng);
    const TaskVector g = all_active(3);
    MultiCoilKspace<double> y;
    y.mask = random_mask(8, 8, 0.5, rng);
    y.data = random_stack<double>(3, 8, 8, rng);
    for (int j = 0; j < 3; ++j)
      for (size_t i = 0; i < 64; ++i)
        if (!y.mask.data[i]) y.data.coil(j)[i] = 0.0;
    const double lambda = std::exp(rng.uniform(-2.0, 2.0));
    const double alpha = std::exp(rng.uniform(-2.0, 2.0));
    const auto xj = dcb_update(m, y, s, g, {lambda, alpha, 1.0});
    for (int j = 0; j < 3; ++j) {
      ComplexImage<double> sjm(8, 8);
      for (size_t i = 0; i < 64; ++i) sjm.data[i] = s.maps.coil(j)[i] * m.data[i];
      const auto k = fft2c(sjm);
      ComplexImage<double> khat(8, 8);
      for (size_t i = 0; i < 64; ++i)
        khat.data[i] = per_bin_ls(lambda, alpha, y.mask.data[i] != 0, y.data.coil(j)[i],
                                  k.data[i]);
      const auto oracle = ifft2c(khat);
      for (size_t i = 0; i < 64; ++i)
        CHECK(std::abs(xj.coil(j)[i] - oracle.data[i]) <= 1e-10);
    }
  }
}

TEST_CASE("dcb_update contracts to the data when lambda dominates") {
  Rng rng(7);
  auto m = random_image<double>(16, 16, rng);
  SensitivitySet<double> s;
  s.maps = random_stack<double>(3, 16, 16, rng);
  const TaskVector g = all_active(3);
  MultiCoilKspace<double> y;
  y.mask = random_mask(16, 16, 0.4, rng);
  y.data = random_stack<double>(3, 16, 16, rng);
  for (int j = 0; j < 3; ++j)
    for (size_t i = 0; i < y.mask.data.size(); ++i)
      if (!y.mask.data[i]) y.data.coil(j)[i] = 0.0;
  const auto xj = dcb_update(m, y, s, g, {1e6, 1.0, 1.0});
  for (int j = 0; j < 3; ++j) {
    ComplexImage<double> img(16, 16);
    std::copy(xj.coil(j), xj.coil(j) + 256, img.data.begin());
    const auto khat = fft2c(img);
    for (size_t i = 0; i < khat.data.size(); ++i) {
      if (!y.mask.data[i]) continue;
      const auto yv = y.data.coil(j)[i];
      CHECK(std::abs(khat.data[i] - yv) / std::max(1e-12, std::abs(yv)) < 1e-4);
    }
  }
}

// pixelwise quadratic minimizer of beta*|m-u|^2 + alpha*sum_j |S_j m - x_j|^2
// via an independently assembled 2x2 real normal system.
static std::complex<double> per_pixel_ls(double alpha, double beta, std::complex<double> u,
                                         const std::vector<std::complex<double>>& sj,
                                         const std::vector<std::complex<double>>& xj) {
  double a = beta;
  std::complex<double> rhs = beta * u;
  for (size_t j = 0; j < sj.size(); ++j) {
    a += alpha * std::norm(sj[j]);
    rhs += alpha * std::conj(sj[j]) * xj[j];
  }
  return {rhs.real() / a, rhs.imag() / a};
}

TEST_CASE("wab_update trivial limits") {
  Rng rng(8);
  auto u = random_image<double>(12, 12, rng);
  SensitivitySet<double> s;
  s.maps = random_stack<double>(3, 12, 12, rng);
  const TaskVector g = all_active(3);

  // x_j = S_j u makes the average collapse to u
  const auto xj = sense_forward(u, s, g);
  const auto m = wab_update(u, xj, s, g, {1.0, 0.7, 0.3});
  CHECK(max_abs_diff(m, u) < 1e-12);

  // alpha -> 0 leaves only the denoiser output
  auto xr = random_stack<double>(3, 12, 12, rng);
  const auto m2 = wab_update(u, xr, s, g, {1.0, 1e-12, 1.0});
  CHECK(max_abs_diff(m2, u) < 1e-6);

  CHECK_THROWS_AS(wab_update(u, xr, s, g, {1.0, 0.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(wab_update(u, xr, s, g, {1.0, 1.0, -2.0}), std::invalid_argument);
}

TEST_CASE("wab_update matches the pixelwise quadratic oracle") {
  Rng rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const int nc = rng.uniform_int(1, 4);
    auto u = random_image<double>(8, 8, rng);
    SensitivitySet<double> s;
    s.maps = random_stack<double>(nc, 8, 8, rng);
    auto xj = random_stack<double>(nc, 8, 8, rng);
    TaskVector g = all_active(nc);
    if (nc > 1) g.bits[static_cast<size_t>(rng.uniform_int(0, nc - 1))] = 0;
    if (g.popcount() == 0) g.bits[0] = 1;
    const double alpha = std::exp(rng.uniform(-2.0, 2.0));
    const double beta = std::exp(rng.uniform(-2.0, 2.0));
    const auto m = wab_update(u, xj, s, g, {1.0, alpha, beta});
    for (size_t i = 0; i < 64; ++i) {
      std::vector<std::complex<double>> sj, xv;
      for (int j = 0; j < nc; ++j) {
        if (!g.active(j)) continue;
        sj.push_back(s.maps.coil(j)[i]);
        xv.push_back(xj.coil(j)[i]);
      }
      const auto oracle = per_pixel_ls(alpha, beta, u.data[i], sj, xv);
      CHECK(std::abs(m.data[i] - oracle) <= 1e-10);
    }
  }
}

TEST_CASE("results depend only on active coils") {
  Rng rng(10);
  auto m = random_image<double>(16, 16, rng);
  auto u = random_image<double>(16, 16, rng);
  SensitivitySet<double> s;
  s.maps = random_stack<double>(4, 16, 16, rng);
  TaskVector g = all_active(4);
  g.bits[2] = 0;
  MultiCoilKspace<double> y;
  y.mask = random_mask(16, 16, 0.5, rng);
  y.data = random_stack<double>(4, 16, 16, rng);
  // scrambling the inactive coil's data and map changes nothing
  auto y2 = y;
  auto s2 = s;
  for (size_t i = 0; i < 256; ++i) {
    y2.data.coil(2)[i] *= 17.0;
    s2.maps.coil(2)[i] *= std::complex<double>(0, 3.0);
  }
  const auto p = CascadePenalties<double>{1.3, 0.8, 0.5};
  CHECK(zero_filled_recon(y, s, g).data == zero_filled_recon(y2, s2, g).data);
  const auto d1 = dcb_update(m, y, s, g, p);
  const auto d2 = dcb_update(m, y2, s2, g, p);
  CHECK(d1.data == d2.data);
  const auto xj = random_stack<double>(4, 16, 16, rng);
  CHECK(wab_update(u, xj, s, g, p).data == wab_update(u, xj, s2, g, p).data);
}

TEST_CASE("full acquisition operator adjointness") {
  Rng rng(11);
  SensitivitySet<double> s;
  s.maps = random_stack<double>(8, 64, 64, rng);
  const Mask m = random_mask(64, 64, 0.3, rng);
  const TaskVector g = all_active(8);
  for (int trial = 0; trial < 20; ++trial) {
    auto x = random_image<double>(64, 64, rng);
    auto z = random_stack<double>(8, 64, 64, rng);
    // A x = M F S x
    const auto ax = forward_acquire(x, s, m);
    // A^H z = S^H F^H M z
    MultiCoilKspace<double> mz;
    mz.mask = m;
    mz.data = z;
    for (int j = 0; j < 8; ++j)
      for (size_t i = 0; i < m.data.size(); ++i)
        if (!m.data[i]) mz.data.coil(j)[i] = 0.0;
    const auto ahz = zero_filled_recon(mz, s, g);
    const auto lhs = inner(ax.data.data, z.data);
    const auto rhs = inner(x.data, ahz.data);
    CHECK(std::abs(lhs - rhs) / std::abs(lhs) < 1e-5);
  }
}
