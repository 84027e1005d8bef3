#include "hypercoil/coil_sim.hpp"

#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "hypercoil/dataset.hpp"
#include "test_util.hpp"

using namespace hypercoil;
using namespace hypercoil::testutil;
namespace fs = std::filesystem;

TEST_CASE("phantoms are deterministic and normalized") {
  const auto a = generate_phantom(64, PhantomKind::kSheppLogan, 0);
  const auto b = generate_phantom(64, PhantomKind::kSheppLogan, 0);
  CHECK(a.data == b.data);
  CHECK(max_abs(a) == doctest::Approx(1.0).epsilon(1e-12));

  const auto c = generate_phantom(64, PhantomKind::kSmoothRandom, 3);
  const auto d = generate_phantom(64, PhantomKind::kSmoothRandom, 4);
  CHECK(max_abs(c) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(c.data != d.data);

  CHECK_THROWS_AS(generate_phantom(7, PhantomKind::kSheppLogan, 0), std::invalid_argument);
}

TEST_CASE("smooth-random phantom magnitude is smooth") {
  const auto x = generate_phantom(32, PhantomKind::kSmoothRandom, 7);
  double max_grad = 0;
  for (int y = 0; y < 32; ++y) {
    for (int ix = 0; ix < 32; ++ix) {
      const double m = std::abs(x.at(y, ix));
      if (y + 1 < 32) max_grad = std::max(max_grad, std::abs(std::abs(x.at(y + 1, ix)) - m));
      if (ix + 1 < 32) max_grad = std::max(max_grad, std::abs(std::abs(x.at(y, ix + 1)) - m));
    }
  }
  CHECK(max_grad < 0.5);
}

TEST_CASE("sensitivity maps: coverage and normalization") {
  const auto one = simulate_sensitivities(1, 64, 0, true);
  for (const auto& v : one.maps.data) CHECK(std::abs(v) == doctest::Approx(1.0).epsilon(1e-12));

  const auto s = simulate_sensitivities(8, 64, 0, true);
  const size_t plane = s.maps.plane_size();
  for (size_t i = 0; i < plane; ++i) {
    double ss = 0;
    for (int j = 0; j < 8; ++j) ss += std::norm(s.maps.data[j * plane + i]);
    CHECK(ss == doctest::Approx(1.0).epsilon(1e-6));
  }

  const auto raw = simulate_sensitivities(8, 64, 0, false);
  double min_ss = 1e30;
  for (size_t i = 0; i < plane; ++i) {
    double ss = 0;
    for (int j = 0; j < 8; ++j) ss += std::norm(raw.maps.data[j * plane + i]);
    min_ss = std::min(min_ss, ss);
  }
  CHECK(min_ss > 0.0);

  CHECK_THROWS_AS(simulate_sensitivities(0, 64, 0, true), std::invalid_argument);
  CHECK_THROWS_AS(simulate_sensitivities(33, 64, 0, true), std::invalid_argument);
}

TEST_CASE("cartesian mask keeps round(W/accel) whole columns including ACS") {
  const Mask m = make_mask(64, 368, MaskKind::kCartesian, 4.0, 24, 0);
  // constant along the readout axis
  for (int x = 0; x < 368; ++x)
    for (int y = 1; y < 64; ++y) CHECK(m.at(y, x) == m.at(0, x));
  int cols = 0;
  for (int x = 0; x < 368; ++x) cols += m.at(0, x);
  CHECK(cols == 92);
  const int acs_start = (368 - 24) / 2;
  for (int x = acs_start; x < acs_start + 24; ++x) CHECK(m.at(0, x) == 1);

  const Mask full = make_mask(64, 64, MaskKind::kCartesian, 1.0001, 0, 0);
  CHECK(full.ones() == 64u * 64u);

  CHECK_THROWS_AS(make_mask(64, 64, MaskKind::kCartesian, 8.0, 8, 0), std::invalid_argument);
  CHECK_THROWS_AS(make_mask(64, 64, MaskKind::kCartesian, 1.0, 0, 0), std::invalid_argument);
}

TEST_CASE("poisson mask hits the target sampling fraction") {
  const Mask m = make_mask(256, 218, MaskKind::kPoisson, 5.0, 0, 3);
  const double frac = static_cast<double>(m.ones()) / (256.0 * 218.0);
  CHECK(frac > 0.18);
  CHECK(frac < 0.22);
  for (uint8_t v : m.data) CHECK((v == 0 || v == 1));
  // central disc fully sampled
  const double cy = 0.5 * 255, cx = 0.5 * 217;
  for (int y = 0; y < 256; ++y)
    for (int x = 0; x < 218; ++x)
      if ((y - cy) * (y - cy) + (x - cx) * (x - cx) <= 36.0) CHECK(m.at(y, x) == 1);

  const Mask m2 = make_mask(256, 218, MaskKind::kPoisson, 5.0, 0, 3);
  CHECK(m.data == m2.data);
}

TEST_CASE("forward_acquire trivial cases") {
  Rng rng(5);
  auto x = random_image<double>(16, 16, rng);
  SensitivitySet<double> s;
  s.maps = CoilStack<double>(1, 16, 16);
  for (auto& v : s.maps.data) v = 1.0;
  Mask full(16, 16);
  std::fill(full.data.begin(), full.data.end(), 1);
  const auto y = forward_acquire(x, s, full);
  ComplexImage<double> yc(16, 16);
  std::copy(y.data.coil(0), y.data.coil(0) + 256, yc.data.begin());
  CHECK(max_abs_diff(yc, fft2c(x)) < 1e-12);

  Mask none(16, 16);
  const auto y0 = forward_acquire(x, s, none);
  for (const auto& v : y0.data.data) CHECK(std::abs(v) == 0.0);
}

TEST_CASE("forward_acquire matches the dense DFT oracle") {
  Rng rng(6);
  auto x = random_image<double>(8, 8, rng);
  SensitivitySet<double> s;
  s.maps = random_stack<double>(2, 8, 8, rng);
  const Mask m = random_mask(8, 8, 0.5, rng);
  const auto y = forward_acquire(x, s, m);
  for (int j = 0; j < 2; ++j) {
    ComplexImage<double> coil(8, 8);
    for (size_t i = 0; i < 64; ++i) coil.data[i] = s.maps.coil(j)[i] * x.data[i];
    const auto oracle = dense_dft2c(coil);
    for (int iy = 0; iy < 8; ++iy)
      for (int ix = 0; ix < 8; ++ix) {
        const auto expect = m.at(iy, ix) ? oracle.at(iy, ix) : std::complex<double>(0, 0);
        CHECK(std::abs(y.data.at(j, iy, ix) - expect) <= 1e-10);
      }
  }
}

TEST_CASE("acquisition is linear and masking is idempotent") {
  Rng rng(9);
  auto x1 = random_image<double>(16, 16, rng);
  auto x2 = random_image<double>(16, 16, rng);
  SensitivitySet<double> s;
  s.maps = random_stack<double>(3, 16, 16, rng);
  const Mask m = random_mask(16, 16, 0.4, rng);
  const std::complex<double> a(rng.normal(), rng.normal()), b(rng.normal(), rng.normal());
  ComplexImage<double> mix(16, 16);
  for (size_t i = 0; i < mix.data.size(); ++i) mix.data[i] = a * x1.data[i] + b * x2.data[i];
  const auto ym = forward_acquire(mix, s, m);
  const auto y1 = forward_acquire(x1, s, m);
  const auto y2 = forward_acquire(x2, s, m);
  double scale = 0, err = 0;
  for (size_t i = 0; i < ym.data.data.size(); ++i) {
    const auto lhs = ym.data.data[i];
    const auto rhs = a * y1.data.data[i] + b * y2.data.data[i];
    scale = std::max(scale, std::abs(lhs));
    err = std::max(err, std::abs(lhs - rhs));
  }
  CHECK(err / scale < 1e-6);

  // applying the mask a second time changes nothing
  auto twice = ym;
  for (int j = 0; j < 3; ++j)
    for (size_t i = 0; i < m.data.size(); ++i)
      if (!m.data[i]) twice.data.coil(j)[i] = 0.0;
  CHECK(twice.data.data == ym.data.data);
}

TEST_CASE("dataset build, round trip, and determinism") {
  const fs::path dir1 = fs::temp_directory_path() / "hypercoil_test_ds1";
  const fs::path dir2 = fs::temp_directory_path() / "hypercoil_test_ds2";
  fs::remove_all(dir1);
  fs::remove_all(dir2);
  SimConfig cfg;
  cfg.n_samples = 4;
  cfg.size = 16;
  cfg.n_coils = 3;
  cfg.acceleration = 2.0;
  cfg.acs = 4;
  cfg.seed = 42;
  const DatasetManifest m1 = build_dataset(cfg, dir1);
  CHECK(m1.samples.size() == 4);
  for (const auto& rec : m1.samples) {
    for (const auto& [k, f] : rec.files) CHECK(fs::exists(dir1 / f));
  }

  const DatasetManifest loaded = load_manifest(dir1);
  CHECK(loaded.n_samples == 4);
  CHECK(loaded.n_coils == 3);
  CHECK(loaded.height == 16);

  build_dataset(cfg, dir2);
  for (const auto& entry : fs::directory_iterator(dir1)) {
    const auto other = dir2 / entry.path().filename();
    REQUIRE(fs::exists(other));
    std::ifstream f1(entry.path(), std::ios::binary), f2(other, std::ios::binary);
    const std::string c1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    const std::string c2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(c1 == c2);
  }

  // bit-exact sample round trip through the loader
  const Sample s0 = load_sample(loaded, 0);
  CHECK(s0.image.numel() == 256);
  CHECK(s0.sens.maps.data.size() == 3 * 256);
  CHECK(s0.kspace.data.data.size() == 3 * 256);
  const Sample s0b = load_sample(m1, 0);
  CHECK(s0.image.data == s0b.image.data);
  CHECK(s0.kspace.data.data == s0b.kspace.data.data);

  // truncated binary is reported with the file name
  {
    const fs::path corrupt = dir1 / m1.samples[1].files.at("image");
    fs::resize_file(corrupt, 100);
    bool threw = false;
    try {
      load_sample(m1, 1);
    } catch (const IoError& e) {
      threw = true;
      CHECK(std::string(e.what()).find(corrupt.filename().string()) != std::string::npos);
      CHECK(std::string(e.what()).find("size mismatch") != std::string::npos);
    }
    CHECK(threw);
  }
  fs::remove_all(dir1);
  fs::remove_all(dir2);
}
