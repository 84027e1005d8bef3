#include "hypercoil/cascade.hpp"

#include "doctest.h"
#include "hypercoil/coil_sim.hpp"
#include "hypercoil/trainer.hpp"
#include "test_util.hpp"

using namespace hypercoil;
using namespace hypercoil::testutil;

namespace {

TaskVector all_active(int n) {
  TaskVector v;
  v.bits.assign(static_cast<size_t>(n), 1);
  return v;
}

struct Scene {
  ComplexImage<double> x;
  SensitivitySet<double> s;
  MultiCoilKspace<double> y;
  TaskVector gamma;
};

Scene make_scene(int size, int nc, double keep, uint64_t seed) {
  Rng rng(seed);
  Scene sc;
  sc.x = random_image<double>(size, size, rng);
  sc.s.maps = random_stack<double>(nc, size, size, rng);
  const Mask m = random_mask(size, size, keep, rng);
  sc.y = forward_acquire(sc.x, sc.s, m);
  sc.gamma = all_active(nc);
  return sc;
}

ModelConfig tiny_config(DwpMode mode = DwpMode::kAll, int cascades = 2) {
  ModelConfig mc;
  mc.cascades = cascades;
  mc.denoiser.levels = 2;
  mc.denoiser.base_channels = 4;
  mc.denoiser.embed_dim = 8;
  mc.denoiser.dwp_mode = mode;
  return mc;
}

}  // namespace

TEST_CASE("single cascade with a pass-through denoiser composes the blocks") {
  const Scene sc = make_scene(16, 3, 0.5, 1);
  CascadeModel<double> model(tiny_config(DwpMode::kNone, 1));
  Rng rng(2);
  model.init(rng);
  for (auto& pr : model.params())
    if (pr.name.find("head") != std::string::npos) pr.value->zero();

  const auto out = model.reconstruct(sc.y, sc.s, sc.gamma);

  const auto m0 = zero_filled_recon(sc.y, sc.s, sc.gamma);
  const auto p = model.penalties(0);
  typename HyperDenoiser<double>::Trace tr;
  const auto u = model.denoiser(0).denoise(m0, embed_task(sc.gamma), tr);
  CHECK(u.data == m0.data);  // zeroed head leaves the residual input
  const auto xj = dcb_update(m0, sc.y, sc.s, sc.gamma, p);
  const auto direct = wab_update(u, xj, sc.s, sc.gamma, p);
  CHECK(out.data == direct.data);
}

TEST_CASE("reconstruction is deterministic") {
  const Scene sc = make_scene(16, 3, 0.5, 3);
  CascadeModel<double> model(tiny_config());
  Rng rng(4);
  model.init(rng);
  const auto a = model.reconstruct(sc.y, sc.s, sc.gamma);
  const auto b = model.reconstruct(sc.y, sc.s, sc.gamma);
  CHECK(a.data == b.data);
}

TEST_CASE("large lambda pins the sampled k-space of the final cascade") {
  const Scene sc = make_scene(16, 3, 0.4, 5);
  CascadeModel<double> model(tiny_config(DwpMode::kAll, 2));
  Rng rng(6);
  model.init(rng);
  for (int k = 0; k < 2; ++k) model.set_penalties(k, {1e6, 1.0, 1.0});
  typename CascadeModel<double>::Trace trace;
  model.reconstruct(sc.y, sc.s, sc.gamma, &trace);
  const auto& xj = trace.casc.back().xj;
  for (int j = 0; j < 3; ++j) {
    ComplexImage<double> img(16, 16);
    std::copy(xj.coil(j), xj.coil(j) + 256, img.data.begin());
    const auto khat = fft2c(img);
    for (size_t i = 0; i < khat.data.size(); ++i) {
      if (!sc.y.mask.data[i]) continue;
      const auto yv = sc.y.data.coil(j)[i];
      CHECK(std::abs(khat.data[i] - yv) / std::max(1e-12, std::abs(yv)) < 1e-3);
    }
  }
}

TEST_CASE("dropping coils equals zeroing their data and maps") {
  Scene sc = make_scene(16, 4, 0.5, 7);
  // zero coil 2's k-space and sensitivity map everywhere
  for (size_t i = 0; i < 256; ++i) {
    sc.y.data.coil(2)[i] = 0.0;
    sc.s.maps.coil(2)[i] = 0.0;
  }
  CascadeModel<double> model(tiny_config(DwpMode::kNone, 2));
  Rng rng(8);
  model.init(rng);
  TaskVector dropped = all_active(4);
  dropped.bits[2] = 0;
  const auto full = model.reconstruct(sc.y, sc.s, all_active(4));
  const auto part = model.reconstruct(sc.y, sc.s, dropped);
  CHECK(full.data == part.data);
}

TEST_CASE("invalid task vectors propagate") {
  const Scene sc = make_scene(16, 3, 0.5, 9);
  CascadeModel<double> model(tiny_config());
  Rng rng(10);
  model.init(rng);
  TaskVector none;
  none.bits.assign(3, 0);
  CHECK_THROWS_AS(model.forward(sc.y, sc.s, none, all_ones_embedding()), std::invalid_argument);
  TaskVector wrong;
  wrong.bits.assign(5, 1);
  CHECK_THROWS_AS(model.reconstruct(sc.y, sc.s, wrong), std::invalid_argument);
}

TEST_CASE("end-to-end analytic gradients match finite differences") {
  const Scene sc = make_scene(8, 3, 0.5, 11);
  CascadeModel<double> model(tiny_config(DwpMode::kAll, 2));
  Rng rng(12);
  model.init(rng);
  const EmbeddedTask e = embed_task(sc.gamma);

  // offset target keeps the L1 loss away from its kinks
  ComplexImage<double> target = model.forward(sc.y, sc.s, sc.gamma, e);
  Rng trng(13);
  for (auto& v : target.data) {
    const double sr = trng.uniform() < 0.5 ? -1.0 : 1.0;
    const double si = trng.uniform() < 0.5 ? -1.0 : 1.0;
    v += std::complex<double>(sr * trng.uniform(0.5, 1.5), si * trng.uniform(0.5, 1.5));
  }

  auto loss = [&] {
    const auto out = model.forward(sc.y, sc.s, sc.gamma, e);
    return compute_loss(out, target);
  };

  auto params = model.params();
  model.zero_grad();
  {
    typename CascadeModel<double>::Trace trace;
    const auto out = model.forward(sc.y, sc.s, sc.gamma, e, &trace);
    model.backward(loss_grad(out, target), sc.y, sc.s, sc.gamma, trace);
  }

  const double h = 1e-5;
  bool saw_penalties = false;
  for (auto& r : params) {
    double num = 0, fd_norm = 0, ana_norm = 0;
    for (size_t i = 0; i < r.value->v.size(); ++i) {
      const double keep = r.value->v[i];
      r.value->v[i] = keep + h;
      const double fp = loss();
      r.value->v[i] = keep - h;
      const double fm = loss();
      r.value->v[i] = keep;
      const double fd = (fp - fm) / (2 * h);
      const double ga = r.grad->v[i];
      num += (fd - ga) * (fd - ga);
      fd_norm += fd * fd;
      ana_norm += ga * ga;
    }
    const double rel = std::sqrt(num) / std::max({std::sqrt(fd_norm), std::sqrt(ana_norm), 1e-12});
    INFO("param group ", r.name);
    CHECK(rel <= 1e-3);
    if (r.name.find("penalties") != std::string::npos) saw_penalties = true;
  }
  CHECK(saw_penalties);
}
