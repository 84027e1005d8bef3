#include "hypercoil/coil_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "hypercoil/rng.hpp"
#include "hypercoil/task_codec.hpp"

namespace hypercoil {

PhantomKind phantom_kind_from_string(const std::string& s) {
  if (s == "shepp-logan") return PhantomKind::kSheppLogan;
  if (s == "smooth-random") return PhantomKind::kSmoothRandom;
  throw std::invalid_argument("unknown phantom kind: " + s);
}

std::string to_string(PhantomKind k) {
  return k == PhantomKind::kSheppLogan ? "shepp-logan" : "smooth-random";
}

namespace {

struct Ellipse {
  double value, a, b, x0, y0, phi_deg;
};

// Standard 2-D Shepp-Logan ellipse table (value, half-axes, center, tilt).
constexpr Ellipse kSheppLogan[10] = {
    {1.0, 0.69, 0.92, 0.0, 0.0, 0.0},
    {-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0},
    {-0.2, 0.11, 0.31, 0.22, 0.0, -18.0},
    {-0.2, 0.16, 0.41, -0.22, 0.0, 18.0},
    {0.1, 0.21, 0.25, 0.0, 0.35, 0.0},
    {0.1, 0.046, 0.046, 0.0, 0.1, 0.0},
    {0.1, 0.046, 0.046, 0.0, -0.1, 0.0},
    {0.1, 0.046, 0.023, -0.08, -0.605, 0.0},
    {0.1, 0.023, 0.023, 0.0, -0.606, 0.0},
    {0.1, 0.023, 0.046, 0.06, -0.605, 0.0},
};

// Band-limited real random field: complex Gaussian weights on the central
// k-space bins with |k| <= cutoff (Gaussian-tapered), inverse transformed.
// The circular cutoff bounds the per-pixel gradient by 2*pi*cutoff/size.
ComplexImage<double> low_freq_field(int size, double cutoff, Rng& rng) {
  ComplexImage<double> k(size, size);
  const int c = size / 2;
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double ky = y - c, kx = x - c;
      const double r = std::sqrt(ky * ky + kx * kx);
      if (r > cutoff) continue;
      const double taper = std::exp(-0.5 * (r * r) / (0.5 * cutoff * cutoff + 1e-12));
      k.at(y, x) = std::complex<double>(rng.normal(), rng.normal()) * taper;
    }
  }
  return ifft2c(k);
}

void normalize_max_abs(ComplexImage<double>& img) {
  const double m = max_abs(img);
  if (m > 0)
    for (auto& v : img.data) v /= m;
}

ComplexImage<double> shepp_logan_phantom(int size, uint64_t seed) {
  Rng rng(mix_seed(seed, 0x5lu));
  // mild geometry/intensity jitter so distinct seeds give distinct slices
  const double rot = rng.uniform(-15.0, 15.0) * M_PI / 180.0;
  const double scale = rng.uniform(0.9, 1.1);
  const double dx = rng.uniform(-0.05, 0.05);
  const double dy = rng.uniform(-0.05, 0.05);
  double jitter[10];
  for (double& j : jitter) j = rng.uniform(0.9, 1.1);

  ComplexImage<double> img(size, size);
  const double cr = std::cos(rot), sr = std::sin(rot);
  for (int iy = 0; iy < size; ++iy) {
    // normalized coordinates in [-1, 1)
    const double yn = (2.0 * iy - size) / size;
    for (int ix = 0; ix < size; ++ix) {
      const double xn = (2.0 * ix - size) / size;
      const double xg = (cr * xn + sr * yn) / scale - dx;
      const double yg = (-sr * xn + cr * yn) / scale - dy;
      double v = 0.0;
      for (int e = 0; e < 10; ++e) {
        const Ellipse& el = kSheppLogan[e];
        const double p = el.phi_deg * M_PI / 180.0;
        const double cp = std::cos(p), sp = std::sin(p);
        const double xr = cp * (xg - el.x0) + sp * (yg - el.y0);
        const double yr = -sp * (xg - el.x0) + cp * (yg - el.y0);
        if ((xr * xr) / (el.a * el.a) + (yr * yr) / (el.b * el.b) <= 1.0)
          v += el.value * jitter[e];
      }
      img.at(iy, ix) = std::max(v, 0.0);
    }
  }

  // random smooth phase so k-space is complex-realistic
  Rng prng(mix_seed(seed, 0x7lu));
  ComplexImage<double> ph = low_freq_field(size, std::max(1.5, size / 16.0), prng);
  double pmax = 0.0;
  for (auto& v : ph.data) pmax = std::max(pmax, std::abs(v.real()));
  const double pscale = pmax > 0 ? (0.5 * M_PI) / pmax : 0.0;
  for (size_t i = 0; i < img.data.size(); ++i) {
    const double phase = ph.data[i].real() * pscale;
    img.data[i] *= std::complex<double>(std::cos(phase), std::sin(phase));
  }
  normalize_max_abs(img);
  return img;
}

ComplexImage<double> smooth_random_phantom(int size, uint64_t seed) {
  Rng mrng(mix_seed(seed, 0x11lu));
  // tight circular cutoff keeps the magnitude gradient well below 0.5/px
  const double cutoff = std::max(1.5, size / 16.0);
  ComplexImage<double> f = low_freq_field(size, cutoff, mrng);
  ComplexImage<double> img(size, size);
  for (size_t i = 0; i < img.data.size(); ++i) img.data[i] = std::abs(f.data[i]);

  Rng prng(mix_seed(seed, 0x13lu));
  ComplexImage<double> ph = low_freq_field(size, cutoff, prng);
  double pmax = 0.0;
  for (auto& v : ph.data) pmax = std::max(pmax, std::abs(v.real()));
  const double pscale = pmax > 0 ? (0.5 * M_PI) / pmax : 0.0;
  for (size_t i = 0; i < img.data.size(); ++i) {
    const double phase = ph.data[i].real() * pscale;
    img.data[i] *= std::complex<double>(std::cos(phase), std::sin(phase));
  }
  normalize_max_abs(img);
  return img;
}

}  // namespace

ComplexImage<double> generate_phantom(int size, PhantomKind kind, uint64_t seed) {
  if (size < 8) throw std::invalid_argument("phantom size must be >= 8");
  return kind == PhantomKind::kSheppLogan ? shepp_logan_phantom(size, seed)
                                          : smooth_random_phantom(size, seed);
}

SensitivitySet<double> simulate_sensitivities(int n_c, int size, uint64_t seed, bool normalize) {
  if (n_c < 1 || n_c > kMaxCoils)
    throw std::invalid_argument("coil count must be in [1, " + std::to_string(kMaxCoils) + "]");
  Rng rng(mix_seed(seed, 0x17lu));
  SensitivitySet<double> s;
  s.maps = CoilStack<double>(n_c, size, size);
  const double cx = 0.5 * (size - 1), cy = 0.5 * (size - 1);
  const double ring = 0.5 * size;    // lobe centers on a circle just at the FOV edge
  const double sigma = 0.35 * size;  // localized lobes make coil dropout distinctive
  const double angle0 = rng.uniform(0.0, 2.0 * M_PI);
  for (int j = 0; j < n_c; ++j) {
    const double ang = angle0 + 2.0 * M_PI * j / n_c;
    const double lx = cx + ring * std::cos(ang);
    const double ly = cy + ring * std::sin(ang);
    const double phase0 = rng.uniform(0.0, 2.0 * M_PI);
    const double gx = rng.uniform(-2.0, 2.0) / size;  // random linear phase ramp
    const double gy = rng.uniform(-2.0, 2.0) / size;
    std::complex<double>* sj = s.maps.coil(j);
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        const double d2 = (x - lx) * (x - lx) + (y - ly) * (y - ly);
        const double mag = std::exp(-0.5 * d2 / (sigma * sigma));
        const double phase = phase0 + 2.0 * M_PI * (gx * x + gy * y);
        sj[static_cast<size_t>(y) * size + x] =
            mag * std::complex<double>(std::cos(phase), std::sin(phase));
      }
    }
  }
  if (normalize) {
    const size_t n = static_cast<size_t>(size) * size;
    for (size_t i = 0; i < n; ++i) {
      double ss = 0.0;
      for (int j = 0; j < n_c; ++j) ss += std::norm(s.maps.data[j * n + i]);
      const double inv = 1.0 / std::sqrt(ss);
      for (int j = 0; j < n_c; ++j) s.maps.data[j * n + i] *= inv;
    }
  }
  return s;
}

namespace {

Mask cartesian_mask(int h, int w, double accel, int acs, uint64_t seed) {
  const int kept = static_cast<int>(std::lround(w / accel));
  if (acs >= kept)
    throw std::invalid_argument("infeasible cartesian mask: acs=" + std::to_string(acs) +
                                " >= kept lines " + std::to_string(kept));
  std::vector<uint8_t> col(static_cast<size_t>(w), 0);
  const int acs_start = (w - acs) / 2;
  for (int x = acs_start; x < acs_start + acs; ++x) col[static_cast<size_t>(x)] = 1;
  std::vector<int> rest;
  for (int x = 0; x < w; ++x)
    if (!col[static_cast<size_t>(x)]) rest.push_back(x);
  Rng rng(mix_seed(seed, 0x1flu));
  const int extra = kept - acs;
  for (int i = 0; i < extra; ++i) {
    const int j = rng.uniform_int(i, static_cast<int>(rest.size()) - 1);
    std::swap(rest[static_cast<size_t>(i)], rest[static_cast<size_t>(j)]);
    col[static_cast<size_t>(rest[static_cast<size_t>(i)])] = 1;
  }
  Mask m(h, w);
  m.kind = MaskKind::kCartesian;
  m.acceleration = accel;
  m.acs = acs;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) m.at(y, x) = col[static_cast<size_t>(x)];
  return m;
}

constexpr double kPoissonCenterRadius = 6.0;  // fully sampled central disc

// One dart-throwing pass with local min-distance r(p) = r0 * sqrt(1 + rho^2),
// rho the elliptically normalized distance from k-space center. Density of
// the resulting points follows ~ 1/r(p)^2, i.e. ~ 1/(1 + rho^2).
size_t poisson_throw(int h, int w, double r0, uint64_t seed, std::vector<uint8_t>& out) {
  out.assign(static_cast<size_t>(h) * w, 0);
  const double cy = 0.5 * (h - 1), cx = 0.5 * (w - 1);
  const double ry = 0.5 * h, rx = 0.5 * w;
  auto local_r = [&](double y, double x) {
    const double ny = (y - cy) / ry, nx = (x - cx) / rx;
    return r0 * std::sqrt(1.0 + ny * ny + nx * nx);
  };
  // bucket grid sized to the smallest radius
  const double cell = std::max(r0 / std::sqrt(2.0), 0.25);
  const int gw = static_cast<int>(std::ceil(w / cell)) + 1;
  const int gh = static_cast<int>(std::ceil(h / cell)) + 1;
  std::vector<std::vector<std::pair<float, float>>> grid(static_cast<size_t>(gw) * gh);
  Rng rng(seed);
  size_t accepted = 0;
  const long max_candidates = 40L * h * w / std::max(1, static_cast<int>(r0 * r0));
  long misses = 0;
  for (long it = 0; it < max_candidates && misses < 4000; ++it) {
    const double y = rng.uniform(0.0, h);
    const double x = rng.uniform(0.0, w);
    const double r = local_r(y, x);
    const int gy = static_cast<int>(y / cell), gx = static_cast<int>(x / cell);
    const int reach = static_cast<int>(std::ceil(r / cell));
    bool ok = true;
    for (int by = std::max(0, gy - reach); by <= std::min(gh - 1, gy + reach) && ok; ++by) {
      for (int bx = std::max(0, gx - reach); bx <= std::min(gw - 1, gx + reach) && ok; ++bx) {
        for (const auto& q : grid[static_cast<size_t>(by) * gw + bx]) {
          const double dy = q.first - y, dx = q.second - x;
          if (dy * dy + dx * dx < r * r) {
            ok = false;
            break;
          }
        }
      }
    }
    if (!ok) {
      ++misses;
      continue;
    }
    misses = 0;
    grid[static_cast<size_t>(gy) * gw + gx].emplace_back(static_cast<float>(y),
                                                         static_cast<float>(x));
    const int py = std::min(h - 1, static_cast<int>(y));
    const int px = std::min(w - 1, static_cast<int>(x));
    if (!out[static_cast<size_t>(py) * w + px]) {
      out[static_cast<size_t>(py) * w + px] = 1;
      ++accepted;
    }
  }
  // fully sampled central disc
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double dy = y - cy, dx = x - cx;
      if (dy * dy + dx * dx <= kPoissonCenterRadius * kPoissonCenterRadius) {
        auto& v = out[static_cast<size_t>(y) * w + x];
        if (!v) {
          v = 1;
          ++accepted;
        }
      }
    }
  }
  return accepted;
}

Mask poisson_mask(int h, int w, double accel, uint64_t seed) {
  const double target = static_cast<double>(h) * w / accel;
  // bisection on the base radius; kept count decreases with r0
  double lo = 0.4, hi = 4.0;
  std::vector<uint8_t> best, tmp;
  double best_err = 1e30;
  for (int iter = 0; iter < 24; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const size_t kept = poisson_throw(h, w, mid, mix_seed(seed, 0x100 + iter), tmp);
    const double err = std::abs(static_cast<double>(kept) - target);
    if (err < best_err) {
      best_err = err;
      best = tmp;
    }
    if (best_err <= 0.02 * target) break;
    if (static_cast<double>(kept) > target)
      lo = mid;
    else
      hi = mid;
  }
  Mask m(h, w);
  m.kind = MaskKind::kPoisson;
  m.acceleration = accel;
  m.acs = 0;
  m.data = best;
  return m;
}

}  // namespace

Mask make_mask(int h, int w, MaskKind kind, double acceleration, int acs, uint64_t seed) {
  if (!(acceleration > 1.0)) throw std::invalid_argument("acceleration must be > 1");
  if (h < 1 || w < 1) throw std::invalid_argument("mask shape must be positive");
  if (kind == MaskKind::kCartesian) return cartesian_mask(h, w, acceleration, acs, seed);
  return poisson_mask(h, w, acceleration, seed);
}

}  // namespace hypercoil
