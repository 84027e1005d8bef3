#include "hypercoil/dataset.hpp"

#include <fstream>

#include "hypercoil/rng.hpp"
#include "nlohmann/json.hpp"

namespace hypercoil {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

void write_c64(const fs::path& p, const std::complex<float>* data, size_t n) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open for writing: " + p.string());
  static_assert(sizeof(std::complex<float>) == 8);
  f.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * 8));
  if (!f) throw IoError("write failed: " + p.string());
}

avec<std::complex<float>> read_c64(const fs::path& p, size_t expected_n) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw IoError("cannot open: " + p.string());
  f.seekg(0, std::ios::end);
  const auto bytes = static_cast<size_t>(f.tellg());
  if (bytes != expected_n * 8)
    throw IoError("size mismatch in " + p.string() + ": expected " +
                  std::to_string(expected_n * 8) + " bytes, found " + std::to_string(bytes));
  f.seekg(0);
  avec<std::complex<float>> out(expected_n);
  f.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(bytes));
  if (!f) throw IoError("read failed: " + p.string());
  return out;
}

void write_u8(const fs::path& p, const uint8_t* data, size_t n) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open for writing: " + p.string());
  f.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n));
  if (!f) throw IoError("write failed: " + p.string());
}

std::vector<uint8_t> read_u8(const fs::path& p, size_t expected_n) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw IoError("cannot open: " + p.string());
  f.seekg(0, std::ios::end);
  const auto bytes = static_cast<size_t>(f.tellg());
  if (bytes != expected_n)
    throw IoError("size mismatch in " + p.string() + ": expected " + std::to_string(expected_n) +
                  " bytes, found " + std::to_string(bytes));
  f.seekg(0);
  std::vector<uint8_t> out(expected_n);
  f.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(bytes));
  if (!f) throw IoError("read failed: " + p.string());
  return out;
}

namespace {

std::string sample_id(int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "s%04d", i);
  return buf;
}

void write_manifest(const DatasetManifest& m, const fs::path& dir) {
  ordered_json j;
  j["version"] = m.version;
  j["n_samples"] = m.n_samples;
  j["shape"] = {m.height, m.width};
  j["n_coils"] = m.n_coils;
  j["mask_kind"] = to_string(m.mask_kind);
  j["acceleration"] = m.acceleration;
  j["seed"] = m.seed;
  ordered_json samples = ordered_json::array();
  for (const auto& s : m.samples) {
    ordered_json rec;
    rec["id"] = s.id;
    ordered_json files;
    for (const auto& [k, v] : s.files) files[k] = v;
    rec["files"] = files;
    samples.push_back(rec);
  }
  j["samples"] = samples;
  std::ofstream f(dir / "manifest.json", std::ios::trunc);
  if (!f) throw IoError("cannot open for writing: " + (dir / "manifest.json").string());
  f << j.dump(2) << "\n";
  if (!f) throw IoError("write failed: " + (dir / "manifest.json").string());
}

}  // namespace

DatasetManifest build_dataset(const SimConfig& cfg, const fs::path& out_dir) {
  if (cfg.n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
  if (cfg.size < 8) throw std::invalid_argument("size must be >= 8");
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir))
    throw IoError("cannot create dataset directory: " + out_dir.string());

  DatasetManifest m;
  m.n_samples = cfg.n_samples;
  m.height = cfg.size;
  m.width = cfg.size;
  m.n_coils = cfg.n_coils;
  m.mask_kind = cfg.mask_kind;
  m.acceleration = cfg.acceleration;
  m.seed = cfg.seed;
  m.dir = out_dir;

  // one sensitivity geometry per dataset; phantom and mask vary per sample
  const SensitivitySet<double> sens64 =
      simulate_sensitivities(cfg.n_coils, cfg.size, mix_seed(cfg.seed, 1), cfg.normalize_sens);
  const SensitivitySet<float> sens{cast_stack<float>(sens64.maps)};

  for (int i = 0; i < cfg.n_samples; ++i) {
    const PhantomKind kind =
        cfg.mixed_phantoms ? (i % 2 == 0 ? PhantomKind::kSheppLogan : PhantomKind::kSmoothRandom)
                           : cfg.phantom;
    const ComplexImage<double> img64 =
        generate_phantom(cfg.size, kind, mix_seed(cfg.seed, 1000 + static_cast<uint64_t>(i)));
    const Mask mask = make_mask(cfg.size, cfg.size, cfg.mask_kind, cfg.acceleration, cfg.acs,
                                mix_seed(cfg.seed, 2000 + static_cast<uint64_t>(i)));
    const MultiCoilKspace<double> y64 = forward_acquire(img64, sens64, mask);

    const ComplexImage<float> img = cast_image<float>(img64);
    const CoilStack<float> y = cast_stack<float>(y64.data);

    SampleRecord rec;
    rec.id = sample_id(i);
    rec.files["image"] = rec.id + "_image.c64";
    rec.files["sens"] = rec.id + "_sens.c64";
    rec.files["kspace"] = rec.id + "_kspace.c64";
    rec.files["mask"] = rec.id + "_mask.u8";
    write_c64(out_dir / rec.files["image"], img.data.data(), img.numel());
    write_c64(out_dir / rec.files["sens"], sens.maps.data.data(), sens.maps.data.size());
    write_c64(out_dir / rec.files["kspace"], y.data.data(), y.data.size());
    write_u8(out_dir / rec.files["mask"], mask.data.data(), mask.data.size());
    m.samples.push_back(std::move(rec));
  }
  write_manifest(m, out_dir);
  return m;
}

DatasetManifest load_manifest(const fs::path& dir) {
  const fs::path mp = dir / "manifest.json";
  std::ifstream f(mp);
  if (!f) throw IoError("cannot open: " + mp.string());
  ordered_json j;
  try {
    f >> j;
  } catch (const std::exception& e) {
    throw IoError("corrupt manifest " + mp.string() + ": " + e.what());
  }
  DatasetManifest m;
  try {
    m.version = j.at("version").get<int>();
    m.n_samples = j.at("n_samples").get<int>();
    m.height = j.at("shape").at(0).get<int>();
    m.width = j.at("shape").at(1).get<int>();
    m.n_coils = j.at("n_coils").get<int>();
    m.mask_kind = mask_kind_from_string(j.at("mask_kind").get<std::string>());
    m.acceleration = j.at("acceleration").get<double>();
    m.seed = j.at("seed").get<uint64_t>();
    for (const auto& rec : j.at("samples")) {
      SampleRecord s;
      s.id = rec.at("id").get<std::string>();
      for (const auto& [k, v] : rec.at("files").items()) s.files[k] = v.get<std::string>();
      m.samples.push_back(std::move(s));
    }
  } catch (const ordered_json::exception& e) {
    throw IoError("corrupt manifest " + mp.string() + ": " + e.what());
  }
  if (static_cast<int>(m.samples.size()) != m.n_samples)
    throw IoError("corrupt manifest " + mp.string() + ": sample count mismatch");
  m.dir = dir;
  return m;
}

Sample load_sample(const DatasetManifest& m, int index) {
  if (index < 0 || index >= m.n_samples) throw std::invalid_argument("sample index out of range");
  const SampleRecord& rec = m.samples[static_cast<size_t>(index)];
  const size_t plane = static_cast<size_t>(m.height) * m.width;
  Sample s;
  s.image.height = m.height;
  s.image.width = m.width;
  s.image.data = read_c64(m.dir / rec.files.at("image"), plane);
  s.sens.maps.n_coils = m.n_coils;
  s.sens.maps.height = m.height;
  s.sens.maps.width = m.width;
  s.sens.maps.data = read_c64(m.dir / rec.files.at("sens"), plane * m.n_coils);
  s.kspace.data.n_coils = m.n_coils;
  s.kspace.data.height = m.height;
  s.kspace.data.width = m.width;
  s.kspace.data.data = read_c64(m.dir / rec.files.at("kspace"), plane * m.n_coils);
  s.kspace.mask = Mask(m.height, m.width);
  s.kspace.mask.kind = m.mask_kind;
  s.kspace.mask.acceleration = m.acceleration;
  s.kspace.mask.data = read_u8(m.dir / rec.files.at("mask"), plane);
  return s;
}

}  // namespace hypercoil
