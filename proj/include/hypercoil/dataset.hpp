#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "hypercoil/coil_sim.hpp"
#include "hypercoil/types.hpp"

namespace hypercoil {

// I/O failures (missing/corrupt/truncated files) carry the offending path.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SimConfig {
  int n_samples = 200;
  int size = 64;
  int n_coils = 12;
  MaskKind mask_kind = MaskKind::kCartesian;
  double acceleration = 5.0;
  int acs = 8;
  uint64_t seed = 0;
  PhantomKind phantom = PhantomKind::kSheppLogan;
  bool mixed_phantoms = true;  // alternate shepp-logan / smooth-random
  bool normalize_sens = true;
};

struct SampleRecord {
  std::string id;
  std::map<std::string, std::string> files;  // image/sens/kspace/mask -> filename
};

struct DatasetManifest {
  int version = 1;
  int n_samples = 0;
  int height = 0;
  int width = 0;
  int n_coils = 0;
  MaskKind mask_kind = MaskKind::kCartesian;
  double acceleration = 1.0;
  uint64_t seed = 0;
  std::vector<SampleRecord> samples;
  std::filesystem::path dir;  // not serialized
};

// One fully materialized training pair (float32, matching the on-disk bits).
struct Sample {
  ComplexImage<float> image;
  SensitivitySet<float> sens;
  MultiCoilKspace<float> kspace;
};

// Generates n_samples (phantom, sensitivities, mask, k-space) tuples and
// writes the dataset directory. Deterministic per config; arrays are
// computed in double and stored as float32, and the returned manifest
// matches the written one.
DatasetManifest build_dataset(const SimConfig& cfg, const std::filesystem::path& out_dir);

DatasetManifest load_manifest(const std::filesystem::path& dir);
Sample load_sample(const DatasetManifest& m, int index);

// raw binary helpers (little-endian interleaved float32 / one byte per pixel)
void write_c64(const std::filesystem::path& p, const std::complex<float>* data, size_t n);
avec<std::complex<float>> read_c64(const std::filesystem::path& p, size_t expected_n);
void write_u8(const std::filesystem::path& p, const uint8_t* data, size_t n);
std::vector<uint8_t> read_u8(const std::filesystem::path& p, size_t expected_n);

}  // namespace hypercoil
