#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hypercoil/trainer.hpp"

namespace hypercoil {

struct RealImage {
  int height = 0;
  int width = 0;
  std::vector<double> v;

  RealImage() = default;
  RealImage(int h, int w) : height(h), width(w), v(static_cast<size_t>(h) * w, 0.0) {}
};

template <typename T>
RealImage magnitude(const ComplexImage<T>& img) {
  RealImage out(img.height, img.width);
  for (size_t i = 0; i < img.numel(); ++i) out.v[i] = std::abs(std::complex<double>(
      img.data[i].real(), img.data[i].imag()));
  return out;
}

// 10*log10(data_range^2 / MSE); +inf when the images are identical.
double psnr(const RealImage& pred, const RealImage& gt, double data_range);

// Single-scale SSIM, 11x11 Gaussian window (sigma 1.5), K1=0.01, K2=0.03.
double ssim(const RealImage& pred, const RealImage& gt, double data_range);

struct MetricsRow {
  std::string task;
  std::string gamma;
  int coils = 0;
  double psnr_db = 0;
  double ssim = 0;
  int n = 0;
  double zf_psnr_db = 0;
  double zf_ssim = 0;
};

struct MetricsTable {
  std::vector<MetricsRow> rows;
};

// A task to evaluate: either an explicit configuration or a coil count from
// which `gammas_per_task` configurations are sampled per seed.
struct TaskSpec {
  std::optional<TaskVector> gamma;
  int coils = 0;

  static TaskSpec from_gamma(TaskVector g) {
    TaskSpec t;
    t.coils = g.popcount();
    t.gamma = std::move(g);
    return t;
  }
  static TaskSpec from_count(int k) {
    TaskSpec t;
    t.coils = k;
    return t;
  }
};

// Reconstructs every dataset sample for every task configuration and
// reports mean PSNR/SSIM together with the zero-filled baseline.
MetricsTable evaluate(const Checkpoint& ckpt, const DatasetManifest& data,
                      const std::vector<TaskSpec>& tasks, uint64_t seed,
                      int gammas_per_task = 4);

struct SimMatrix {
  std::vector<std::string> labels;
  std::vector<double> values;  // row-major, size x size

  int size() const { return static_cast<int>(labels.size()); }
  double at(int i, int j) const { return values[static_cast<size_t>(i) * labels.size() + j]; }
  double& at(int i, int j) { return values[static_cast<size_t>(i) * labels.size() + j]; }
};

// SIM(tau_i, tau_j) = 1 - cos(tau_i, tau_j) over the hidden embeddings of
// the deepest hypernetwork. Smaller values mean more related tasks.
SimMatrix task_similarity(const Checkpoint& ckpt, const std::vector<TaskVector>& tasks);

// Mean embedding per coil count (gammas sampled per seed), then pairwise SIM.
SimMatrix task_similarity_by_count(const Checkpoint& ckpt, const std::vector<int>& counts,
                                   int n_coils, int gammas_per_count, uint64_t seed);

void metrics_to_csv(const MetricsTable& table, const std::filesystem::path& path);
MetricsTable metrics_from_csv(const std::filesystem::path& path);
void sim_to_csv(const SimMatrix& m, const std::filesystem::path& path);
void sim_to_pgm(const SimMatrix& m, const std::filesystem::path& path);

}  // namespace hypercoil
