#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "hypercoil/cascade.hpp"
#include "hypercoil/dataset.hpp"

namespace hypercoil {

// Thrown when the optimization produces a non-finite loss.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Protocol { kHypercoil, kCctim, kCctsm };

std::string to_string(Protocol p);
Protocol protocol_from_string(const std::string& s);

struct TrainConfig {
  int epochs = 100;
  int batch_size = 1;
  double lr = 1e-3;
  uint64_t seed = 0;
  Protocol protocol = Protocol::kHypercoil;
  int cctsm_k = 0;  // fixed coil count for the task-specific baseline
  std::vector<int> task_pool;
  std::string loss = "l1";
};

// All learned parameters plus the configs needed to rebuild the model.
struct Checkpoint {
  ModelConfig model_cfg;
  TrainConfig train_cfg;
  int epoch = 0;
  std::string rng_state;
  CascadeModel<float> model;
};

// Mean absolute error over the 2-channel real representation.
template <typename T>
double compute_loss(const ComplexImage<T>& pred, const ComplexImage<T>& target) {
  if (!pred.same_shape(target)) throw std::invalid_argument("compute_loss shape mismatch");
  double acc = 0.0;
  for (size_t i = 0; i < pred.numel(); ++i) {
    acc += std::abs(static_cast<double>(pred.data[i].real()) - target.data[i].real());
    acc += std::abs(static_cast<double>(pred.data[i].imag()) - target.data[i].imag());
  }
  return acc / (2.0 * static_cast<double>(pred.numel()));
}

// L1 subgradient w.r.t. pred, matching compute_loss.
template <typename T>
ComplexImage<T> loss_grad(const ComplexImage<T>& pred, const ComplexImage<T>& target) {
  ComplexImage<T> g(pred.height, pred.width);
  const T inv = T(1) / static_cast<T>(2.0 * static_cast<double>(pred.numel()));
  auto sgn = [](T d) { return d > T(0) ? T(1) : (d < T(0) ? T(-1) : T(0)); };
  for (size_t i = 0; i < pred.numel(); ++i) {
    g.data[i] = std::complex<T>(sgn(pred.data[i].real() - target.data[i].real()) * inv,
                                sgn(pred.data[i].imag() - target.data[i].imag()) * inv);
  }
  return g;
}

// Conditioning used by each protocol: the configuration-invariant baseline
// always sees the all-ones embedding, the others the task's own embedding.
EmbeddedTask protocol_embedding(Protocol p, const TaskVector& gamma);

// Per-sample normalization wrapper: scales k-space by 1/max|m0|, runs the
// model, and scales the output back.
template <typename T>
ComplexImage<T> normalized_reconstruct(const CascadeModel<T>& model, Protocol proto,
                                       const MultiCoilKspace<T>& y, const SensitivitySet<T>& s,
                                       const TaskVector& gamma,
                                       typename CascadeModel<T>::Trace* trace = nullptr,
                                       T* scale_out = nullptr) {
  const ComplexImage<T> m0 = zero_filled_recon(y, s, gamma);
  const T scale = std::max(max_abs(m0), static_cast<T>(1e-12));
  MultiCoilKspace<T> ys;
  ys.mask = y.mask;
  ys.data = y.data;
  const T inv = T(1) / scale;
  for (auto& v : ys.data.data) v *= inv;
  ComplexImage<T> out = model.forward(ys, s, gamma, protocol_embedding(proto, gamma), trace);
  for (auto& v : out.data) v *= scale;
  if (scale_out) *scale_out = scale;
  return out;
}

// Optimizes the L1 objective over the dataset with per-batch coil
// configuration augmentation. Writes checkpoint.json/weights.bin and
// train_log.csv into out_dir each epoch; returns the final state.
Checkpoint train(const DatasetManifest& data, const TrainConfig& cfg, const ModelConfig& mcfg,
                 const std::filesystem::path& out_dir, std::ostream* progress = nullptr);

void save_checkpoint(const std::filesystem::path& dir, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace hypercoil
