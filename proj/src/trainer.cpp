#include "hypercoil/trainer.hpp"

#include <chrono>
#include <fstream>
#include <iomanip>
#include <ostream>

#include "hypercoil/nn/adam.hpp"
#include "nlohmann/json.hpp"

namespace hypercoil {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

std::string to_string(Protocol p) {
  switch (p) {
    case Protocol::kHypercoil: return "hypercoil";
    case Protocol::kCctim: return "cctim";
    default: return "cctsm";
  }
}

Protocol protocol_from_string(const std::string& s) {
  if (s == "hypercoil") return Protocol::kHypercoil;
  if (s == "cctim") return Protocol::kCctim;
  if (s == "cctsm") return Protocol::kCctsm;
  throw std::invalid_argument("unknown protocol: " + s);
}

EmbeddedTask protocol_embedding(Protocol p, const TaskVector& gamma) {
  return p == Protocol::kCctim ? all_ones_embedding() : embed_task(gamma);
}

namespace {

bool is_hyper_param(const std::string& name) { return name.find("hyper") != std::string::npos; }

void validate_train_config(const TrainConfig& cfg, int n_coils) {
  if (cfg.epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (cfg.batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (cfg.lr <= 0) throw std::invalid_argument("learning rate must be positive");
  if (cfg.loss != "l1") throw std::invalid_argument("unsupported loss: " + cfg.loss);
  if (cfg.protocol == Protocol::kCctsm) {
    if (cfg.cctsm_k < 1 || cfg.cctsm_k > n_coils)
      throw std::invalid_argument("cctsm requires a fixed coil count in [1, n_coils]");
  } else if (cfg.task_pool.empty()) {
    throw std::invalid_argument("task_pool must not be empty");
  }
  for (int k : cfg.task_pool)
    if (k < 1 || k > n_coils)
      throw std::invalid_argument("task_pool entry " + std::to_string(k) +
                                  " outside [1, n_coils=" + std::to_string(n_coils) + "]");
}

ordered_json denoiser_cfg_to_json(const DenoiserConfig& c) {
  ordered_json j;
  j["levels"] = c.levels;
  j["base_channels"] = c.base_channels;
  j["embed_dim"] = c.embed_dim;
  j["dwp_mode"] = to_string(c.dwp_mode);
  return j;
}

DenoiserConfig denoiser_cfg_from_json(const ordered_json& j) {
  DenoiserConfig c;
  c.levels = j.at("levels").get<int>();
  c.base_channels = j.at("base_channels").get<int>();
  c.embed_dim = j.at("embed_dim").get<int>();
  c.dwp_mode = dwp_mode_from_string(j.at("dwp_mode").get<std::string>());
  return c;
}

ordered_json model_cfg_to_json(const ModelConfig& c) {
  ordered_json j;
  j["cascades"] = c.cascades;
  j["denoiser"] = denoiser_cfg_to_json(c.denoiser);
  j["learnable_penalties"] = c.learnable_penalties;
  j["tied_denoiser"] = c.tied_denoiser;
  return j;
}

ModelConfig model_cfg_from_json(const ordered_json& j) {
  ModelConfig c;
  c.cascades = j.at("cascades").get<int>();
  c.denoiser = denoiser_cfg_from_json(j.at("denoiser"));
  c.learnable_penalties = j.at("learnable_penalties").get<bool>();
  c.tied_denoiser = j.at("tied_denoiser").get<bool>();
  return c;
}

ordered_json train_cfg_to_json(const TrainConfig& c) {
  ordered_json j;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["lr"] = c.lr;
  j["seed"] = c.seed;
  j["protocol"] = to_string(c.protocol);
  j["cctsm_k"] = c.cctsm_k;
  j["task_pool"] = c.task_pool;
  j["loss"] = c.loss;
  return j;
}

TrainConfig train_cfg_from_json(const ordered_json& j) {
  TrainConfig c;
  c.epochs = j.at("epochs").get<int>();
  c.batch_size = j.at("batch_size").get<int>();
  c.lr = j.at("lr").get<double>();
  c.seed = j.at("seed").get<uint64_t>();
  c.protocol = protocol_from_string(j.at("protocol").get<std::string>());
  c.cctsm_k = j.at("cctsm_k").get<int>();
  c.task_pool = j.at("task_pool").get<std::vector<int>>();
  c.loss = j.at("loss").get<std::string>();
  return c;
}

}  // namespace

void save_checkpoint(const fs::path& dir, const Checkpoint& ckpt) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw IoError("cannot create checkpoint directory: " + dir.string());

  auto& model = const_cast<CascadeModel<float>&>(ckpt.model);
  const auto tensors = model.all_tensors();

  ordered_json j;
  j["version"] = 1;
  j["epoch"] = ckpt.epoch;
  j["rng_state"] = ckpt.rng_state;
  j["model"] = model_cfg_to_json(ckpt.model_cfg);
  j["train"] = train_cfg_to_json(ckpt.train_cfg);
  ordered_json reg = ordered_json::array();
  size_t offset = 0;
  for (const auto& t : tensors) {
    ordered_json r;
    r["name"] = t.name;
    r["shape"] = t.value->shape;
    r["dtype"] = "f32";
    r["offset"] = offset;
    reg.push_back(r);
    offset += t.value->v.size() * sizeof(float);
  }
  j["tensors"] = reg;

  {
    std::ofstream f(dir / "checkpoint.json", std::ios::trunc);
    if (!f) throw IoError("cannot open for writing: " + (dir / "checkpoint.json").string());
    f << j.dump(2) << "\n";
    if (!f) throw IoError("write failed: " + (dir / "checkpoint.json").string());
  }
  {
    std::ofstream f(dir / "weights.bin", std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open for writing: " + (dir / "weights.bin").string());
    for (const auto& t : tensors)
      f.write(reinterpret_cast<const char*>(t.value->v.data()),
              static_cast<std::streamsize>(t.value->v.size() * sizeof(float)));
    if (!f) throw IoError("write failed: " + (dir / "weights.bin").string());
  }
}

Checkpoint load_checkpoint(const fs::path& dir) {
  const fs::path jp = dir / "checkpoint.json";
  std::ifstream f(jp);
  if (!f) throw IoError("cannot open: " + jp.string());
  ordered_json j;
  try {
    f >> j;
  } catch (const std::exception& e) {
    throw IoError("corrupt checkpoint " + jp.string() + ": " + e.what());
  }

  Checkpoint ckpt;
  try {
    ckpt.epoch = j.at("epoch").get<int>();
    ckpt.rng_state = j.at("rng_state").get<std::string>();
    ckpt.model_cfg = model_cfg_from_json(j.at("model"));
    ckpt.train_cfg = train_cfg_from_json(j.at("train"));
  } catch (const ordered_json::exception& e) {
    throw IoError("corrupt checkpoint " + jp.string() + ": " + e.what());
  }
  ckpt.model = CascadeModel<float>(ckpt.model_cfg);
  auto tensors = ckpt.model.all_tensors();

  const fs::path wp = dir / "weights.bin";
  std::ifstream wf(wp, std::ios::binary);
  if (!wf) throw IoError("cannot open: " + wp.string());
  wf.seekg(0, std::ios::end);
  const size_t file_bytes = static_cast<size_t>(wf.tellg());
  size_t expected = 0;
  for (const auto& t : tensors) expected += t.value->v.size() * sizeof(float);
  if (file_bytes != expected)
    throw IoError("size mismatch in " + wp.string() + ": expected " + std::to_string(expected) +
                  " bytes, found " + std::to_string(file_bytes));

  // registry entries must cover the model's tensors exactly
  const auto& reg = j.at("tensors");
  if (reg.size() != tensors.size())
    throw IoError("corrupt checkpoint " + jp.string() + ": tensor registry count mismatch");
  for (size_t i = 0; i < tensors.size(); ++i) {
    const auto& r = reg.at(i);
    if (r.at("name").get<std::string>() != tensors[i].name)
      throw IoError("corrupt checkpoint " + jp.string() + ": tensor name mismatch at index " +
                    std::to_string(i) + " (" + r.at("name").get<std::string>() + " vs " +
                    tensors[i].name + ")");
    if (r.at("shape").get<std::vector<int>>() != tensors[i].value->shape)
      throw IoError("corrupt checkpoint " + jp.string() + ": shape mismatch for " +
                    tensors[i].name);
    const size_t offset = r.at("offset").get<size_t>();
    wf.seekg(static_cast<std::streamoff>(offset));
    wf.read(reinterpret_cast<char*>(tensors[i].value->v.data()),
            static_cast<std::streamsize>(tensors[i].value->v.size() * sizeof(float)));
    if (!wf) throw IoError("read failed: " + wp.string());
  }
  return ckpt;
}

Checkpoint train(const DatasetManifest& data, const TrainConfig& cfg, const ModelConfig& mcfg,
                 const fs::path& out_dir, std::ostream* progress) {
  validate_train_config(cfg, data.n_coils);
  if (data.n_samples < 1) throw std::invalid_argument("dataset is empty");

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir))
    throw IoError("cannot create output directory: " + out_dir.string());

  std::vector<Sample> samples;
  samples.reserve(static_cast<size_t>(data.n_samples));
  for (int i = 0; i < data.n_samples; ++i) samples.push_back(load_sample(data, i));

  CascadeModel<float> model(mcfg);
  Rng init_rng(mix_seed(cfg.seed, 0xA11CE));
  model.init(init_rng);

  auto params = model.params();
  nn::Adam<float> opt(params, cfg.lr);
  const bool freeze_hyper = cfg.protocol == Protocol::kCctim;
  if (freeze_hyper) opt.set_frozen(is_hyper_param);

  std::ofstream log(out_dir / "train_log.csv", std::ios::trunc);
  if (!log) throw IoError("cannot open for writing: " + (out_dir / "train_log.csv").string());
  log << "epoch,step,loss,lr,wall_time\n";

  Rng rng(mix_seed(cfg.seed, 0xB0B));
  const auto t0 = std::chrono::steady_clock::now();
  long step = 0;
  Checkpoint ckpt;
  ckpt.model_cfg = mcfg;
  ckpt.train_cfg = cfg;

  std::vector<int> order(static_cast<size_t>(data.n_samples));
  for (int i = 0; i < data.n_samples; ++i) order[static_cast<size_t>(i)] = i;

  typename CascadeModel<float>::Trace trace;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    // seeded per-epoch shuffle
    for (int i = data.n_samples - 1; i > 0; --i)
      std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(rng.uniform_int(0, i))]);

    int in_batch = 0;
    double batch_loss = 0.0;
    model.zero_grad();
    for (int idx = 0; idx < data.n_samples; ++idx) {
      const Sample& smp = samples[static_cast<size_t>(order[static_cast<size_t>(idx)])];
      const int k = cfg.protocol == Protocol::kCctsm
                        ? cfg.cctsm_k
                        : cfg.task_pool[static_cast<size_t>(
                              rng.uniform_int(0, static_cast<int>(cfg.task_pool.size()) - 1))];
      const TaskVector gamma = sample_config(data.n_coils, k, rng);

      const ComplexImage<float> m0 = zero_filled_recon(smp.kspace, smp.sens, gamma);
      const float scale = std::max(max_abs(m0), 1e-12f);
      MultiCoilKspace<float> ys;
      ys.mask = smp.kspace.mask;
      ys.data = smp.kspace.data;
      const float inv = 1.0f / scale;
      for (auto& v : ys.data.data) v *= inv;
      ComplexImage<float> target = smp.image;
      for (auto& v : target.data) v *= inv;

      const EmbeddedTask e = protocol_embedding(cfg.protocol, gamma);
      const ComplexImage<float> out = model.forward(ys, smp.sens, gamma, e, &trace);
      const double loss = compute_loss(out, target);
      if (!std::isfinite(loss))
        throw NumericalError("non-finite loss at epoch " + std::to_string(epoch) + " step " +
                             std::to_string(step));
      model.backward(loss_grad(out, target), ys, smp.sens, gamma, trace);
      batch_loss += loss;
      ++in_batch;

      const bool last = idx == data.n_samples - 1;
      if (in_batch == cfg.batch_size || last) {
        if (in_batch > 1) {
          const float bs = 1.0f / static_cast<float>(in_batch);
          for (auto& pr : params)
            for (auto& g : pr.grad->v) g *= bs;
        }
        if (freeze_hyper)
          for (auto& pr : params)
            if (is_hyper_param(pr.name)) pr.grad->zero();
        opt.step();
        model.zero_grad();
        ++step;
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        log << epoch << "," << step << "," << std::setprecision(10) << batch_loss / in_batch
            << "," << cfg.lr << "," << std::setprecision(6) << wall << "\n";
        batch_loss = 0.0;
        in_batch = 0;
      }
    }
    log.flush();
    ckpt.epoch = epoch;
    ckpt.rng_state = rng.state();
    ckpt.model = model;
    save_checkpoint(out_dir, ckpt);
    if (progress)
      (*progress) << "epoch " << epoch << "/" << cfg.epochs << " done (" << step << " steps)\n";
  }
  return ckpt;
}

}  // namespace hypercoil
