#include "hypercoil/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace hypercoil {

namespace fs = std::filesystem;

double psnr(const RealImage& pred, const RealImage& gt, double data_range) {
  if (pred.height != gt.height || pred.width != gt.width)
    throw std::invalid_argument("psnr shape mismatch");
  if (data_range <= 0) throw std::invalid_argument("data_range must be positive");
  double mse = 0.0;
  for (size_t i = 0; i < pred.v.size(); ++i) {
    const double d = pred.v[i] - gt.v[i];
    mse += d * d;
  }
  mse /= static_cast<double>(pred.v.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(data_range * data_range / mse);
}

namespace {

constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;
constexpr double kSsimK1 = 0.01;
constexpr double kSsimK2 = 0.03;

const std::vector<double>& ssim_kernel() {
  static const std::vector<double> k = [] {
    std::vector<double> v(kSsimWindow * kSsimWindow);
    const int c = kSsimWindow / 2;
    double sum = 0.0;
    for (int y = 0; y < kSsimWindow; ++y)
      for (int x = 0; x < kSsimWindow; ++x) {
        const double d2 = (y - c) * (y - c) + (x - c) * (x - c);
        v[static_cast<size_t>(y) * kSsimWindow + x] =
            std::exp(-d2 / (2.0 * kSsimSigma * kSsimSigma));
        sum += v[static_cast<size_t>(y) * kSsimWindow + x];
      }
    for (double& w : v) w /= sum;
    return v;
  }();
  return k;
}

}  // namespace

double ssim(const RealImage& pred, const RealImage& gt, double data_range) {
  if (pred.height != gt.height || pred.width != gt.width)
    throw std::invalid_argument("ssim shape mismatch");
  if (pred.height < kSsimWindow || pred.width < kSsimWindow)
    throw std::invalid_argument("ssim requires images of at least 11x11");
  if (data_range <= 0) throw std::invalid_argument("data_range must be positive");
  const auto& w = ssim_kernel();
  const double c1 = (kSsimK1 * data_range) * (kSsimK1 * data_range);
  const double c2 = (kSsimK2 * data_range) * (kSsimK2 * data_range);
  double acc = 0.0;
  long count = 0;
  for (int y = 0; y + kSsimWindow <= pred.height; ++y) {
    for (int x = 0; x + kSsimWindow <= pred.width; ++x) {
      double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
      for (int dy = 0; dy < kSsimWindow; ++dy) {
        const double* pr = pred.v.data() + static_cast<size_t>(y + dy) * pred.width + x;
        const double* gr = gt.v.data() + static_cast<size_t>(y + dy) * gt.width + x;
        const double* wr = w.data() + static_cast<size_t>(dy) * kSsimWindow;
        for (int dx = 0; dx < kSsimWindow; ++dx) {
          mx += wr[dx] * pr[dx];
          my += wr[dx] * gr[dx];
          sxx += wr[dx] * pr[dx] * pr[dx];
          syy += wr[dx] * gr[dx] * gr[dx];
          sxy += wr[dx] * pr[dx] * gr[dx];
        }
      }
      const double vx = sxx - mx * mx;
      const double vy = syy - my * my;
      const double cxy = sxy - mx * my;
      acc += ((2 * mx * my + c1) * (2 * cxy + c2)) /
             ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++count;
    }
  }
  return acc / static_cast<double>(count);
}

MetricsTable evaluate(const Checkpoint& ckpt, const DatasetManifest& data,
                      const std::vector<TaskSpec>& tasks, uint64_t seed, int gammas_per_task) {
  if (gammas_per_task < 1) throw std::invalid_argument("gammas_per_task must be >= 1");
  // expand task specs into concrete configurations
  struct Item {
    std::string label;
    TaskVector gamma;
  };
  std::vector<Item> items;
  for (size_t t = 0; t < tasks.size(); ++t) {
    const TaskSpec& spec = tasks[t];
    if (spec.gamma) {
      if (spec.gamma->n_coils() != data.n_coils)
        throw std::invalid_argument("task vector length does not match dataset coil count");
      items.push_back({"k=" + std::to_string(spec.gamma->popcount()), *spec.gamma});
    } else {
      if (spec.coils < 1 || spec.coils > data.n_coils)
        throw std::invalid_argument("task coil count " + std::to_string(spec.coils) +
                                    " outside [1, " + std::to_string(data.n_coils) + "]");
      const std::string label = "k=" + std::to_string(spec.coils);
      if (spec.coils == data.n_coils) {
        Rng rng(mix_seed(seed, t));
        items.push_back({label, sample_config(data.n_coils, spec.coils, rng)});
      } else {
        Rng rng(mix_seed(seed, t));
        for (int g = 0; g < gammas_per_task; ++g)
          items.push_back({label, sample_config(data.n_coils, spec.coils, rng)});
      }
    }
  }

  std::vector<Sample> samples;
  for (int i = 0; i < data.n_samples; ++i) samples.push_back(load_sample(data, i));

  MetricsTable table;
  for (const auto& item : items) {
    double psnr_acc = 0, ssim_acc = 0, zf_psnr_acc = 0, zf_ssim_acc = 0;
    for (const Sample& smp : samples) {
      const RealImage gt = magnitude(smp.image);
      double dr = 0;
      for (double v : gt.v) dr = std::max(dr, v);
      if (dr <= 0) dr = 1.0;
      const ComplexImage<float> m0 = zero_filled_recon(smp.kspace, smp.sens, item.gamma);
      const ComplexImage<float> rec = normalized_reconstruct(
          ckpt.model, ckpt.train_cfg.protocol, smp.kspace, smp.sens, item.gamma);
      psnr_acc += psnr(magnitude(rec), gt, dr);
      ssim_acc += ssim(magnitude(rec), gt, dr);
      zf_psnr_acc += psnr(magnitude(m0), gt, dr);
      zf_ssim_acc += ssim(magnitude(m0), gt, dr);
    }
    const double n = static_cast<double>(samples.size());
    MetricsRow row;
    row.task = item.label;
    row.gamma = item.gamma.to_bitstring();
    row.coils = item.gamma.popcount();
    row.psnr_db = psnr_acc / n;
    row.ssim = ssim_acc / n;
    row.n = static_cast<int>(samples.size());
    row.zf_psnr_db = zf_psnr_acc / n;
    row.zf_ssim = zf_ssim_acc / n;
    table.rows.push_back(std::move(row));
  }
  return table;
}

namespace {

std::vector<double> embedding_of(const Checkpoint& ckpt, const TaskVector& gamma) {
  const auto& den = ckpt.model.denoiser(0);
  auto tau = den.task_embedding(embed_task(gamma));
  return std::vector<double>(tau.v.begin(), tau.v.end());
}

SimMatrix sim_from_embeddings(const std::vector<std::string>& labels,
                              const std::vector<std::vector<double>>& taus) {
  SimMatrix m;
  m.labels = labels;
  const int n = static_cast<int>(labels.size());
  m.values.assign(static_cast<size_t>(n) * n, 0.0);
  auto norm = [](const std::vector<double>& a) {
    double s = 0;
    for (double v : a) s += v * v;
    return std::sqrt(s);
  };
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      double dot = 0;
      for (size_t k = 0; k < taus[static_cast<size_t>(i)].size(); ++k)
        dot += taus[static_cast<size_t>(i)][k] * taus[static_cast<size_t>(j)][k];
      const double ni = norm(taus[static_cast<size_t>(i)]);
      const double nj = norm(taus[static_cast<size_t>(j)]);
      double sim = (ni > 0 && nj > 0) ? 1.0 - dot / (ni * nj) : 1.0;
      sim = std::min(2.0, std::max(0.0, sim));
      m.at(i, j) = sim;
      m.at(j, i) = sim;  // exact symmetry by construction
    }
  }
  return m;
}

}  // namespace

SimMatrix task_similarity(const Checkpoint& ckpt, const std::vector<TaskVector>& tasks) {
  if (ckpt.model_cfg.denoiser.dwp_mode == DwpMode::kNone)
    throw std::invalid_argument("task similarity requires dwp mode != none");
  if (tasks.empty()) throw std::invalid_argument("no tasks given");
  std::vector<std::string> labels;
  std::vector<std::vector<double>> taus;
  for (const auto& g : tasks) {
    labels.push_back(g.to_bitstring());
    taus.push_back(embedding_of(ckpt, g));
  }
  return sim_from_embeddings(labels, taus);
}

SimMatrix task_similarity_by_count(const Checkpoint& ckpt, const std::vector<int>& counts,
                                   int n_coils, int gammas_per_count, uint64_t seed) {
  if (ckpt.model_cfg.denoiser.dwp_mode == DwpMode::kNone)
    throw std::invalid_argument("task similarity requires dwp mode != none");
  if (counts.empty()) throw std::invalid_argument("no coil counts given");
  if (gammas_per_count < 1) throw std::invalid_argument("gammas_per_count must be >= 1");
  if (n_coils < 1 || n_coils > kMaxCoils) throw std::invalid_argument("bad n_coils");
  std::vector<std::string> labels;
  std::vector<std::vector<double>> taus;
  for (size_t ci = 0; ci < counts.size(); ++ci) {
    const int k = counts[ci];
    if (k < 1 || k > n_coils)
      throw std::invalid_argument("coil count " + std::to_string(k) + " outside [1, " +
                                  std::to_string(n_coils) + "]");
    Rng rng(mix_seed(seed, ci));
    std::vector<double> mean;
    const int reps = k == n_coils ? 1 : gammas_per_count;
    for (int g = 0; g < reps; ++g) {
      auto tau = embedding_of(ckpt, sample_config(n_coils, k, rng));
      if (mean.empty()) mean.assign(tau.size(), 0.0);
      for (size_t i = 0; i < tau.size(); ++i) mean[i] += tau[i];
    }
    for (double& v : mean) v /= reps;
    labels.push_back("k=" + std::to_string(k));
    taus.push_back(std::move(mean));
  }
  return sim_from_embeddings(labels, taus);
}

namespace {

std::string fmt_metric(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream oss;
  oss << std::setprecision(10) << v;
  return oss.str();
}

double parse_metric(const std::string& s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  return std::stod(s);
}

}  // namespace

void metrics_to_csv(const MetricsTable& table, const fs::path& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot open for writing: " + path.string());
  f << "task,gamma,coils,psnr_db,ssim,n,zf_psnr_db,zf_ssim\n";
  for (const auto& r : table.rows) {
    f << r.task << "," << r.gamma << "," << r.coils << "," << fmt_metric(r.psnr_db) << ","
      << fmt_metric(r.ssim) << "," << r.n << "," << fmt_metric(r.zf_psnr_db) << ","
      << fmt_metric(r.zf_ssim) << "\n";
  }
  if (!f) throw IoError("write failed: " + path.string());
}

MetricsTable metrics_from_csv(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open: " + path.string());
  MetricsTable table;
  std::string line;
  if (!std::getline(f, line)) throw IoError("empty metrics file: " + path.string());
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 8) throw IoError("malformed metrics row in " + path.string());
    MetricsRow r;
    r.task = fields[0];
    r.gamma = fields[1];
    r.coils = std::stoi(fields[2]);
    r.psnr_db = parse_metric(fields[3]);
    r.ssim = parse_metric(fields[4]);
    r.n = std::stoi(fields[5]);
    r.zf_psnr_db = parse_metric(fields[6]);
    r.zf_ssim = parse_metric(fields[7]);
    table.rows.push_back(std::move(r));
  }
  return table;
}

void sim_to_csv(const SimMatrix& m, const fs::path& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot open for writing: " + path.string());
  f << "task";
  for (const auto& l : m.labels) f << "," << l;
  f << "\n";
  for (int i = 0; i < m.size(); ++i) {
    f << m.labels[static_cast<size_t>(i)];
    for (int j = 0; j < m.size(); ++j) f << "," << fmt_metric(m.at(i, j));
    f << "\n";
  }
  if (!f) throw IoError("write failed: " + path.string());
}

void sim_to_pgm(const SimMatrix& m, const fs::path& path) {
  // grayscale heatmap, one cell per task pair, darker = more similar
  const int cell = 24;
  const int n = m.size();
  const int side = n * cell;
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open for writing: " + path.string());
  f << "P5\n" << side << " " << side << "\n255\n";
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      const double v = m.at(y / cell, x / cell);
      const int g = static_cast<int>(std::min(255.0, std::max(0.0, v / 2.0 * 255.0)));
      f.put(static_cast<char>(g));
    }
  }
  if (!f) throw IoError("write failed: " + path.string());
}

}  // namespace hypercoil
