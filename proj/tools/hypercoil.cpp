// Command-line entry point: simulate -> train -> eval -> similarity -> report.
// Config files are JSON documents whose keys mirror the long flag names;
// explicit flags override file values and the merged config is written next
// to the outputs. Exit codes: 0 ok, 2 bad config, 3 missing input,
// 4 numerical failure, 1 other errors.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <set>

#include "CLI11.hpp"
#include "hypercoil/dataset.hpp"
#include "hypercoil/evaluator.hpp"
#include "hypercoil/trainer.hpp"
#include "nlohmann/json.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;
using namespace hypercoil;

namespace {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// defaults + config file + explicit flags, with unknown-key rejection
class MergedConfig {
 public:
  explicit MergedConfig(ordered_json defaults) : cfg_(std::move(defaults)) {}

  void overlay_file(const std::string& path) {
    if (path.empty()) return;
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config file: " + path);
    ordered_json j;
    try {
      f >> j;
    } catch (const std::exception& e) {
      throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
    }
    if (!j.is_object()) throw ConfigError("config file " + path + " must hold a JSON object");
    for (const auto& [key, val] : j.items()) {
      if (!cfg_.contains(key))
        throw ConfigError("unknown config key \"" + key + "\" in " + path);
      cfg_[key] = val;
    }
  }

  template <typename T>
  void overlay_flag(const std::string& key, const std::optional<T>& v) {
    if (v) cfg_[key] = *v;
  }

  template <typename T>
  T get(const std::string& key) const {
    try {
      return cfg_.at(key).get<T>();
    } catch (const ordered_json::exception& e) {
      throw ConfigError("config key \"" + key + "\" has the wrong type: " + e.what());
    }
  }

  const ordered_json& json() const { return cfg_; }

  void write(const fs::path& path) const {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot open for writing: " + path.string());
    f << cfg_.dump(2) << "\n";
  }

 private:
  ordered_json cfg_;
};

std::vector<int> parse_int_list(const std::string& s, const std::string& what) {
  std::vector<int> out;
  std::string token;
  std::stringstream ss(s);
  while (std::getline(ss, token, ',')) {
    if (token.empty()) continue;
    const auto dots = token.find("..");
    try {
      if (dots != std::string::npos) {
        const int a = std::stoi(token.substr(0, dots));
        const int b = std::stoi(token.substr(dots + 2));
        if (b < a) throw ConfigError(what + ": empty range " + token);
        for (int v = a; v <= b; ++v) out.push_back(v);
      } else {
        out.push_back(std::stoi(token));
      }
    } catch (const std::invalid_argument&) {
      throw ConfigError(what + ": cannot parse \"" + token + "\"");
    }
  }
  if (out.empty()) throw ConfigError(what + ": empty list");
  return out;
}

int cmd_simulate(const MergedConfig& cfg) {
  SimConfig sc;
  sc.n_samples = cfg.get<int>("samples");
  sc.size = cfg.get<int>("size");
  sc.n_coils = cfg.get<int>("coils");
  sc.mask_kind = mask_kind_from_string(cfg.get<std::string>("mask"));
  sc.acceleration = cfg.get<double>("accel");
  sc.acs = cfg.get<int>("acs");
  sc.seed = cfg.get<uint64_t>("seed");
  const std::string phantom = cfg.get<std::string>("phantom");
  if (phantom == "mixed") {
    sc.mixed_phantoms = true;
  } else {
    sc.mixed_phantoms = false;
    sc.phantom = phantom_kind_from_string(phantom);
  }
  const fs::path out = cfg.get<std::string>("out");
  build_dataset(sc, out);
  cfg.write(out / "sim_config.json");
  std::cout << "wrote dataset with " << sc.n_samples << " samples to " << out.string() << "\n";
  return 0;
}

int cmd_train(const MergedConfig& cfg) {
  // schema checks before any input is touched
  TrainConfig tc;
  tc.epochs = cfg.get<int>("epochs");
  tc.batch_size = cfg.get<int>("batch");
  tc.lr = cfg.get<double>("lr");
  tc.seed = cfg.get<uint64_t>("seed");
  tc.protocol = protocol_from_string(cfg.get<std::string>("protocol"));
  tc.cctsm_k = cfg.get<int>("cctsm-k");
  tc.task_pool = parse_int_list(cfg.get<std::string>("task-pool"), "task-pool");
  if (tc.epochs < 1) throw ConfigError("epochs must be >= 1");
  if (tc.batch_size < 1) throw ConfigError("batch must be >= 1");
  if (tc.lr <= 0) throw ConfigError("lr must be positive");

  ModelConfig mc;
  mc.cascades = cfg.get<int>("cascades");
  mc.denoiser.levels = cfg.get<int>("levels");
  mc.denoiser.base_channels = cfg.get<int>("base-channels");
  mc.denoiser.embed_dim = cfg.get<int>("embed-dim");
  mc.denoiser.dwp_mode = dwp_mode_from_string(cfg.get<std::string>("dwp"));
  mc.tied_denoiser = !cfg.get<bool>("untied");
  mc.learnable_penalties = !cfg.get<bool>("fixed-penalties");
  if (mc.cascades < 1) throw ConfigError("cascades must be >= 1");
  if (mc.denoiser.levels < 1) throw ConfigError("levels must be >= 1");
  if (mc.denoiser.base_channels < 1 || mc.denoiser.embed_dim < 1)
    throw ConfigError("base-channels and embed-dim must be >= 1");

  const fs::path data_dir = cfg.get<std::string>("data");
  const fs::path out = cfg.get<std::string>("out");
  const DatasetManifest data = load_manifest(data_dir);

  std::error_code ec;
  fs::create_directories(out, ec);
  cfg.write(out / "train_config.json");
  train(data, tc, mc, out, &std::cout);
  std::cout << "wrote checkpoint to " << out.string() << "\n";
  return 0;
}

int cmd_eval(const MergedConfig& cfg) {
  const fs::path ckpt_dir = cfg.get<std::string>("ckpt");
  const fs::path data_dir = cfg.get<std::string>("data");
  const fs::path out = cfg.get<std::string>("out");
  const uint64_t seed = cfg.get<uint64_t>("seed");
  const int gammas = cfg.get<int>("gammas-per-task");

  const Checkpoint ckpt = load_checkpoint(ckpt_dir);
  const DatasetManifest data = load_manifest(data_dir);

  std::vector<TaskSpec> tasks;
  std::stringstream ss(cfg.get<std::string>("tasks"));
  std::string token;
  while (std::getline(ss, token, ',')) {
    if (token.empty()) continue;
    const bool binary = token.find_first_not_of("01") == std::string::npos;
    if (binary && static_cast<int>(token.size()) == data.n_coils) {
      tasks.push_back(TaskSpec::from_gamma(encode_config(token)));
    } else {
      try {
        tasks.push_back(TaskSpec::from_count(std::stoi(token)));
      } catch (const std::invalid_argument&) {
        throw ConfigError("tasks: cannot parse \"" + token + "\"");
      }
    }
  }
  if (tasks.empty()) throw ConfigError("tasks: empty list");

  const MetricsTable table = evaluate(ckpt, data, tasks, seed, gammas);
  metrics_to_csv(table, out);

  // provenance for `report`: effective config plus the checkpoint's protocol
  ordered_json side = cfg.json();
  side["protocol"] = to_string(ckpt.train_cfg.protocol);
  side["task-pool-trained"] = ckpt.train_cfg.task_pool;
  fs::path side_path = out;
  side_path.replace_extension();
  side_path += "_config.json";
  std::ofstream sf(side_path, std::ios::trunc);
  if (!sf) throw IoError("cannot open for writing: " + side_path.string());
  sf << side.dump(2) << "\n";

  std::cout << "wrote " << table.rows.size() << " rows to " << out.string() << "\n";
  return 0;
}

int cmd_similarity(const MergedConfig& cfg) {
  const fs::path ckpt_dir = cfg.get<std::string>("ckpt");
  const Checkpoint ckpt = load_checkpoint(ckpt_dir);
  const std::vector<int> counts = parse_int_list(cfg.get<std::string>("coils"), "coils");
  int n_coils = cfg.get<int>("n-coils");
  if (n_coils == 0) n_coils = *std::max_element(counts.begin(), counts.end());
  const SimMatrix m = task_similarity_by_count(ckpt, counts, n_coils,
                                               cfg.get<int>("gammas-per-count"),
                                               cfg.get<uint64_t>("seed"));
  const fs::path out = cfg.get<std::string>("out");
  sim_to_csv(m, out);
  const std::string heatmap = cfg.get<std::string>("heatmap");
  if (!heatmap.empty()) sim_to_pgm(m, heatmap);
  fs::path side_path = out;
  side_path.replace_extension();
  side_path += "_config.json";
  cfg.write(side_path);
  std::cout << "wrote " << m.size() << "x" << m.size() << " SIM matrix to " << out.string()
            << "\n";
  return 0;
}

struct ProtocolStats {
  double psnr = 0, ssim = 0;
  int n = 0;
};

int cmd_report(const std::vector<std::string>& runs, const std::string& out_csv) {
  if (runs.empty()) throw ConfigError("report needs at least one run directory");
  // aggregate mean metrics per (coils, protocol) across all runs
  std::map<int, std::map<std::string, ProtocolStats>> by_coils;
  std::map<int, ProtocolStats> zf;
  std::set<std::string> protocols;
  std::set<int> seen_pool;
  for (const auto& run : runs) {
    const fs::path dir(run);
    const fs::path metrics = dir / "metrics.csv";
    const fs::path side = dir / "metrics_config.json";
    if (!fs::exists(metrics)) throw IoError("missing metrics.csv in " + run);
    if (!fs::exists(side)) throw IoError("missing metrics_config.json in " + run);
    std::ifstream sf(side);
    ordered_json sj;
    sf >> sj;
    const std::string proto = sj.at("protocol").get<std::string>();
    protocols.insert(proto);
    for (int k : sj.at("task-pool-trained").get<std::vector<int>>()) seen_pool.insert(k);
    const MetricsTable table = metrics_from_csv(metrics);
    for (const auto& r : table.rows) {
      auto& st = by_coils[r.coils][proto];
      st.psnr += r.psnr_db;
      st.ssim += r.ssim;
      st.n += 1;
      auto& z = zf[r.coils];
      z.psnr += r.zf_psnr_db;
      z.ssim += r.zf_ssim;
      z.n += 1;
    }
  }

  std::ostringstream table;
  table << "coils,seen,zf_psnr_db,zf_ssim";
  for (const auto& p : protocols) table << "," << p << "_psnr_db," << p << "_ssim";
  table << "\n";
  for (const auto& [coils, protos] : by_coils) {
    const auto& z = zf[coils];
    table << coils << "," << (seen_pool.count(coils) ? "yes" : "no") << "," << std::setprecision(6)
          << z.psnr / z.n << "," << z.ssim / z.n;
    for (const auto& p : protocols) {
      const auto it = protos.find(p);
      if (it == protos.end() || it->second.n == 0) {
        table << ",,";
      } else {
        table << "," << it->second.psnr / it->second.n << "," << it->second.ssim / it->second.n;
      }
    }
    table << "\n";
  }
  std::cout << table.str();
  if (!out_csv.empty()) {
    std::ofstream f(out_csv, std::ios::trunc);
    if (!f) throw IoError("cannot open for writing: " + out_csv);
    f << table.str();
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coil-configuration-adaptive MRI reconstruction toolkit"};
  app.require_subcommand(1);

  // ---- simulate ----
  auto* sim = app.add_subcommand("simulate", "generate a synthetic multi-coil dataset");
  std::string sim_config;
  std::optional<std::string> sim_out, sim_mask, sim_phantom;
  std::optional<int> sim_size, sim_coils, sim_samples, sim_acs;
  std::optional<double> sim_accel;
  std::optional<uint64_t> sim_seed;
  sim->add_option("--config", sim_config, "JSON config file");
  sim->add_option("--out", sim_out, "output dataset directory");
  sim->add_option("--size", sim_size, "image size (pixels per side)");
  sim->add_option("--coils", sim_coils, "number of receiver coils");
  sim->add_option("--samples", sim_samples, "number of samples");
  sim->add_option("--mask", sim_mask, "cartesian | poisson");
  sim->add_option("--accel", sim_accel, "acceleration factor");
  sim->add_option("--acs", sim_acs, "autocalibration columns (cartesian)");
  sim->add_option("--seed", sim_seed, "RNG seed");
  sim->add_option("--phantom", sim_phantom, "shepp-logan | smooth-random | mixed");

  // ---- train ----
  auto* tr = app.add_subcommand("train", "train a reconstruction model");
  std::string tr_config;
  std::optional<std::string> tr_data, tr_out, tr_protocol, tr_pool, tr_dwp;
  std::optional<int> tr_epochs, tr_batch, tr_cascades, tr_levels, tr_base, tr_embed, tr_cctsmk;
  std::optional<double> tr_lr;
  std::optional<uint64_t> tr_seed;
  std::optional<bool> tr_untied, tr_fixed_pen;
  tr->add_option("--config", tr_config, "JSON config file");
  tr->add_option("--data", tr_data, "dataset directory");
  tr->add_option("--out", tr_out, "checkpoint output directory");
  tr->add_option("--protocol", tr_protocol, "hypercoil | cctim | cctsm");
  tr->add_option("--task-pool", tr_pool, "coil counts, e.g. 5,7,9");
  tr->add_option("--cctsm-k", tr_cctsmk, "fixed coil count for cctsm");
  tr->add_option("--epochs", tr_epochs, "training epochs");
  tr->add_option("--batch", tr_batch, "batch size");
  tr->add_option("--lr", tr_lr, "learning rate");
  tr->add_option("--seed", tr_seed, "RNG seed");
  tr->add_option("--cascades", tr_cascades, "number of cascades");
  tr->add_option("--levels", tr_levels, "denoiser sub-sampling levels");
  tr->add_option("--base-channels", tr_base, "denoiser base channels");
  tr->add_option("--embed-dim", tr_embed, "hypernetwork hidden width");
  tr->add_option("--dwp", tr_dwp, "dynamic weight prediction: none | bottleneck | all");
  tr->add_flag("--untied", tr_untied, "per-cascade denoiser weights");
  tr->add_flag("--fixed-penalties", tr_fixed_pen, "do not learn lambda/alpha/beta");

  // ---- eval ----
  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint over coil configurations");
  std::string ev_config;
  std::optional<std::string> ev_ckpt, ev_data, ev_tasks, ev_out;
  std::optional<uint64_t> ev_seed;
  std::optional<int> ev_gammas;
  ev->add_option("--config", ev_config, "JSON config file");
  ev->add_option("--ckpt", ev_ckpt, "checkpoint directory");
  ev->add_option("--data", ev_data, "dataset directory");
  ev->add_option("--tasks", ev_tasks, "coil counts and/or bitstrings, e.g. 5,7,9,11,12");
  ev->add_option("--seed", ev_seed, "RNG seed for task sampling");
  ev->add_option("--out", ev_out, "metrics CSV path");
  ev->add_option("--gammas-per-task", ev_gammas, "sampled configurations per coil count");

  // ---- similarity ----
  auto* si = app.add_subcommand("similarity", "task-relationship SIM matrix");
  std::string si_config;
  std::optional<std::string> si_ckpt, si_coils, si_out, si_heatmap;
  std::optional<int> si_ncoils, si_gammas;
  std::optional<uint64_t> si_seed;
  si->add_option("--config", si_config, "JSON config file");
  si->add_option("--ckpt", si_ckpt, "checkpoint directory");
  si->add_option("--coils", si_coils, "coil counts, e.g. 5..12 or 5,7,9");
  si->add_option("--n-coils", si_ncoils, "total coils (default: max of --coils)");
  si->add_option("--gammas-per-count", si_gammas, "sampled configurations per count");
  si->add_option("--seed", si_seed, "RNG seed");
  si->add_option("--out", si_out, "SIM matrix CSV path");
  si->add_option("--heatmap", si_heatmap, "optional PGM heatmap path");

  // ---- report ----
  auto* re = app.add_subcommand("report", "summarize eval runs across protocols");
  std::vector<std::string> re_runs;
  std::string re_out;
  re->add_option("--runs", re_runs, "run directories containing metrics.csv")->expected(-1);
  re->add_option("--out", re_out, "write the summary CSV here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (sim->parsed()) {
      MergedConfig cfg(ordered_json{{"out", ""},
                                    {"size", 64},
                                    {"coils", 12},
                                    {"samples", 200},
                                    {"mask", "cartesian"},
                                    {"accel", 5.0},
                                    {"acs", 8},
                                    {"seed", 0},
                                    {"phantom", "mixed"}});
      cfg.overlay_file(sim_config);
      cfg.overlay_flag("out", sim_out);
      cfg.overlay_flag("size", sim_size);
      cfg.overlay_flag("coils", sim_coils);
      cfg.overlay_flag("samples", sim_samples);
      cfg.overlay_flag("mask", sim_mask);
      cfg.overlay_flag("accel", sim_accel);
      cfg.overlay_flag("acs", sim_acs);
      cfg.overlay_flag("seed", sim_seed);
      cfg.overlay_flag("phantom", sim_phantom);
      if (cfg.get<std::string>("out").empty()) throw ConfigError("missing required key \"out\"");
      return cmd_simulate(cfg);
    }
    if (tr->parsed()) {
      MergedConfig cfg(ordered_json{{"data", ""},
                                    {"out", ""},
                                    {"protocol", "hypercoil"},
                                    {"task-pool", "5,7,9"},
                                    {"cctsm-k", 0},
                                    {"epochs", 100},
                                    {"batch", 1},
                                    {"lr", 1e-3},
                                    {"seed", 0},
                                    {"cascades", 5},
                                    {"levels", 3},
                                    {"base-channels", 16},
                                    {"embed-dim", 16},
                                    {"dwp", "all"},
                                    {"untied", false},
                                    {"fixed-penalties", false}});
      cfg.overlay_file(tr_config);
      cfg.overlay_flag("data", tr_data);
      cfg.overlay_flag("out", tr_out);
      cfg.overlay_flag("protocol", tr_protocol);
      cfg.overlay_flag("task-pool", tr_pool);
      cfg.overlay_flag("cctsm-k", tr_cctsmk);
      cfg.overlay_flag("epochs", tr_epochs);
      cfg.overlay_flag("batch", tr_batch);
      cfg.overlay_flag("lr", tr_lr);
      cfg.overlay_flag("seed", tr_seed);
      cfg.overlay_flag("cascades", tr_cascades);
      cfg.overlay_flag("levels", tr_levels);
      cfg.overlay_flag("base-channels", tr_base);
      cfg.overlay_flag("embed-dim", tr_embed);
      cfg.overlay_flag("dwp", tr_dwp);
      cfg.overlay_flag("untied", tr_untied);
      cfg.overlay_flag("fixed-penalties", tr_fixed_pen);
      if (cfg.get<std::string>("data").empty()) throw ConfigError("missing required key \"data\"");
      if (cfg.get<std::string>("out").empty()) throw ConfigError("missing required key \"out\"");
      return cmd_train(cfg);
    }
    if (ev->parsed()) {
      MergedConfig cfg(ordered_json{{"ckpt", ""},
                                    {"data", ""},
                                    {"tasks", "5,7,9,11,12"},
                                    {"seed", 0},
                                    {"out", "metrics.csv"},
                                    {"gammas-per-task", 4}});
      cfg.overlay_file(ev_config);
      cfg.overlay_flag("ckpt", ev_ckpt);
      cfg.overlay_flag("data", ev_data);
      cfg.overlay_flag("tasks", ev_tasks);
      cfg.overlay_flag("seed", ev_seed);
      cfg.overlay_flag("out", ev_out);
      cfg.overlay_flag("gammas-per-task", ev_gammas);
      if (cfg.get<std::string>("ckpt").empty()) throw ConfigError("missing required key \"ckpt\"");
      if (cfg.get<std::string>("data").empty()) throw ConfigError("missing required key \"data\"");
      return cmd_eval(cfg);
    }
    if (si->parsed()) {
      MergedConfig cfg(ordered_json{{"ckpt", ""},
                                    {"coils", "5..12"},
                                    {"n-coils", 0},
                                    {"gammas-per-count", 8},
                                    {"seed", 0},
                                    {"out", "sim.csv"},
                                    {"heatmap", ""}});
      cfg.overlay_file(si_config);
      cfg.overlay_flag("ckpt", si_ckpt);
      cfg.overlay_flag("coils", si_coils);
      cfg.overlay_flag("n-coils", si_ncoils);
      cfg.overlay_flag("gammas-per-count", si_gammas);
      cfg.overlay_flag("seed", si_seed);
      cfg.overlay_flag("out", si_out);
      cfg.overlay_flag("heatmap", si_heatmap);
      if (cfg.get<std::string>("ckpt").empty()) throw ConfigError("missing required key \"ckpt\"");
      return cmd_similarity(cfg);
    }
    if (re->parsed()) return cmd_report(re_runs, re_out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 4;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
