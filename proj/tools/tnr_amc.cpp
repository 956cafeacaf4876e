// Command-line driver: dataset generation, the three training stages, the
// two baselines, evaluation, and manifest replay.
//
// Exit codes: 0 success, 1 runtime/file/state error, 2 usage error.

#include "tnr/checkpoint.hpp"
#include "tnr/dataset.hpp"
#include "tnr/evaluation.hpp"
#include "tnr/manifest.hpp"
#include "tnr/training.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace tnr;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shortest text that parses back to the same value.
template <typename T>
std::string to_text(const T& v) {
  if constexpr (std::is_arithmetic_v<T>) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
  } else {
    return std::string(v);
  }
}

// A subcommand with a record of every flag, so resolved values can be
// snapshotted into the manifest and config files can fill unset flags.
class Command {
 public:
  Command(CLI::App& app, std::string name, std::string description)
      : name_(std::move(name)), sub_(app.add_subcommand(name_, std::move(description))) {
    sub_->add_option("--config", config_, "key=value file; command-line flags take precedence");
  }
  Command(const Command&) = delete;
  Command& operator=(const Command&) = delete;

  template <typename T>
  CLI::Option* flag(const std::string& key, T& target, const std::string& help) {
    getters_.emplace_back(key, [&target] { return to_text(target); });
    return sub_->add_option("--" + key, target, help)->capture_default_str();
  }

  CLI::Option* flag(const std::string& key, fs::path& target, const std::string& help) {
    getters_.emplace_back(key, [&target] { return target.string(); });
    return sub_->add_option("--" + key, target, help);
  }

  bool parsed() const { return sub_->parsed(); }
  const std::string& name() const { return name_; }

  void apply_config() {
    if (config_.empty()) return;
    for (const auto& [key, value] : io::read_key_value_file(config_)) {
      auto* opt = sub_->get_option_no_throw("--" + key);
      if (opt == nullptr || key == "config") {
        throw UsageError("config key '" + key + "' is not a flag of '" + name_ + "'");
      }
      if (opt->count() > 0) continue;
      try {
        opt->add_result(value);
        opt->run_callback();
      } catch (const CLI::Error& e) {
        throw UsageError("config key '" + key + "': " + e.what());
      }
    }
  }

  io::KeyValues snapshot() const {
    io::KeyValues out;
    for (const auto& [k, get] : getters_) out.emplace_back(k, get());
    return out;
  }

 private:
  std::string name_;
  CLI::App* sub_;
  fs::path config_;
  std::vector<std::pair<std::string, std::function<std::string()>>> getters_;
};

struct TrainFlags {
  training::TrainConfig cfg;
  std::size_t gru_layers = 3;
  std::size_t hidden = 32;
  std::size_t head_hidden = 32;
  std::size_t dense_hidden = 64;
  std::size_t reconstruction_tap = 3;

  void attach(Command& c) {
    c.flag("lr-p", cfg.lr_p, "pre-training learning rate");
    c.flag("lr-nr", cfg.lr_nr, "stage I learning rate");
    c.flag("lr-mc-start", cfg.lr_mc_start, "stage II initial learning rate");
    c.flag("lr-mc-end", cfg.lr_mc_end, "stage II final learning rate");
    c.flag("w-nr", cfg.w_nr, "reconstruction loss weight");
    c.flag("w-mc", cfg.w_mc, "classification loss weight");
    c.flag("epochs-pretrain", cfg.epochs_pretrain, "pre-training epochs");
    c.flag("epochs-stage1", cfg.epochs_stage1, "stage I epochs");
    c.flag("epochs-stage2", cfg.epochs_stage2, "stage II epochs");
    c.flag("batch-size", cfg.batch_size, "mini-batch size");
    c.flag("val-fraction", cfg.val_fraction, "validation share per class");
    c.flag("seed", cfg.seed, "run seed");
    c.flag("gru-layers", gru_layers, "denoiser / transferred GRU layers");
    c.flag("hidden", hidden, "GRU width of the denoiser stack");
    c.flag("head-hidden", head_hidden, "classification GRU width");
    c.flag("dense-hidden", dense_hidden, "classification dense width");
    c.flag("reconstruction-tap", reconstruction_tap, "layer feeding the reconstruction head");
  }

  models::DenoiserConfig denoiser() const { return {gru_layers, hidden, 2, 2}; }

  models::ClassifierConfig classifier() const {
    models::ClassifierConfig c;
    c.transferred_gru_layers = gru_layers;
    c.hidden = hidden;
    c.head_hidden = head_hidden;
    c.dense_hidden = dense_hidden;
    c.n_classes = kAllSchemes.size();
    c.reconstruction_tap = reconstruction_tap;
    return c;
  }
};

void write_manifest(const Command& cmd, const fs::path& where, const std::vector<fs::path>& inputs,
                    const std::vector<fs::path>& outputs) {
  io::RunManifest m;
  m.command = cmd.name();
  m.parameters = cmd.snapshot();
  for (const auto& p : inputs) m.inputs.push_back({p, io::sha256_file(p)});
  for (const auto& p : outputs) m.outputs.push_back({p, io::sha256_file(p)});
  m.write(where);
}

Dataset load_dataset(const fs::path& path, Domain expected) {
  Dataset ds = read_dataset(path);
  if (ds.domain != expected) {
    throw std::invalid_argument("dataset '" + path.string() + "' has the wrong domain");
  }
  return ds;
}

training::EpochCallback progress(const std::string& stage) {
  return [stage](std::size_t epoch, const training::StageReport& r) {
    std::cerr << stage << " epoch " << epoch << " train_loss=" << r.train_loss.back()
              << " val_loss=" << r.val_loss.back();
    if (!r.accuracy.empty()) std::cerr << " acc=" << r.accuracy.back();
    std::cerr << '\n';
  };
}

fs::path report_path(const fs::path& report, const fs::path& ckpt) {
  if (!report.empty()) return report;
  auto p = ckpt;
  p += ".csv";
  return p;
}

int run(const std::vector<std::string>& args);

int run_replay(const fs::path& manifest_path) {
  const auto m = io::RunManifest::read(manifest_path);
  for (const auto& in : m.inputs) {
    if (io::sha256_file(in.path) != in.sha256) {
      std::cerr << "error: input '" << in.path.string() << "' differs from the manifest\n";
      return 1;
    }
  }
  std::vector<std::string> args{"tnr_amc", m.command};
  for (const auto& [k, v] : m.parameters) {
    if (v.empty()) continue;
    args.push_back("--" + k);
    args.push_back(v);
  }
  if (const int rc = run(args); rc != 0) return rc;
  bool same = true;
  for (const auto& out : m.outputs) {
    const bool match = io::sha256_file(out.path) == out.sha256;
    std::cout << (match ? "reproduced " : "MISMATCH ") << out.path.string() << '\n';
    same = same && match;
  }
  return same ? 0 : 1;
}

int run(const std::vector<std::string>& args) {
  CLI::App app{"Transfer-learning guided noise reduction for modulation classification"};
  app.require_subcommand(1);

  // gen-periodic
  PeriodicDatasetOptions per;
  fs::path per_out;
  Command gen_periodic(app, "gen-periodic", "generate the periodic pre-training dataset");
  gen_periodic.flag("count", per.count, "number of frames");
  gen_periodic.flag("length", per.length, "samples per frame");
  gen_periodic.flag("snr-min", per.snr_min, "lowest SNR in dB");
  gen_periodic.flag("snr-max", per.snr_max, "highest SNR in dB");
  gen_periodic.flag("max-segments", per.max_segments, "SNR plateaus per frame, at most");
  gen_periodic.flag("seed", per.seed, "dataset seed");
  gen_periodic.flag("out", per_out, "output TNRD file")->required();

  // gen-mod
  ModulationDatasetOptions mod;
  std::string schemes = "BPSK,QPSK,8PSK,16QAM,64QAM";
  fs::path mod_out;
  Command gen_mod(app, "gen-mod", "generate a modulation dataset");
  gen_mod.flag("schemes", schemes, "comma-separated scheme list");
  gen_mod.flag("count-per-scheme", mod.count_per_scheme, "frames per scheme");
  gen_mod.flag("length", mod.length, "samples per frame");
  gen_mod.flag("sps", mod.sps, "samples per symbol");
  gen_mod.flag("snr-min", mod.snr_min, "lowest SNR in dB");
  gen_mod.flag("snr-max", mod.snr_max, "highest SNR in dB");
  gen_mod.flag("max-segments", mod.max_segments, "SNR plateaus per frame, at most");
  gen_mod.flag("seed", mod.seed, "dataset seed");
  gen_mod.flag("out", mod_out, "output TNRD file")->required();

  // training commands
  // Options bind to member addresses, so these live on the heap and never move.
  struct TrainCommand {
    TrainCommand(CLI::App& app, const std::string& name, const std::string& help)
        : cmd(app, name, help) {}
    Command cmd;
    TrainFlags flags;
    fs::path data, init_ckpt, out_ckpt, report;
    std::string mode;
  };
  auto make_train = [&](const std::string& name, const std::string& help, bool needs_init) {
    auto tc = std::make_unique<TrainCommand>(app, name, help);
    tc->flags.attach(tc->cmd);
    tc->cmd.flag("data", tc->data, "training dataset (TNRD)")->required();
    if (needs_init) tc->cmd.flag("init-ckpt", tc->init_ckpt, "checkpoint to start from")->required();
    tc->cmd.flag("out-ckpt", tc->out_ckpt, "output checkpoint (TNRW)")->required();
    tc->cmd.flag("report", tc->report, "per-epoch CSV (default: <out-ckpt>.csv)");
    return tc;
  };
  auto pretrain_cmd = make_train("pretrain", "pre-train the denoiser on periodic frames", false);
  auto transfer1_cmd = make_train("transfer1", "stage I: adapt the denoiser to modulation frames", true);
  auto finetune_cmd = make_train("finetune", "stage II: joint denoise + classify fine-tuning", true);
  auto baseline_cmd = make_train("baseline", "train an ablation baseline from scratch", false);
  baseline_cmd->cmd.flag("mode", baseline_cmd->mode, "nr-scratch or amc")
      ->required()
      ->check(CLI::IsMember({"nr-scratch", "amc"}));

  // eval
  fs::path eval_ckpt, eval_data, eval_dir, eval_denoiser;
  std::size_t eval_tap = 3;
  double confusion_snr = -8.0;
  double confusion_half_width = 1.0;
  Command eval_cmd(app, "eval", "accuracy-vs-SNR, confusion matrix and SNR gain");
  eval_cmd.flag("ckpt", eval_ckpt, "classifier checkpoint")->required();
  eval_cmd.flag("data", eval_data, "test dataset (TNRD)")->required();
  eval_cmd.flag("report-dir", eval_dir, "output directory")->required();
  eval_cmd.flag("denoiser-ckpt", eval_denoiser, "optional stage I checkpoint for SNR gain");
  eval_cmd.flag("reconstruction-tap", eval_tap, "layer feeding the reconstruction head");
  eval_cmd.flag("confusion-snr", confusion_snr, "center of the confusion-matrix SNR band");
  eval_cmd.flag("confusion-half-width", confusion_half_width, "half width of that band");

  fs::path replay_manifest;
  auto* replay = app.add_subcommand("replay", "re-run a command from its manifest and compare digests");
  replay->add_option("manifest", replay_manifest, "manifest file")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (replay->parsed()) return run_replay(replay_manifest);

    if (gen_periodic.parsed()) {
      gen_periodic.apply_config();
      write_dataset(make_periodic_dataset(per), per_out);
      write_manifest(gen_periodic, io::manifest_path_for(per_out), {}, {per_out});
      return 0;
    }
    if (gen_mod.parsed()) {
      gen_mod.apply_config();
      mod.schemes.clear();
      std::stringstream list(schemes);
      for (std::string item; std::getline(list, item, ',');) {
        try {
          mod.schemes.push_back(parse_scheme(item));
        } catch (const std::invalid_argument& e) {
          throw UsageError(e.what());
        }
      }
      write_dataset(make_modulation_dataset(mod), mod_out);
      write_manifest(gen_mod, io::manifest_path_for(mod_out), {}, {mod_out});
      return 0;
    }

    for (auto* tc : {pretrain_cmd.get(), transfer1_cmd.get(), finetune_cmd.get(), baseline_cmd.get()}) {
      if (!tc->cmd.parsed()) continue;
      tc->cmd.apply_config();
      const auto& name = tc->cmd.name();
      const auto& f = tc->flags;
      training::StageResult result;
      std::vector<fs::path> inputs{tc->data};
      if (name == "pretrain") {
        result = training::pretrain(load_dataset(tc->data, Domain::Periodic), f.cfg, f.denoiser(),
                                    progress(name));
      } else if (name == "transfer1") {
        inputs.push_back(tc->init_ckpt);
        result = training::transfer_stage1(read_checkpoint(tc->init_ckpt),
                                           load_dataset(tc->data, Domain::Modulation), f.cfg,
                                           progress(name));
      } else if (name == "finetune") {
        inputs.push_back(tc->init_ckpt);
        result = training::transfer_stage2(read_checkpoint(tc->init_ckpt),
                                           load_dataset(tc->data, Domain::Modulation), f.cfg,
                                           f.classifier(), progress(name));
      } else if (tc->mode == "nr-scratch") {
        result = training::train_baseline_nr_scratch(load_dataset(tc->data, Domain::Modulation),
                                                     f.cfg, f.denoiser(), progress(name));
      } else {
        result = training::train_baseline_amc(load_dataset(tc->data, Domain::Modulation), f.cfg,
                                              f.classifier(), progress(name));
      }
      const fs::path report = report_path(tc->report, tc->out_ckpt);
      write_checkpoint(result.params, tc->out_ckpt);
      training::write_report_csv(result.report, report);
      write_manifest(tc->cmd, io::manifest_path_for(tc->out_ckpt), inputs, {tc->out_ckpt, report});
      return 0;
    }

    if (eval_cmd.parsed()) {
      eval_cmd.apply_config();
      const auto params = read_checkpoint(eval_ckpt);
      if (params.role() != nn::Role::Classifier) {
        throw InvalidState("eval needs a classifier checkpoint, got role '" +
                           std::string(nn::to_string(*params.role())) + "'");
      }
      const auto test = load_dataset(eval_data, Domain::Modulation);
      fs::create_directories(eval_dir);
      const auto model = eval::classifier_predictor(params, eval_tap);
      std::vector<fs::path> inputs{eval_ckpt, eval_data};
      std::vector<fs::path> outputs;

      const auto accuracy_csv = eval_dir / "accuracy.csv";
      eval::write_accuracy_csv(eval::accuracy_vs_snr(model, test.examples), accuracy_csv);
      outputs.push_back(accuracy_csv);

      try {
        const auto cm = eval::confusion(model, test.examples, confusion_snr, confusion_half_width,
                                        kAllSchemes.size());
        const auto confusion_csv = eval_dir / "confusion.csv";
        eval::write_confusion_csv(cm, eval::modulation_class_names(), confusion_csv);
        outputs.push_back(confusion_csv);
        std::cout << "confusion accuracy at " << confusion_snr << " dB: " << cm.accuracy() << '\n';
      } catch (const std::invalid_argument& e) {
        std::cerr << "warning: confusion matrix skipped: " << e.what() << '\n';
      }

      std::vector<LabeledExample> low;
      for (const auto& ex : test.examples) {
        if (ex.mean_snr() >= -8.0 && ex.mean_snr() <= 0.0) low.push_back(ex);
      }
      const auto summary = eval_dir / "snr_gain.txt";
      {
        std::ofstream out(summary);
        out.precision(9);
        out << "frames=" << test.size() << '\n';
        out << "overall_accuracy=" << eval::per_example_accuracy(model, test.examples) << '\n';
        const auto recon = eval::network_denoiser(params, eval_tap);
        out << "classifier_branch_gain_db=" << eval::snr_gain(recon, test.examples) << '\n';
        if (!low.empty()) {
          out << "classifier_branch_gain_db_m8_to_0=" << eval::snr_gain(recon, low) << '\n';
        }
        if (!eval_denoiser.empty()) {
          inputs.push_back(eval_denoiser);
          const auto nr = read_checkpoint(eval_denoiser);
          const auto den = eval::network_denoiser(nr);
          out << "denoiser_gain_db=" << eval::snr_gain(den, test.examples) << '\n';
          if (!low.empty()) out << "denoiser_gain_db_m8_to_0=" << eval::snr_gain(den, low) << '\n';
        }
      }
      outputs.push_back(summary);
      write_manifest(eval_cmd, eval_dir / "eval.manifest", inputs, outputs);
      return 0;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  return run(std::vector<std::string>(argv, argv + argc));
}
