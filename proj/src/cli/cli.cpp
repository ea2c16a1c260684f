#include "spoofsmith/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <functional>
#include <memory>
#include <ostream>
#include <variant>

#include "spoofsmith/error.hpp"
#include "spoofsmith/eval.hpp"
#include "spoofsmith/io/checkpoint.hpp"
#include "spoofsmith/io/manifest.hpp"
#include "spoofsmith/io/toy_corpus.hpp"
#include "spoofsmith/models.hpp"
#include "spoofsmith/train/classifier.hpp"
#include "spoofsmith/train/data.hpp"
#include "spoofsmith/train/gan.hpp"
#include "spoofsmith/verify/verify.hpp"

namespace spoofsmith {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct UsageError : Error {
  using Error::Error;
};

using Target = std::variant<std::string*, std::uint64_t*, double*, bool*, std::vector<std::string>*>;

struct Field {
  std::string key;
  CLI::Option* option = nullptr;
  Target target;
  bool required = false;
};

/// Options of one subcommand. Values come from, in increasing priority:
/// built-in defaults, the --config JSON file, explicit flags.
class Command {
 public:
  Command(CLI::App& parent, const std::string& name, const std::string& help) : app_(parent.add_subcommand(name, help)) {
    app_->add_option("--config", config_path_, "JSON file with option values (flags take precedence)");
  }

  template <typename V>
  void add(const std::string& flag, V* target, const std::string& help, bool required = false) {
    std::string key = flag.substr(2);
    std::replace(key.begin(), key.end(), '-', '_');
    CLI::Option* opt = app_->add_option(flag, *target, help);
    if constexpr (!std::is_same_v<V, std::vector<std::string>>) opt->capture_default_str();
    if (required) opt->option_text("REQUIRED");
    fields_.push_back({key, opt, target, required});
  }

  [[nodiscard]] bool parsed() const { return app_->parsed(); }
  [[nodiscard]] const std::string& name() const { return app_->get_name(); }

  /// Merges the config file under the flags and checks required fields.
  json resolve() {
    json file = json::object();
    if (!config_path_.empty()) {
      std::ifstream in(config_path_);
      if (!in) throw UsageError("cannot open config file " + config_path_);
      try {
        file = json::parse(in);
      } catch (const json::parse_error& e) {
        throw ConfigError(config_path_ + ": " + e.what());
      }
      if (!file.is_object()) throw ConfigError(config_path_ + ": expected a JSON object");
    }
    json resolved = json::object();
    resolved["command"] = name();
    for (auto& f : fields_) {
      const bool from_flag = f.option->count() > 0;
      if (!from_flag && file.contains(f.key)) {
        std::visit(
            [&](auto* target) {
              try {
                *target = file.at(f.key).get<std::remove_pointer_t<decltype(target)>>();
              } catch (const json::exception& e) {
                throw ConfigError("config key '" + f.key + "': " + e.what());
              }
            },
            f.target);
      }
      std::visit([&](auto* target) { resolved[f.key] = *target; }, f.target);
      if (f.required && !from_flag && !file.contains(f.key)) {
        throw UsageError("--" + f.option->get_name().substr(2) + " is required");
      }
    }
    return resolved;
  }

 private:
  CLI::App* app_;
  std::string config_path_;
  std::vector<Field> fields_;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

fs::path prepare_out(const std::string& out, const json& resolved) {
  const fs::path dir(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + out + ": " + ec.message());
  write_text(dir / "config.json", resolved.dump(2) + "\n");
  return dir;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) { return Rng(seed).split(tag).next_u64(); }

InitScheme parse_init(const std::string& name) {
  if (name == "dcgan") return InitScheme::Dcgan;
  if (name == "he") return InitScheme::HeNormal;
  throw ConfigError("unknown init scheme '" + name + "' (expected dcgan or he)");
}

std::string format_optional(const std::optional<double>& v) { return v ? format_double(*v) : "undefined"; }

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Synthetic presentation-attack generation and detection for periocular images", "spoofsmith"};
  app.require_subcommand(1);

  // gen-toy
  std::uint64_t toy_count = 500, toy_res = 64, toy_seed = 0;
  std::string toy_out;
  Command gen_toy(app, "gen-toy", "Write a procedural bona-fide periocular corpus");
  gen_toy.add("--count", &toy_count, "Number of images");
  gen_toy.add("--res", &toy_res, "Square resolution in pixels");
  gen_toy.add("--seed", &toy_seed, "Random seed");
  gen_toy.add("--out", &toy_out, "Output directory", true);

  // train-gan
  TrainConfig gan_cfg = TrainConfig::gan_defaults();
  std::string gan_manifest, gan_out;
  std::uint64_t gan_res = 64, z_dim = 100;
  double gan_width = 0.25;
  Command train_gan_cmd(app, "train-gan", "Train the DCGAN generator/discriminator pair on real images");
  train_gan_cmd.add("--manifest", &gan_manifest, "Manifest of real images", true);
  train_gan_cmd.add("--epochs", &gan_cfg.epochs, "Passes over the real images");
  train_gan_cmd.add("--res", &gan_res, "Square working resolution (power of two, >= 16)");
  train_gan_cmd.add("--real-per-iter", &gan_cfg.real_per_iter, "Real images per iteration (batch size)");
  train_gan_cmd.add("--seed", &gan_cfg.seed, "Random seed");
  train_gan_cmd.add("--width-scale", &gan_width, "Channel width multiplier");
  train_gan_cmd.add("--z-dim", &z_dim, "Latent dimension");
  train_gan_cmd.add("--lr", &gan_cfg.learning_rate, "Adam learning rate");
  train_gan_cmd.add("--beta1", &gan_cfg.beta1, "Adam beta1");
  train_gan_cmd.add("--beta2", &gan_cfg.beta2, "Adam beta2");
  train_gan_cmd.add("--augment", &gan_cfg.augment_ops, "Augmentation ops (hflip rotate crop brightness, op:p)");
  train_gan_cmd.add("--temporal-resample", &gan_cfg.temporal_resample, "Redraw augmentation and noise every iteration");
  train_gan_cmd.add("--out", &gan_out, "Output directory", true);

  // synth
  std::string synth_ckpt, synth_out;
  std::uint64_t synth_count = 10000, synth_seed = 0;
  Command synth_cmd(app, "synth", "Sample attack images from a generator checkpoint");
  synth_cmd.add("--ckpt", &synth_ckpt, "Generator checkpoint", true);
  synth_cmd.add("--count", &synth_count, "Number of images");
  synth_cmd.add("--seed", &synth_seed, "Latent seed");
  synth_cmd.add("--out", &synth_out, "Output directory", true);

  // train-pad
  TrainConfig pad_cfg = TrainConfig::classifier_defaults();
  pad_cfg.epochs = 10;
  SplitConfig split_cfg;
  std::string real_manifest, attack_manifest, pad_out, init_name = "he";
  std::uint64_t pad_res = 64, head_units = 256;
  double pad_width = 0.25, pad_threshold = 0.5;
  Command train_pad_cmd(app, "train-pad", "Train and evaluate the VGG-style presentation-attack detector");
  train_pad_cmd.add("--real-manifest", &real_manifest, "Manifest of bona-fide images", true);
  train_pad_cmd.add("--attack-manifest", &attack_manifest, "Manifest of attack images", true);
  train_pad_cmd.add("--epochs", &pad_cfg.epochs, "Training epochs (0 scores the untrained network)");
  train_pad_cmd.add("--width-scale", &pad_width, "Channel width multiplier");
  train_pad_cmd.add("--seed", &pad_cfg.seed, "Random seed (training, split and initialization)");
  train_pad_cmd.add("--res", &pad_res, "Square working resolution (multiple of 32)");
  train_pad_cmd.add("--batch-size", &pad_cfg.batch_size, "Minibatch size");
  train_pad_cmd.add("--lr", &pad_cfg.learning_rate, "Adam learning rate");
  train_pad_cmd.add("--beta1", &pad_cfg.beta1, "Adam beta1");
  train_pad_cmd.add("--beta2", &pad_cfg.beta2, "Adam beta2");
  train_pad_cmd.add("--head-units", &head_units, "Hidden dense units");
  train_pad_cmd.add("--train-fraction", &split_cfg.train_fraction, "Share of each stratum used for training");
  train_pad_cmd.add("--stratify-by-eye", &split_cfg.stratify_by_eye, "Also balance left/right eyes across the split");
  train_pad_cmd.add("--threshold", &pad_threshold, "Decision threshold on the bona-fide score");
  train_pad_cmd.add("--init", &init_name, "Weight initialization: dcgan or he");
  train_pad_cmd.add("--augment", &pad_cfg.augment_ops, "Augmentation ops applied to training batches");
  train_pad_cmd.add("--out", &pad_out, "Output directory", true);

  // eval
  std::string eval_ckpt, eval_manifest, eval_out;
  double eval_threshold = 0.5;
  std::uint64_t eval_batch = 32;
  Command eval_cmd(app, "eval", "Score a manifest with a classifier checkpoint");
  eval_cmd.add("--ckpt", &eval_ckpt, "Classifier checkpoint", true);
  eval_cmd.add("--manifest", &eval_manifest, "Labeled manifest", true);
  eval_cmd.add("--threshold", &eval_threshold, "Decision threshold on the bona-fide score");
  eval_cmd.add("--batch-size", &eval_batch, "Scoring batch size");
  eval_cmd.add("--out", &eval_out, "Output directory", true);

  // verify
  std::uint64_t verify_seed = 0, verify_cases = 200;
  std::string verify_out;
  Command verify_cmd(app, "verify", "Run the gradient, oracle and round-trip suites");
  verify_cmd.add("--seed", &verify_seed, "Seed for random cases");
  verify_cmd.add("--cases", &verify_cases, "Random cases per differentiable op");
  verify_cmd.add("--out", &verify_out, "Optional directory for verify.json");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen_toy.parsed()) {
      const auto dir = prepare_out(toy_out, gen_toy.resolve());
      gen_toy_corpus(toy_count, toy_res, toy_seed, dir);
      out << (dir / "manifest.jsonl").string() << '\n';
    } else if (train_gan_cmd.parsed()) {
      const json resolved = train_gan_cmd.resolve();
      gan_cfg.validate();
      const auto manifest = load_manifest(gan_manifest);
      const ImageShape shape{3, gan_res, gan_res};
      auto g = build_dcgan_generator<float>(LatentSpec{z_dim}, shape, gan_width, derive_seed(gan_cfg.seed, 1));
      auto d = build_dcgan_discriminator<float>(shape, gan_width, derive_seed(gan_cfg.seed, 2));
      const auto dir = prepare_out(gan_out, resolved);
      const auto result = train_gan(manifest, std::move(g), std::move(d), gan_cfg);
      save_checkpoint(result.generator, dir / "g.ckpt");
      save_checkpoint(result.discriminator, dir / "d.ckpt");
      write_text(dir / "losses.csv", gan_history_csv(result.history));
      if (!result.history.empty()) {
        const auto& last = result.history.back();
        out << "iterations " << result.history.size() << ", final d_loss " << format_double(last.d_loss)
            << ", g_loss " << format_double(last.g_loss) << '\n';
      }
      out << (dir / "g.ckpt").string() << '\n';
    } else if (synth_cmd.parsed()) {
      const auto dir = prepare_out(synth_out, synth_cmd.resolve());
      const auto manifest = synthesize(load_checkpoint(synth_ckpt), synth_count, synth_seed, dir);
      save_manifest(manifest, dir / "manifest.jsonl");
      out << (dir / "manifest.jsonl").string() << '\n';
    } else if (train_pad_cmd.parsed()) {
      const json resolved = train_pad_cmd.resolve();
      pad_cfg.validate(true);
      split_cfg.seed = pad_cfg.seed;
      split_cfg.validate();
      const InitScheme scheme = parse_init(init_name);
      const auto merged = merge_manifests(load_manifest(real_manifest), load_manifest(attack_manifest));
      auto net = build_modified_vggnet<float>(ImageShape{3, pad_res, pad_res}, pad_width, head_units,
                                              derive_seed(pad_cfg.seed, 3), scheme);
      const auto dir = prepare_out(pad_out, resolved);
      const auto result = train_classifier(merged, std::move(net), pad_cfg, split_cfg, pad_threshold);
      save_checkpoint(result.checkpoint, dir / "classifier.ckpt");
      save_manifest(result.split.train, dir / "train.jsonl");
      save_manifest(result.split.test, dir / "test.jsonl");
      write_text(dir / "history.csv", classifier_history_csv(result.history));
      emit_report(result.report, dir);
      out << "test accuracy " << format_double(result.report.accuracy) << ", tpr "
          << format_optional(result.report.tpr) << ", fpr " << format_optional(result.report.fpr) << ", auc "
          << format_optional(result.report.auc) << '\n';
      out << (dir / "report.json").string() << '\n';
    } else if (eval_cmd.parsed()) {
      const json resolved = eval_cmd.resolve();
      auto net = restore_network(load_checkpoint(eval_ckpt));
      const auto manifest = load_manifest(eval_manifest);
      if (manifest.empty()) throw EmptyInputError("manifest " + eval_manifest + " has no entries");
      const auto dir = prepare_out(eval_out, resolved);
      const auto images = load_images(manifest, image_shape_of(net));
      std::vector<Label> labels;
      for (const auto& e : manifest.entries) labels.push_back(e.label);
      const auto report = evaluate(score_images(net, images, labels, eval_batch), eval_threshold);
      emit_report(report, dir);
      out << "accuracy " << format_double(report.accuracy) << ", tpr " << format_optional(report.tpr) << ", fpr "
          << format_optional(report.fpr) << ", auc " << format_optional(report.auc) << '\n';
      out << (dir / "report.json").string() << '\n';
    } else if (verify_cmd.parsed()) {
      const json resolved = verify_cmd.resolve();
      VerifyOptions options;
      options.seed = verify_seed;
      options.gradient_cases = verify_cases;
      const auto results = run_verification(options, out);
      std::size_t failed = 0;
      json checks = json::array();
      for (const auto& r : results) {
        failed += !r.passed;
        checks.push_back({{"suite", r.suite}, {"name", r.name}, {"passed", r.passed}, {"detail", r.detail},
                          {"seconds", r.seconds}});
      }
      if (!verify_out.empty()) {
        const auto dir = prepare_out(verify_out, resolved);
        write_text(dir / "verify.json", json{{"checks", checks}, {"failed", failed}}.dump(2) + "\n");
      }
      out << (failed == 0 ? "all " + std::to_string(results.size()) + " checks passed"
                          : std::to_string(failed) + " of " + std::to_string(results.size()) + " checks failed")
          << '\n';
      return failed == 0 ? kExitOk : kExitFailure;
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace spoofsmith
