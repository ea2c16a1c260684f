#include "spoofsmith/train/config.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "spoofsmith/error.hpp"
#include "spoofsmith/io/checkpoint.hpp"
#include "spoofsmith/rng.hpp"
#include "spoofsmith/train/augment.hpp"

namespace spoofsmith {

using nlohmann::json;

TrainConfig TrainConfig::gan_defaults() {
  TrainConfig cfg;
  cfg.augment_ops = {"hflip", "rotate", "crop", "brightness"};
  return cfg;
}

TrainConfig TrainConfig::classifier_defaults() {
  TrainConfig cfg;
  cfg.learning_rate = 1e-4;
  cfg.beta1 = 0.9;
  cfg.beta2 = 0.999;
  return cfg;
}

void TrainConfig::validate(bool allow_zero_epochs) const {
  if (!(learning_rate > 0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be positive");
  if (!(beta1 > 0 && beta1 < 1)) throw ConfigError("beta1 must lie in (0, 1)");
  if (!(beta2 > 0 && beta2 < 1)) throw ConfigError("beta2 must lie in (0, 1)");
  if (batch_size < 2) throw ConfigError("batch_size must be at least 2");
  if (real_per_iter < 2) throw ConfigError("real_per_iter must be at least 2");
  if (epochs == 0 && !allow_zero_epochs) throw ConfigError("epochs must be at least 1");
  parse_augment_ops(augment_ops);
}

json to_json(const TrainConfig& cfg) {
  return json{{"learning_rate", cfg.learning_rate},
              {"beta1", cfg.beta1},
              {"beta2", cfg.beta2},
              {"batch_size", cfg.batch_size},
              {"epochs", cfg.epochs},
              {"seed", cfg.seed},
              {"real_per_iter", cfg.real_per_iter},
              {"target_synthetic", cfg.target_synthetic},
              {"augment_ops", cfg.augment_ops},
              {"temporal_resample", cfg.temporal_resample}};
}

namespace {

template <typename V>
void read_field(const json& j, const char* key, V& out) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return;
  try {
    out = it->get<V>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field '") + key + "': " + e.what());
  }
}

}  // namespace

TrainConfig train_config_from_json(const json& j, TrainConfig cfg) {
  if (!j.is_object()) throw ConfigError("train config must be a JSON object");
  read_field(j, "learning_rate", cfg.learning_rate);
  read_field(j, "beta1", cfg.beta1);
  read_field(j, "beta2", cfg.beta2);
  read_field(j, "batch_size", cfg.batch_size);
  read_field(j, "epochs", cfg.epochs);
  read_field(j, "seed", cfg.seed);
  read_field(j, "real_per_iter", cfg.real_per_iter);
  read_field(j, "target_synthetic", cfg.target_synthetic);
  read_field(j, "augment_ops", cfg.augment_ops);
  read_field(j, "temporal_resample", cfg.temporal_resample);
  return cfg;
}

std::string trajectory_hash(const TrainConfig& cfg, const json& extra) {
  json j = to_json(cfg);
  j.erase("epochs");
  j.erase("target_synthetic");
  j["extra"] = extra;
  return config_hash(j);
}

void SplitConfig::validate() const {
  if (!(train_fraction > 0 && train_fraction < 1)) throw ConfigError("train_fraction must lie in (0, 1)");
}

json to_json(const SplitConfig& cfg) {
  return json{{"train_fraction", cfg.train_fraction},
              {"seed", cfg.seed},
              {"stratify_by_label", cfg.stratify_by_label},
              {"stratify_by_eye", cfg.stratify_by_eye},
              {"allow_small_strata", cfg.allow_small_strata}};
}

SplitConfig split_config_from_json(const json& j, SplitConfig cfg) {
  if (!j.is_object()) throw ConfigError("split config must be a JSON object");
  read_field(j, "train_fraction", cfg.train_fraction);
  read_field(j, "seed", cfg.seed);
  read_field(j, "stratify_by_label", cfg.stratify_by_label);
  read_field(j, "stratify_by_eye", cfg.stratify_by_eye);
  read_field(j, "allow_small_strata", cfg.allow_small_strata);
  return cfg;
}

DatasetSplit split_dataset(const DatasetManifest& manifest, const SplitConfig& cfg) {
  cfg.validate();
  if (manifest.empty()) throw EmptyInputError("cannot split an empty manifest");

  std::map<std::uint64_t, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    const auto& e = manifest.entries[i];
    std::uint64_t key = 0;
    if (cfg.stratify_by_label) key |= static_cast<std::uint64_t>(e.label) + 1;
    if (cfg.stratify_by_eye) key |= (static_cast<std::uint64_t>(e.eye) + 1) << 8;
    strata[key].push_back(i);
  }

  const Rng root(cfg.seed);
  const bool stratified = cfg.stratify_by_label || cfg.stratify_by_eye;
  std::vector<bool> in_train(manifest.size(), false);
  for (auto& [key, members] : strata) {
    if (stratified && members.size() < 2 && !cfg.allow_small_strata) {
      throw StratificationError("stratum with " + std::to_string(members.size()) +
                                " entr" + (members.size() == 1 ? "y" : "ies") + " cannot be split");
    }
    Rng rng = root.split(key);
    for (std::size_t i = members.size(); i > 1; --i) std::swap(members[i - 1], members[rng.below(i)]);
    const auto n_train = static_cast<std::size_t>(std::lround(cfg.train_fraction * static_cast<double>(members.size())));
    for (std::size_t i = 0; i < n_train; ++i) in_train[members[i]] = true;
  }

  DatasetSplit out;
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    (in_train[i] ? out.train : out.test).entries.push_back(manifest.entries[i]);
  }
  return out;
}

}  // namespace spoofsmith
