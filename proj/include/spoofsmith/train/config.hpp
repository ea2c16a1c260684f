#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "spoofsmith/io/manifest.hpp"

namespace spoofsmith {

struct TrainConfig {
  double learning_rate = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  std::size_t batch_size = 32;
  std::size_t epochs = 1;
  std::uint64_t seed = 0;
  /// Real images drawn per GAN iteration; also the GAN batch size.
  std::size_t real_per_iter = 200;
  std::size_t target_synthetic = 10000;
  std::vector<std::string> augment_ops;
  /// Redraw augmentation parameters and latent vectors every iteration.
  bool temporal_resample = true;

  static TrainConfig gan_defaults();
  static TrainConfig classifier_defaults();

  /// Throws ConfigError on out-of-range fields. Classifier runs may use
  /// zero epochs to score an untrained network.
  void validate(bool allow_zero_epochs = false) const;
};

nlohmann::json to_json(const TrainConfig& cfg);
/// Missing keys keep the values already in `base`.
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base);

/// Hash over every field that shapes the optimization trajectory (all but
/// `epochs` and `target_synthetic`).
std::string trajectory_hash(const TrainConfig& cfg, const nlohmann::json& extra = nlohmann::json::object());

struct SplitConfig {
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
  bool stratify_by_label = true;
  /// Additionally stratify by left/right eye.
  bool stratify_by_eye = false;
  /// Permit strata with fewer than two entries (they go wholly to one side).
  bool allow_small_strata = false;

  void validate() const;
};

nlohmann::json to_json(const SplitConfig& cfg);
SplitConfig split_config_from_json(const nlohmann::json& j, SplitConfig base);

struct DatasetSplit {
  DatasetManifest train;
  DatasetManifest test;
};

/// Per stratum (or over the whole manifest when unstratified): a seeded
/// shuffle, then the first lround(train_fraction * n) entries go to train.
/// Entry order inside each side follows the original manifest order.
DatasetSplit split_dataset(const DatasetManifest& manifest, const SplitConfig& cfg);

}  // namespace spoofsmith
