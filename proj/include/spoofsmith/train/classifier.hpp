#pragma once

#include <span>
#include <vector>

#include "spoofsmith/eval.hpp"
#include "spoofsmith/io/checkpoint.hpp"
#include "spoofsmith/models.hpp"
#include "spoofsmith/optim.hpp"
#include "spoofsmith/train/augment.hpp"
#include "spoofsmith/train/config.hpp"

namespace spoofsmith {

struct ClassifierEpoch {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double test_acc = 0.0;

  bool operator==(const ClassifierEpoch&) const = default;
};

/// Minibatch BCE training with Adam. Epoch e visits the training images in
/// a permutation drawn from split(e) of cfg.seed; the last batch may be
/// short.
class ClassifierTrainer {
 public:
  ClassifierTrainer(std::vector<Tensor<float>> images, std::vector<Label> labels, NetworkSpec net, TrainConfig cfg);

  static ClassifierTrainer resume(std::vector<Tensor<float>> images, std::vector<Label> labels,
                                  const Checkpoint& checkpoint, TrainConfig cfg);

  /// Mean per-sample training loss of the epoch.
  double run_epoch();
  [[nodiscard]] std::size_t epoch() const { return epoch_; }
  NetworkSpec& network() { return net_; }

  [[nodiscard]] Checkpoint checkpoint() const;
  [[nodiscard]] std::string config_hash() const;

 private:
  std::vector<Tensor<float>> images_;
  std::vector<Label> labels_;
  NetworkSpec net_;
  TrainConfig cfg_;
  std::vector<AugmentOp> ops_;
  AdamConfig adam_;
  AdamState<float> state_;
  std::size_t epoch_ = 0;
};

/// Eval-mode sigmoid scores in input order, batched.
ScoredSet score_images(NetworkSpec& net, std::span<const Tensor<float>> images, std::span<const Label> labels,
                       std::size_t batch_size = 32);

struct ClassifierResult {
  Checkpoint checkpoint;
  EvalReport report;
  std::vector<ClassifierEpoch> history;
  DatasetSplit split;
};

/// Splits `labeled`, trains on the train side for cfg.epochs (0 allowed) and
/// evaluates on the test side. Throws InsufficientDataError unless both
/// labels are present.
ClassifierResult train_classifier(const DatasetManifest& labeled, NetworkSpec net, const TrainConfig& cfg,
                                  const SplitConfig& split, double threshold = 0.5);

/// "epoch,train_loss,test_acc" rows.
std::string classifier_history_csv(std::span<const ClassifierEpoch> history);

}  // namespace spoofsmith
