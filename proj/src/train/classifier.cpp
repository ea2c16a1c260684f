#include "spoofsmith/train/classifier.hpp"

#include <numeric>

#include "spoofsmith/error.hpp"
#include "spoofsmith/gemm.hpp"
#include "spoofsmith/layers.hpp"
#include "spoofsmith/train/data.hpp"

namespace spoofsmith {

namespace {

constexpr std::uint64_t kShuffleTag = 11;
constexpr std::uint64_t kAugmentTag = 12;

}  // namespace

ClassifierTrainer::ClassifierTrainer(std::vector<Tensor<float>> images, std::vector<Label> labels, NetworkSpec net,
                                     TrainConfig cfg)
    : images_(std::move(images)), labels_(std::move(labels)), net_(std::move(net)), cfg_(std::move(cfg)) {
  cfg_.validate(true);
  if (images_.size() != labels_.size()) throw InvalidArgumentError("images and labels differ in length");
  if (images_.empty()) throw InsufficientDataError("classifier training needs at least one image");
  for (const auto& img : images_) {
    if (img.shape() != net_.input_shape()) {
      throw InvalidShapeError("image shape " + to_string(img.shape()) + " does not match network input " +
                              to_string(net_.input_shape()));
    }
  }
  ops_ = parse_augment_ops(cfg_.augment_ops);
  adam_ = {cfg_.learning_rate, cfg_.beta1, cfg_.beta2, 1e-8};
  state_ = AdamState<float>::for_params(net_.params());
}

ClassifierTrainer ClassifierTrainer::resume(std::vector<Tensor<float>> images, std::vector<Label> labels,
                                            const Checkpoint& checkpoint, TrainConfig cfg) {
  ClassifierTrainer t(std::move(images), std::move(labels), restore_network(checkpoint), std::move(cfg));
  require_config_hash(checkpoint, t.config_hash());
  t.state_ = restore_adam(checkpoint, t.net_);
  t.epoch_ = checkpoint.metadata.value("epoch", std::uint64_t{0});
  return t;
}

std::string ClassifierTrainer::config_hash() const {
  return trajectory_hash(cfg_, {{"trainer", "classifier"}, {"train_count", images_.size()}});
}

double ClassifierTrainer::run_epoch() {
  const std::size_t n = images_.size();
  const Rng root(cfg_.seed);
  const auto order = permutation(n, root.split(kShuffleTag).split(epoch_));
  const Rng aug_root = root.split(kAugmentTag).split(epoch_);
  double total = 0.0;
  for (std::size_t start = 0; start < n; start += cfg_.batch_size) {
    const std::size_t b = std::min(cfg_.batch_size, n - start);
    std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                 order.begin() + static_cast<std::ptrdiff_t>(start + b));
    Tensor<float> x;
    if (ops_.empty()) {
      x = stack_images(images_, idx);
    } else {
      std::vector<Tensor<float>> picked(b);
      for (std::size_t j = 0; j < b; ++j) {
        Rng s = aug_root.split(start + j);
        picked[j] = augment(images_[idx[j]], std::span<const AugmentOp>(ops_), s);
      }
      std::vector<std::size_t> seq(b);
      std::iota(seq.begin(), seq.end(), 0);
      x = stack_images(picked, seq);
    }
    auto target = Tensor<float>::zeros({b, 1});
    for (std::size_t j = 0; j < b; ++j) target.mutable_data()[j] = target_for(labels_[idx[j]]);

    const auto loss = bce_loss(forward(net_, x, Mode::Train), target);
    adam_step(net_.params(), backward(loss), state_, adam_);
    total += loss.item() * static_cast<double>(b);
  }
  ++epoch_;
  return total / static_cast<double>(n);
}

Checkpoint ClassifierTrainer::checkpoint() const {
  Checkpoint c;
  store_network(c, net_);
  store_adam(c, state_);
  c.metadata["role"] = "classifier";
  c.metadata["epoch"] = epoch_;
  c.metadata["config_hash"] = config_hash();
  c.metadata["train_config"] = to_json(cfg_);
  c.rng = {Rng(cfg_.seed).state().key, epoch_};
  return c;
}

ScoredSet score_images(NetworkSpec& net, std::span<const Tensor<float>> images, std::span<const Label> labels,
                       std::size_t batch_size) {
  if (images.size() != labels.size()) throw InvalidArgumentError("images and labels differ in length");
  if (batch_size == 0) throw InvalidArgumentError("batch_size must be positive");
  ScoredSet out;
  out.reserve(images.size());
  for (std::size_t start = 0; start < images.size(); start += batch_size) {
    const std::size_t b = std::min(batch_size, images.size() - start);
    std::vector<std::size_t> idx(b);
    std::iota(idx.begin(), idx.end(), start);
    const auto scores = forward(net, stack_images(images, idx), Mode::Eval);
    for (std::size_t j = 0; j < b; ++j) out.push_back({static_cast<double>(scores.data()[j]), labels[start + j]});
  }
  return out;
}

ClassifierResult train_classifier(const DatasetManifest& labeled, NetworkSpec net, const TrainConfig& cfg,
                                  const SplitConfig& split_cfg, double threshold) {
  cfg.validate(true);
  if (labeled.count(Label::BonaFide) == 0 || labeled.count(Label::Attack) == 0) {
    throw InsufficientDataError("classifier training needs both bona-fide and attack samples");
  }
  ClassifierResult result;
  result.split = split_dataset(labeled, split_cfg);
  const ImageShape shape = image_shape_of(net);

  auto labels_of = [](const DatasetManifest& m) {
    std::vector<Label> out;
    for (const auto& e : m.entries) out.push_back(e.label);
    return out;
  };
  const auto test_images = load_images(result.split.test, shape);
  const auto test_labels = labels_of(result.split.test);
  if (test_images.empty()) throw InsufficientDataError("the split left no test samples");

  ClassifierTrainer trainer(load_images(result.split.train, shape), labels_of(result.split.train), std::move(net), cfg);
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    const double loss = trainer.run_epoch();
    const double acc = confusion(score_images(trainer.network(), test_images, test_labels), threshold).accuracy;
    result.history.push_back({trainer.epoch(), loss, acc});
  }
  result.report = evaluate(score_images(trainer.network(), test_images, test_labels), threshold);
  result.checkpoint = trainer.checkpoint();
  result.checkpoint.metadata["split_config"] = to_json(split_cfg);
  return result;
}

std::string classifier_history_csv(std::span<const ClassifierEpoch> history) {
  std::string out = "epoch,train_loss,test_acc\n";
  for (const auto& r : history) {
    out += std::to_string(r.epoch) + "," + format_double(r.train_loss) + "," + format_double(r.test_acc) + "\n";
  }
  return out;
}

}  // namespace spoofsmith
