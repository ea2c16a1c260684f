#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "spoofsmith/io/checkpoint.hpp"
#include "spoofsmith/io/manifest.hpp"
#include "spoofsmith/models.hpp"
#include "spoofsmith/optim.hpp"
#include "spoofsmith/train/augment.hpp"
#include "spoofsmith/train/config.hpp"

namespace spoofsmith {

struct GanLossRecord {
  std::size_t iter = 0;
  double d_loss = 0.0;
  double g_loss = 0.0;

  bool operator==(const GanLossRecord&) const = default;
};

enum class TargetPhase { DiscriminatorReal, DiscriminatorFake, Generator };

/// Observation points for tests. `on_targets` sees every BCE target tensor
/// right before the loss that uses it.
struct GanHooks {
  std::function<void(TargetPhase, const Tensor<float>&)> on_targets;
};

/// Step-level DCGAN training. Iteration i uses
///   permutation of epoch i / iterations_per_epoch  (reals, no replacement)
///   augmentation stream split(i), latent stream split(i)
/// derived from cfg.seed, so a resumed trainer continues exactly where the
/// original would have. With temporal_resample off, the augmentation and
/// latent streams of iteration 0 are reused every iteration.
class GanTrainer {
 public:
  GanTrainer(std::vector<Tensor<float>> real_images, NetworkSpec generator, NetworkSpec discriminator,
             TrainConfig cfg);

  /// Resumes from checkpoints written by generator_checkpoint() and
  /// discriminator_checkpoint(). Throws ConfigMismatchError if `cfg` would
  /// follow a different trajectory.
  static GanTrainer resume(std::vector<Tensor<float>> real_images, const Checkpoint& generator,
                           const Checkpoint& discriminator, TrainConfig cfg);

  [[nodiscard]] std::size_t iterations_per_epoch() const;
  [[nodiscard]] std::size_t iteration() const { return iteration_; }
  [[nodiscard]] const std::vector<GanLossRecord>& history() const { return history_; }

  GanLossRecord step();
  void run_iterations(std::size_t count);
  void run_epochs(std::size_t epochs);

  NetworkSpec& generator() { return generator_; }
  NetworkSpec& discriminator() { return discriminator_; }
  [[nodiscard]] std::size_t latent_dim() const { return generator_.input_shape().at(0); }
  void set_hooks(GanHooks hooks) { hooks_ = std::move(hooks); }

  /// Latent batch [n, z] drawn from `rng`, rows in order.
  Tensor<float> sample_latent(std::size_t n, Rng rng) const;

  [[nodiscard]] Checkpoint generator_checkpoint() const;
  [[nodiscard]] Checkpoint discriminator_checkpoint() const;
  [[nodiscard]] std::string config_hash() const;

 private:
  std::vector<Tensor<float>> real_;
  NetworkSpec generator_;
  NetworkSpec discriminator_;
  TrainConfig cfg_;
  std::vector<AugmentOp> ops_;
  AdamConfig adam_;
  AdamState<float> g_state_;
  AdamState<float> d_state_;
  std::size_t iteration_ = 0;
  std::vector<GanLossRecord> history_;
  GanHooks hooks_;
  std::vector<std::size_t> epoch_order_;
  std::size_t epoch_order_for_ = static_cast<std::size_t>(-1);
};

struct GanResult {
  Checkpoint generator;
  Checkpoint discriminator;
  std::vector<GanLossRecord> history;
};

/// Decodes `real` at the discriminator's input size and trains for
/// cfg.epochs. Throws InsufficientDataError with fewer images than
/// cfg.real_per_iter.
GanResult train_gan(const DatasetManifest& real, NetworkSpec generator, NetworkSpec discriminator,
                    const TrainConfig& cfg);

/// "iter,d_loss,g_loss" rows.
std::string gan_history_csv(std::span<const GanLossRecord> history);

/// Writes `count` eval-mode generator samples as synth_s<seed>_<index>.png
/// into `out_dir` and returns their manifest (all attack). Image i uses the
/// latent vector drawn from split(i) of `seed`. Count 0 touches nothing.
DatasetManifest synthesize(const Checkpoint& generator, std::size_t count, std::uint64_t seed,
                           const std::filesystem::path& out_dir);

}  // namespace spoofsmith
