#include "spoofsmith/train/gan.hpp"

#include <cstdio>
#include <cstring>
#include <numeric>

#include "spoofsmith/error.hpp"
#include "spoofsmith/eval.hpp"
#include "spoofsmith/gemm.hpp"
#include "spoofsmith/io/image.hpp"
#include "spoofsmith/layers.hpp"
#include "spoofsmith/ops.hpp"
#include "spoofsmith/train/data.hpp"

namespace spoofsmith {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kPermutationTag = 1;
constexpr std::uint64_t kAugmentTag = 2;
constexpr std::uint64_t kLatentTag = 3;
constexpr std::size_t kEvalChunk = 64;

GradientMap<float> restrict_to(const GradientMap<float>& all, const std::map<std::string, Tensor<float>>& params) {
  GradientMap<float> out;
  for (const auto& [name, p] : params) {
    if (const auto* g = all.find(p.id())) out.insert(p.id(), *g);
  }
  return out;
}

}  // namespace

GanTrainer::GanTrainer(std::vector<Tensor<float>> real_images, NetworkSpec generator, NetworkSpec discriminator,
                       TrainConfig cfg)
    : real_(std::move(real_images)),
      generator_(std::move(generator)),
      discriminator_(std::move(discriminator)),
      cfg_(std::move(cfg)) {
  cfg_.validate();
  check_gan_duality(generator_, discriminator_);
  if (generator_.input_shape().size() != 1) throw InvalidShapeError("generator input must be a latent vector");
  if (real_.size() < cfg_.real_per_iter) {
    throw InsufficientDataError("GAN training needs at least " + std::to_string(cfg_.real_per_iter) +
                                " real images, got " + std::to_string(real_.size()));
  }
  for (const auto& img : real_) {
    if (img.shape() != discriminator_.input_shape()) {
      throw InvalidShapeError("real image shape " + to_string(img.shape()) + " does not match discriminator input " +
                              to_string(discriminator_.input_shape()));
    }
  }
  ops_ = parse_augment_ops(cfg_.augment_ops);
  adam_ = {cfg_.learning_rate, cfg_.beta1, cfg_.beta2, 1e-8};
  g_state_ = AdamState<float>::for_params(generator_.params());
  d_state_ = AdamState<float>::for_params(discriminator_.params());
}

GanTrainer GanTrainer::resume(std::vector<Tensor<float>> real_images, const Checkpoint& generator,
                              const Checkpoint& discriminator, TrainConfig cfg) {
  GanTrainer t(std::move(real_images), restore_network(generator), restore_network(discriminator), std::move(cfg));
  const std::string hash = t.config_hash();
  require_config_hash(generator, hash);
  require_config_hash(discriminator, hash);
  const auto g_iter = generator.metadata.value("iteration", std::uint64_t{0});
  const auto d_iter = discriminator.metadata.value("iteration", std::uint64_t{0});
  if (g_iter != d_iter) throw InconsistentStateError("generator and discriminator checkpoints are from different iterations");
  t.g_state_ = restore_adam(generator, t.generator_);
  t.d_state_ = restore_adam(discriminator, t.discriminator_);
  t.iteration_ = g_iter;
  return t;
}

std::size_t GanTrainer::iterations_per_epoch() const { return real_.size() / cfg_.real_per_iter; }

std::string GanTrainer::config_hash() const {
  return trajectory_hash(cfg_, {{"trainer", "gan"}, {"real_count", real_.size()}});
}

Tensor<float> GanTrainer::sample_latent(std::size_t n, Rng rng) const {
  auto z = Tensor<float>::zeros({n, latent_dim()});
  for (float& v : z.mutable_data()) v = static_cast<float>(rng.normal());
  return z;
}

GanLossRecord GanTrainer::step() {
  const std::size_t batch = cfg_.real_per_iter;
  const std::size_t per_epoch = iterations_per_epoch();
  const std::size_t epoch = iteration_ / per_epoch;
  const std::size_t pos = iteration_ % per_epoch;
  const Rng root(cfg_.seed);
  if (epoch_order_for_ != epoch) {
    epoch_order_ = permutation(real_.size(), root.split(kPermutationTag).split(epoch));
    epoch_order_for_ = epoch;
  }
  const std::uint64_t stream = cfg_.temporal_resample ? iteration_ : 0;

  const Rng aug_root = root.split(kAugmentTag).split(stream);
  std::vector<Tensor<float>> picked(batch);
  const int workers = kernels::worker_count();
#pragma omp parallel for num_threads(workers) if (workers > 1)
  for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(batch); ++j) {
    Rng s = aug_root.split(static_cast<std::uint64_t>(j));
    picked[j] = augment(real_[epoch_order_[pos * batch + j]], std::span<const AugmentOp>(ops_), s);
  }
  std::vector<std::size_t> order(batch);
  std::iota(order.begin(), order.end(), 0);
  const auto real = stack_images(picked, order);
  const auto z = sample_latent(batch, root.split(kLatentTag).split(stream));

  const auto fake = forward(generator_, z, Mode::Train);

  auto notify = [&](TargetPhase phase, const Tensor<float>& t) {
    if (hooks_.on_targets) hooks_.on_targets(phase, t);
  };

  // Discriminator: real -> 1, fake -> 0.
  const auto ones = target_column(batch, 1.0f);
  const auto zeros = target_column(batch, 0.0f);
  notify(TargetPhase::DiscriminatorReal, ones);
  const auto loss_real = bce_loss(forward(discriminator_, real, Mode::Train), ones);
  notify(TargetPhase::DiscriminatorFake, zeros);
  const auto loss_fake = bce_loss(forward(discriminator_, fake.detach(), Mode::Train), zeros);
  const auto d_loss = add(loss_real, loss_fake);
  adam_step(discriminator_.params(), restrict_to(backward(d_loss), discriminator_.params()), d_state_, adam_);

  // Generator: fake -> 1 through the updated discriminator.
  notify(TargetPhase::Generator, ones);
  const auto g_loss = bce_loss(forward(discriminator_, fake, Mode::Train), ones);
  adam_step(generator_.params(), restrict_to(backward(g_loss), generator_.params()), g_state_, adam_);

  GanLossRecord rec{iteration_, d_loss.item(), g_loss.item()};
  history_.push_back(rec);
  ++iteration_;
  return rec;
}

void GanTrainer::run_iterations(std::size_t count) {
  for (std::size_t i = 0; i < count; ++i) step();
}

void GanTrainer::run_epochs(std::size_t epochs) { run_iterations(epochs * iterations_per_epoch()); }

Checkpoint GanTrainer::generator_checkpoint() const {
  Checkpoint c;
  store_network(c, generator_);
  store_adam(c, g_state_);
  c.metadata["role"] = "generator";
  c.metadata["iteration"] = iteration_;
  c.metadata["config_hash"] = config_hash();
  c.metadata["train_config"] = to_json(cfg_);
  c.rng = {Rng(cfg_.seed).state().key, iteration_};
  return c;
}

Checkpoint GanTrainer::discriminator_checkpoint() const {
  Checkpoint c;
  store_network(c, discriminator_);
  store_adam(c, d_state_);
  c.metadata["role"] = "discriminator";
  c.metadata["iteration"] = iteration_;
  c.metadata["config_hash"] = config_hash();
  c.metadata["train_config"] = to_json(cfg_);
  c.rng = {Rng(cfg_.seed).state().key, iteration_};
  return c;
}

GanResult train_gan(const DatasetManifest& real, NetworkSpec generator, NetworkSpec discriminator,
                    const TrainConfig& cfg) {
  cfg.validate();
  if (real.size() < cfg.real_per_iter) {
    throw InsufficientDataError("GAN training needs at least " + std::to_string(cfg.real_per_iter) +
                                " real images, got " + std::to_string(real.size()));
  }
  const ImageShape shape = image_shape_of(discriminator);
  GanTrainer trainer(load_images(real, shape), std::move(generator), std::move(discriminator), cfg);
  trainer.run_epochs(cfg.epochs);
  return {trainer.generator_checkpoint(), trainer.discriminator_checkpoint(), trainer.history()};
}

std::string gan_history_csv(std::span<const GanLossRecord> history) {
  std::string out = "iter,d_loss,g_loss\n";
  for (const auto& r : history) {
    out += std::to_string(r.iter) + "," + format_double(r.d_loss) + "," + format_double(r.g_loss) + "\n";
  }
  return out;
}

DatasetManifest synthesize(const Checkpoint& checkpoint, std::size_t count, std::uint64_t seed, const fs::path& out_dir) {
  NetworkSpec generator = restore_network(checkpoint);
  if (generator.input_shape().size() != 1) throw InvalidShapeError("checkpoint does not hold a generator");
  DatasetManifest manifest;
  if (count == 0) return manifest;

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create directory " + out_dir.string() + ": " + ec.message());

  const std::size_t z_dim = generator.input_shape()[0];
  const Rng root(seed);
  for (std::size_t start = 0; start < count; start += kEvalChunk) {
    const std::size_t n = std::min(kEvalChunk, count - start);
    auto z = Tensor<float>::zeros({n, z_dim});
    auto zd = z.mutable_data();
    for (std::size_t i = 0; i < n; ++i) {
      Rng rng = root.split(start + i);
      for (std::size_t k = 0; k < z_dim; ++k) zd[i * z_dim + k] = static_cast<float>(rng.normal());
    }
    const auto images = forward(generator, z, Mode::Eval);
    const Shape per(images.shape().begin() + 1, images.shape().end());
    const std::size_t stride = images.numel() / n;
    for (std::size_t i = 0; i < n; ++i) {
      auto img = Tensor<float>::zeros(per);
      std::memcpy(img.mutable_data().data(), images.data().data() + i * stride, stride * sizeof(float));
      char name[64];
      std::snprintf(name, sizeof name, "synth_s%llu_%06zu.png", static_cast<unsigned long long>(seed), start + i);
      encode_image(img, out_dir / name);
      ManifestEntry entry;
      entry.path = name;
      entry.label = Label::Attack;
      entry.base_dir = out_dir;
      manifest.entries.push_back(std::move(entry));
    }
  }
  return manifest;
}

}  // namespace spoofsmith
