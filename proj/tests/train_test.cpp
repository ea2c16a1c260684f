#include <gtest/gtest.h>

#include <cstring>

#include "spoofsmith/io/blob.hpp"
#include "spoofsmith/io/toy_corpus.hpp"
#include "spoofsmith/models.hpp"
#include "spoofsmith/train/classifier.hpp"
#include "spoofsmith/train/data.hpp"
#include "spoofsmith/train/gan.hpp"
#include "test_support.hpp"

namespace spoofsmith {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;

std::vector<Tensor<float>> toy_images(std::size_t n, std::size_t res, std::uint64_t seed) {
  std::vector<Tensor<float>> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(render_toy_eye(res, Rng(seed).split(i).next_u64(), i % 2 ? EyeSide::Right : EyeSide::Left));
  }
  return out;
}

TrainConfig small_gan_config(std::uint64_t seed) {
  auto cfg = TrainConfig::gan_defaults();
  cfg.real_per_iter = 8;
  cfg.seed = seed;
  return cfg;
}

struct GanPair {
  NetworkSpec g;
  NetworkSpec d;
};

GanPair small_gan(std::size_t res, std::uint64_t seed) {
  return {build_dcgan_generator<float>({16}, {3, res, res}, 0.125, seed),
          build_dcgan_discriminator<float>({3, res, res}, 0.125, seed + 1)};
}

bool same_params(const NetworkSpec& a, const NetworkSpec& b) {
  for (const auto* maps : {&a.params(), &a.buffers()}) {
    const auto& other = maps == &a.params() ? b.params() : b.buffers();
    if (maps->size() != other.size()) return false;
    for (const auto& [name, t] : *maps) {
      const auto& u = other.at(name);
      if (t.shape() != u.shape() || std::memcmp(t.data().data(), u.data().data(), t.numel() * sizeof(float)) != 0) {
        return false;
      }
    }
  }
  return true;
}

Checkpoint reload(const Checkpoint& c) { return decode_checkpoint(encode_checkpoint(c)); }

TEST(GanTraining, OneEpochIsReproducible) {
  const auto real = toy_images(32, 16, 1);
  auto [g1, d1] = small_gan(16, 5);
  auto [g2, d2] = small_gan(16, 5);
  GanTrainer a(real, g1, d1, small_gan_config(7));
  GanTrainer b(real, g2, d2, small_gan_config(7));
  a.run_epochs(1);
  b.run_epochs(1);
  ASSERT_EQ(a.history().size(), 4u);
  EXPECT_EQ(a.history(), b.history());
  EXPECT_TRUE(same_params(a.generator(), b.generator()));
  EXPECT_TRUE(same_params(a.discriminator(), b.discriminator()));
  for (const auto& rec : a.history()) {
    EXPECT_TRUE(std::isfinite(rec.d_loss));
    EXPECT_TRUE(std::isfinite(rec.g_loss));
  }
}

TEST(GanTraining, TargetsAreOneForRealZeroForFakeOneForGenerator) {
  const auto real = toy_images(16, 16, 2);
  auto [g, d] = small_gan(16, 1);
  GanTrainer t(real, g, d, small_gan_config(3));
  std::map<TargetPhase, std::size_t> seen;
  t.set_hooks({[&](TargetPhase phase, const Tensor<float>& target) {
    ++seen[phase];
    const float expect = phase == TargetPhase::DiscriminatorFake ? 0.0f : 1.0f;
    EXPECT_EQ(target.shape(), (Shape{8, 1}));
    for (float v : target.data()) EXPECT_EQ(v, expect);
  }});
  t.run_iterations(3);
  EXPECT_EQ(seen[TargetPhase::DiscriminatorReal], 3u);
  EXPECT_EQ(seen[TargetPhase::DiscriminatorFake], 3u);
  EXPECT_EQ(seen[TargetPhase::Generator], 3u);
}

TEST(GanTraining, TooFewRealImages) {
  auto [g, d] = small_gan(16, 1);
  EXPECT_THROW(GanTrainer(toy_images(7, 16, 1), g, d, small_gan_config(1)), InsufficientDataError);
}

TEST(GanTraining, MismatchedPairRejected) {
  auto g = build_dcgan_generator<float>({16}, {3, 32, 32}, 0.125);
  auto d = build_dcgan_discriminator<float>({3, 16, 16}, 0.125);
  EXPECT_THROW(GanTrainer(toy_images(8, 16, 1), g, d, small_gan_config(1)), InvalidShapeError);
}

TEST(GanTraining, ResumeFiveAndFiveEqualsTenStraight) {
  const auto real = toy_images(24, 16, 3);
  auto cfg = small_gan_config(11);
  cfg.augment_ops = {"hflip", "rotate", "crop", "brightness"};
  auto [g1, d1] = small_gan(16, 2);
  GanTrainer straight(real, g1, d1, cfg);
  straight.run_iterations(10);

  auto [g2, d2] = small_gan(16, 2);
  GanTrainer first(real, g2, d2, cfg);
  first.run_iterations(5);
  auto resumed = GanTrainer::resume(real, reload(first.generator_checkpoint()), reload(first.discriminator_checkpoint()), cfg);
  EXPECT_EQ(resumed.iteration(), 5u);
  resumed.run_iterations(5);

  EXPECT_TRUE(same_params(straight.generator(), resumed.generator()));
  EXPECT_TRUE(same_params(straight.discriminator(), resumed.discriminator()));
  EXPECT_EQ(encode_checkpoint(straight.generator_checkpoint()), encode_checkpoint(resumed.generator_checkpoint()));
  EXPECT_EQ(encode_checkpoint(straight.discriminator_checkpoint()),
            encode_checkpoint(resumed.discriminator_checkpoint()));
  const std::vector<GanLossRecord> tail(straight.history().begin() + 5, straight.history().end());
  EXPECT_EQ(resumed.history(), tail);
}

TEST(GanTraining, ResumeWithDifferentConfigIsRejected) {
  const auto real = toy_images(16, 16, 3);
  auto [g, d] = small_gan(16, 2);
  GanTrainer t(real, g, d, small_gan_config(1));
  t.run_iterations(1);
  auto other = small_gan_config(1);
  other.learning_rate = 1e-3;
  EXPECT_THROW(GanTrainer::resume(real, t.generator_checkpoint(), t.discriminator_checkpoint(), other),
               ConfigMismatchError);
  auto longer = small_gan_config(1);
  longer.epochs = 50;
  EXPECT_NO_THROW(GanTrainer::resume(real, t.generator_checkpoint(), t.discriminator_checkpoint(), longer));
}

TEST(GanTraining, TemporalResampleChangesTrajectory) {
  const auto real = toy_images(16, 16, 4);
  auto with = small_gan_config(5);
  auto without = with;
  without.temporal_resample = false;
  auto [g1, d1] = small_gan(16, 3);
  auto [g2, d2] = small_gan(16, 3);
  GanTrainer a(real, g1, d1, with);
  GanTrainer b(real, g2, d2, without);
  a.run_iterations(3);
  b.run_iterations(3);
  EXPECT_EQ(a.history()[0], b.history()[0]);
  EXPECT_NE(a.history()[2], b.history()[2]);
}

/// Mean absolute difference between the per-pixel mean of `real` and of 64
/// eval-mode generator samples.
double mean_image_gap(GanTrainer& t, const std::vector<Tensor<float>>& real) {
  const std::size_t n = 64;
  const auto fake = forward(t.generator(), t.sample_latent(n, Rng(5)), Mode::Eval);
  const std::size_t px = real.front().numel();
  double gap = 0;
  for (std::size_t p = 0; p < px; ++p) {
    double rm = 0, fm = 0;
    for (const auto& r : real) rm += r.data()[p];
    for (std::size_t i = 0; i < n; ++i) fm += fake.data()[i * px + p];
    gap += std::abs(rm / double(real.size()) - fm / double(n));
  }
  return gap / double(px);
}

TEST(GanTraining, GeneratorMovesTowardRealImages) {
  const auto real = toy_images(64, 32, 5);
  const auto held_out = toy_images(32, 32, 6);
  auto [g, d] = small_gan(32, 8);
  auto cfg = small_gan_config(9);
  cfg.real_per_iter = 16;
  GanTrainer t(real, g, d, cfg);
  const double before = mean_image_gap(t, held_out);
  t.run_epochs(30);
  EXPECT_LT(mean_image_gap(t, held_out), 0.9 * before);
  const auto samples = forward(t.generator(), t.sample_latent(4, Rng(1)), Mode::Eval);
  for (float v : samples.data()) {
    EXPECT_GE(v, -1.0f);
    EXPECT_LE(v, 1.0f);
  }
}

class SynthesizeTest : public ::testing::Test {
 protected:
  void SetUp() override {
    auto [g, d] = small_gan(16, 4);
    GanTrainer t(toy_images(16, 16, 7), g, d, small_gan_config(2));
    t.run_iterations(2);
    generator_ = t.generator_checkpoint();
  }
  Checkpoint generator_;
};

TEST_F(SynthesizeTest, CountAndLabels) {
  TempDir dir;
  const auto m = synthesize(generator_, 7, 1, dir.path());
  ASSERT_EQ(m.size(), 7u);
  EXPECT_EQ(m.count(Label::Attack), 7u);
  for (const auto& e : m.entries) EXPECT_TRUE(fs::exists(e.resolved_path()));
}

TEST_F(SynthesizeTest, ZeroCountWritesNothing) {
  TempDir dir;
  EXPECT_TRUE(synthesize(generator_, 0, 1, dir / "none").empty());
  EXPECT_FALSE(fs::exists(dir / "none"));
}

TEST_F(SynthesizeTest, SameSeedSameFiles) {
  TempDir dir;
  const auto a = synthesize(generator_, 4, 9, dir / "a");
  const auto b = synthesize(generator_, 4, 9, dir / "b");
  const auto c = synthesize(generator_, 4, 10, dir / "c");
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(read_file_bytes(a.entries[i].resolved_path()), read_file_bytes(b.entries[i].resolved_path()));
    EXPECT_NE(read_file_bytes(a.entries[i].resolved_path()), read_file_bytes(c.entries[i].resolved_path()));
  }
  // Image i depends only on its own latent vector.
  const auto longer = synthesize(generator_, 6, 9, dir / "d");
  EXPECT_EQ(read_file_bytes(a.entries[3].resolved_path()), read_file_bytes(longer.entries[3].resolved_path()));
}

TEST_F(SynthesizeTest, TenThousandEntries) {
  TempDir dir;
  const auto m = synthesize(generator_, 10000, 3, dir.path());
  EXPECT_EQ(m.size(), 10000u);
  EXPECT_EQ(m.count(Label::Attack), 10000u);
}

/// Balanced labeled manifest: toy reals plus samples from a barely trained
/// generator, all at 32 px.
DatasetManifest labeled_corpus(const fs::path& dir, std::size_t per_class) {
  auto real = gen_toy_corpus(per_class, 32, 1, dir / "real");
  auto [g, d] = small_gan(32, 3);
  GanTrainer t(toy_images(16, 32, 2), g, d, small_gan_config(4));
  t.run_iterations(2);
  auto fake = synthesize(t.generator_checkpoint(), per_class, 5, dir / "fake");
  return merge_manifests(real, fake);
}

TrainConfig small_classifier_config(std::size_t epochs) {
  auto cfg = TrainConfig::classifier_defaults();
  cfg.epochs = epochs;
  cfg.batch_size = 8;
  cfg.seed = 6;
  return cfg;
}

NetworkSpec small_vgg(std::uint64_t seed) { return build_modified_vggnet<float>({3, 32, 32}, 0.0625, 16, seed); }

TEST(ClassifierTraining, UntrainedNetworkIsNearChance) {
  TempDir dir;
  const auto labeled = labeled_corpus(dir.path(), 40);
  const auto r = train_classifier(labeled, small_vgg(1), small_classifier_config(0), SplitConfig{});
  EXPECT_EQ(r.report.confusion.total(), 16u);
  EXPECT_GE(r.report.accuracy, 0.3);
  EXPECT_LE(r.report.accuracy, 0.7);
  EXPECT_TRUE(r.history.empty());
}

TEST(ClassifierTraining, SameSeedSameParameters) {
  TempDir dir;
  const auto labeled = labeled_corpus(dir.path(), 24);
  const auto a = train_classifier(labeled, small_vgg(2), small_classifier_config(2), SplitConfig{});
  const auto b = train_classifier(labeled, small_vgg(2), small_classifier_config(2), SplitConfig{});
  EXPECT_EQ(encode_checkpoint(a.checkpoint), encode_checkpoint(b.checkpoint));
  EXPECT_EQ(a.report, b.report);
  EXPECT_EQ(a.history, b.history);
  ASSERT_EQ(a.history.size(), 2u);
}

TEST(ClassifierTraining, SingleLabelIsInsufficient) {
  TempDir dir;
  const auto real = gen_toy_corpus(20, 32, 1, dir.path());
  EXPECT_THROW(train_classifier(real, small_vgg(1), small_classifier_config(1), SplitConfig{}), InsufficientDataError);
}

TEST(ClassifierTraining, ResumeEqualsStraightRun) {
  const auto reals = toy_images(20, 32, 8);
  std::vector<Tensor<float>> images;
  std::vector<Label> labels;
  for (std::size_t i = 0; i < reals.size(); ++i) {
    images.push_back(reals[i]);
    labels.push_back(Label::BonaFide);
    images.push_back(Tensor<float>::create({3, 32, 32}, Uniform{-1, 1}, i));
    labels.push_back(Label::Attack);
  }
  auto cfg = small_classifier_config(4);
  cfg.augment_ops = {"hflip", "brightness"};
  ClassifierTrainer straight(images, labels, small_vgg(3), cfg);
  for (int e = 0; e < 4; ++e) straight.run_epoch();

  ClassifierTrainer first(images, labels, small_vgg(3), cfg);
  first.run_epoch();
  first.run_epoch();
  auto resumed = ClassifierTrainer::resume(images, labels, reload(first.checkpoint()), cfg);
  EXPECT_EQ(resumed.epoch(), 2u);
  resumed.run_epoch();
  resumed.run_epoch();
  EXPECT_TRUE(same_params(straight.network(), resumed.network()));
  EXPECT_EQ(encode_checkpoint(straight.checkpoint()), encode_checkpoint(resumed.checkpoint()));
}

TEST(ClassifierTraining, HistoryCsvHeaders) {
  const std::vector<ClassifierEpoch> h{{1, 0.5, 0.75}};
  EXPECT_EQ(classifier_history_csv(h).substr(0, 26), "epoch,train_loss,test_acc\n");
  const std::vector<GanLossRecord> g{{1, 1.0, 2.0}};
  EXPECT_EQ(gan_history_csv(g).substr(0, 19), "iter,d_loss,g_loss\n");
}

}  // namespace
}  // namespace spoofsmith
