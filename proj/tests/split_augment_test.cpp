#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "spoofsmith/train/augment.hpp"
#include "spoofsmith/train/config.hpp"

namespace spoofsmith {
namespace {

DatasetManifest synthetic_manifest(std::size_t bona_fide, std::size_t attack) {
  DatasetManifest m;
  for (std::size_t i = 0; i < bona_fide + attack; ++i) {
    ManifestEntry e;
    e.path = "img_" + std::to_string(i) + ".png";
    e.label = i < bona_fide ? Label::BonaFide : Label::Attack;
    e.eye = i % 2 ? EyeSide::Right : EyeSide::Left;
    m.entries.push_back(e);
  }
  return m;
}

std::vector<std::string> paths(const DatasetManifest& m) {
  std::vector<std::string> out;
  for (const auto& e : m.entries) out.push_back(e.path);
  return out;
}

void expect_partition(const DatasetManifest& all, const DatasetSplit& s) {
  std::multiset<std::string> joined;
  for (const auto& p : paths(s.train)) joined.insert(p);
  for (const auto& p : paths(s.test)) joined.insert(p);
  const auto original = paths(all);
  EXPECT_EQ(joined, std::multiset<std::string>(original.begin(), original.end()));
}

TEST(Split, EightyTwentyOfTwoHundred) {
  const auto m = synthetic_manifest(120, 80);
  SplitConfig cfg;
  cfg.stratify_by_label = false;
  const auto s = split_dataset(m, cfg);
  EXPECT_EQ(s.train.size(), 160u);
  EXPECT_EQ(s.test.size(), 40u);
  expect_partition(m, s);
}

TEST(Split, StratifiedPerLabel) {
  const auto m = synthetic_manifest(100, 100);
  const auto s = split_dataset(m, SplitConfig{});
  EXPECT_EQ(s.train.count(Label::BonaFide), 80u);
  EXPECT_EQ(s.train.count(Label::Attack), 80u);
  EXPECT_EQ(s.test.count(Label::BonaFide), 20u);
  EXPECT_EQ(s.test.count(Label::Attack), 20u);
}

TEST(Split, EyeStratificationBalancesSides) {
  const auto m = synthetic_manifest(100, 100);
  SplitConfig cfg;
  cfg.stratify_by_eye = true;
  const auto s = split_dataset(m, cfg);
  std::size_t left = 0;
  for (const auto& e : s.test.entries) left += e.eye == EyeSide::Left;
  EXPECT_EQ(left, s.test.size() / 2);
}

TEST(Split, SeedDeterminesPartition) {
  const auto m = synthetic_manifest(100, 100);
  SplitConfig a;
  a.seed = 5;
  SplitConfig b = a;
  b.seed = 6;
  EXPECT_EQ(paths(split_dataset(m, a).test), paths(split_dataset(m, a).test));
  const auto other = split_dataset(m, b);
  EXPECT_NE(paths(split_dataset(m, a).test), paths(other.test));
  EXPECT_EQ(other.test.size(), 40u);
}

TEST(Split, SizeRuleHoldsForEveryN) {
  for (std::size_t n = 1; n <= 1000; ++n) {
    const auto m = synthetic_manifest((n + 1) / 2, n / 2);
    SplitConfig flat;
    flat.stratify_by_label = false;
    flat.seed = n;
    const auto s = split_dataset(m, flat);
    ASSERT_EQ(s.train.size(), static_cast<std::size_t>(std::lround(0.8 * double(n)))) << n;
    ASSERT_EQ(s.train.size() + s.test.size(), n);
    expect_partition(m, s);

    SplitConfig strat;
    strat.seed = n;
    strat.allow_small_strata = n < 4;
    const auto t = split_dataset(m, strat);
    const std::size_t bf = (n + 1) / 2, at = n / 2;
    const auto expect_bf = static_cast<std::size_t>(std::lround(0.8 * double(bf)));
    const auto expect_at = static_cast<std::size_t>(std::lround(0.8 * double(at)));
    ASSERT_EQ(t.train.count(Label::BonaFide), expect_bf) << n;
    ASSERT_EQ(t.train.count(Label::Attack), expect_at) << n;
    ASSERT_EQ(t.train.size() + t.test.size(), n);
    expect_partition(m, t);
    EXPECT_EQ(paths(split_dataset(m, strat).train), paths(t.train));
  }
}

TEST(Split, TinyStratumNeedsFallbackFlag) {
  const auto m = synthetic_manifest(10, 1);
  EXPECT_THROW(split_dataset(m, SplitConfig{}), StratificationError);
  SplitConfig cfg;
  cfg.allow_small_strata = true;
  EXPECT_EQ(split_dataset(m, cfg).train.size() + split_dataset(m, cfg).test.size(), 11u);
  EXPECT_THROW(split_dataset(DatasetManifest{}, SplitConfig{}), EmptyInputError);
}

TEST(Split, FractionOutOfRangeIsConfigError) {
  SplitConfig cfg;
  cfg.train_fraction = 1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Augment, ForcedFlipTwiceIsIdentity) {
  const auto img = Tensor<float>::create({3, 8, 8}, Uniform{-1, 1}, 2);
  const std::vector<std::string> ops{"hflip:1"};
  Rng rng(4);
  const auto twice = augment(augment(img, ops, rng), ops, rng);
  EXPECT_EQ(std::vector<float>(twice.data().begin(), twice.data().end()),
            std::vector<float>(img.data().begin(), img.data().end()));
}

TEST(Augment, FlipOfTwoByTwo) {
  const auto f = hflip(Tensor<float>({1, 2, 2}, {1, 2, 3, 4}));
  EXPECT_EQ(std::vector<float>(f.data().begin(), f.data().end()), (std::vector<float>{2, 1, 4, 3}));
}

TEST(Augment, UnknownOpIsConfigError) {
  const std::vector<std::string> ops{"shear"};
  EXPECT_THROW(parse_augment_ops(ops), ConfigError);
  const std::vector<std::string> bad_p{"rotate:2"};
  EXPECT_THROW(parse_augment_ops(bad_p), ConfigError);
}

TEST(Augment, ZeroRotationAndFullCropAreIdentity) {
  const auto img = Tensor<float>::create({1, 6, 6}, Uniform{-1, 1}, 8);
  const auto r = rotate(img, 0.0);
  const auto c = crop_resize(img, 0, 0, 6, 6);
  for (std::size_t i = 0; i < img.numel(); ++i) {
    EXPECT_NEAR(r.data()[i], img.data()[i], 1e-6);
    EXPECT_NEAR(c.data()[i], img.data()[i], 1e-6);
  }
}

TEST(Augment, PreservesShapeAndRange) {
  const std::vector<std::string> ops{"hflip", "rotate", "crop", "brightness"};
  Rng rng(99);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t c = rng.bernoulli(0.5) ? 1 : 3;
    const std::size_t h = 4 + rng.below(13), w = 4 + rng.below(13);
    const auto img = Tensor<float>::create({c, h, w}, Uniform{-1, 1}, rng.next_u64());
    const auto out = augment(img, ops, rng);
    ASSERT_EQ(out.shape(), img.shape());
    for (float v : out.data()) {
      ASSERT_GE(v, -1.0f);
      ASSERT_LE(v, 1.0f);
    }
  }
}

TEST(Augment, SameStreamSameResult) {
  const std::vector<std::string> ops{"hflip", "rotate", "crop", "brightness"};
  const auto img = Tensor<float>::create({3, 16, 16}, Uniform{-1, 1}, 1);
  Rng a(12), b(12);
  const auto x = augment(img, ops, a);
  const auto y = augment(img, ops, b);
  EXPECT_EQ(std::vector<float>(x.data().begin(), x.data().end()), std::vector<float>(y.data().begin(), y.data().end()));
}

}  // namespace
}  // namespace spoofsmith
