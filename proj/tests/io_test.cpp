#include <gtest/gtest.h>

#include <cstring>
#include <fstream>
#include <sstream>

#include "spoofsmith/io/blob.hpp"
#include "spoofsmith/io/checkpoint.hpp"
#include "spoofsmith/io/image.hpp"
#include "spoofsmith/io/manifest.hpp"
#include "spoofsmith/io/toy_corpus.hpp"
#include "spoofsmith/models.hpp"
#include "test_support.hpp"

namespace spoofsmith {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;

template <typename T>
bool bitwise_equal(const Tensor<T>& a, const Tensor<T>& b) {
  return a.shape() == b.shape() && std::memcmp(a.data().data(), b.data().data(), a.numel() * sizeof(T)) == 0;
}

void write_text(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

TEST(Manifest, TwoValidLines) {
  TempDir dir;
  write_text(dir / "m.jsonl",
             "{\"path\":\"a.png\",\"label\":\"bona_fide\",\"eye\":\"left\"}\n"
             "\n"
             "{\"path\":\"b.png\",\"label\":\"attack\",\"subset\":\"visob\"}\n");
  const auto m = load_manifest(dir / "m.jsonl");
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m.entries[0].eye, EyeSide::Left);
  EXPECT_EQ(m.entries[1].label, Label::Attack);
  EXPECT_EQ(m.entries[1].eye, EyeSide::Unknown);
  EXPECT_EQ(m.entries[1].subset, "visob");
  EXPECT_EQ(m.entries[0].resolved_path(), (dir.path() / "a.png").lexically_normal());
}

TEST(Manifest, EmptyFileIsEmptyManifest) {
  TempDir dir;
  write_text(dir / "m.jsonl", "");
  EXPECT_TRUE(load_manifest(dir / "m.jsonl").empty());
}

TEST(Manifest, UnknownLabelNamesLine) {
  std::istringstream in(
      "{\"path\":\"a.png\",\"label\":\"attack\"}\n"
      "{\"path\":\"b.png\",\"label\":\"fake\"}\n");
  try {
    parse_manifest(in, {}, "m.jsonl");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("m.jsonl:2:"), std::string::npos) << e.what();
  }
}

TEST(Manifest, OnlyTheTwoPadLabelsParse) {
  EXPECT_EQ(parse_label("bona_fide"), Label::BonaFide);
  EXPECT_EQ(parse_label("attack"), Label::Attack);
  for (const char* bad : {"fake", "real", "Attack", "bona-fide", ""}) EXPECT_FALSE(parse_label(bad)) << bad;
}

TEST(Manifest, MalformedJsonAndDuplicates) {
  std::istringstream broken("{\"path\":\"a.png\",\n");
  EXPECT_THROW(parse_manifest(broken), ParseError);
  std::istringstream dup(
      "{\"path\":\"a.png\",\"label\":\"attack\"}\n"
      "{\"path\":\"./a.png\",\"label\":\"bona_fide\"}\n");
  EXPECT_THROW(parse_manifest(dup), ValidationError);
}

TEST(Manifest, UnknownFieldsSurviveRewrite) {
  std::istringstream in("{\"path\":\"a.png\",\"label\":\"attack\",\"camera\":\"ipad\",\"score\":0.5}\n");
  const auto m = parse_manifest(in);
  std::ostringstream out;
  write_manifest(out, m);
  const auto j = nlohmann::json::parse(out.str());
  EXPECT_EQ(j["camera"], "ipad");
  EXPECT_EQ(j["score"], 0.5);
  std::istringstream again(out.str());
  EXPECT_EQ(parse_manifest(again).entries[0].extra, m.entries[0].extra);
}

TEST(Manifest, MergeProducesAbsolutePaths) {
  std::istringstream a("{\"path\":\"x.png\",\"label\":\"bona_fide\"}\n");
  std::istringstream b("{\"path\":\"x.png\",\"label\":\"attack\"}\n");
  const auto merged = merge_manifests(parse_manifest(a, "/data/real"), parse_manifest(b, "/data/fake"));
  ASSERT_EQ(merged.size(), 2u);
  EXPECT_EQ(merged.entries[0].path, "/data/real/x.png");
  EXPECT_EQ(merged.entries[1].path, "/data/fake/x.png");
}

RawImage solid(std::size_t w, std::size_t h, std::size_t c, std::uint8_t v) {
  return {w, h, c, std::vector<std::uint8_t>(w * h * c, v)};
}

TEST(Image, BlackAndWhiteEndpointsAreExact) {
  TempDir dir;
  write_png(solid(8, 8, 3, 0), dir / "black.png");
  write_png(solid(8, 8, 1, 255), dir / "white.png");
  const auto black = decode_image(dir / "black.png", {3, 8, 8});
  const auto white = decode_image(dir / "white.png", {3, 8, 8});
  const auto white_gray = decode_image(dir / "white.png", {1, 16, 16});
  for (float v : black.data()) EXPECT_EQ(v, -1.0f);
  for (float v : white.data()) EXPECT_EQ(v, 1.0f);
  for (float v : white_gray.data()) EXPECT_EQ(v, 1.0f);
}

TEST(Image, ZeroTensorEncodesToMidGray) {
  TempDir dir;
  encode_image(Tensor<float>::zeros({3, 8, 8}), dir / "gray.png");
  const auto raw = read_png(dir / "gray.png");
  EXPECT_EQ(raw.width, 8u);
  EXPECT_EQ(raw.height, 8u);
  EXPECT_EQ(raw.channels, 3u);
  for (auto p : raw.pixels) EXPECT_EQ(p, 128);
}

TEST(Image, RoundTripWithinQuantizationStep) {
  TempDir dir;
  const auto t = Tensor<float>::create({3, 12, 10}, Uniform{-1, 1}, 3);
  encode_image(t, dir / "a.png");
  const auto once = decode_image(dir / "a.png", {3, 12, 10});
  encode_image(once, dir / "b.png");
  const auto twice = decode_image(dir / "b.png", {3, 12, 10});
  for (std::size_t i = 0; i < t.numel(); ++i) EXPECT_LE(std::abs(once.data()[i] - t.data()[i]), 1.0f / 127.5f);
  EXPECT_TRUE(bitwise_equal(once, twice));
}

TEST(Image, AllByteValuesMapExactly) {
  RawImage ramp{256, 1, 1, {}};
  for (int v = 0; v < 256; ++v) ramp.pixels.push_back(static_cast<std::uint8_t>(v));
  const auto t = raw_to_tensor(ramp, {1, 1, 256});
  EXPECT_EQ(t.data()[0], -1.0f);
  EXPECT_EQ(t.data()[255], 1.0f);
  for (int v = 0; v < 256; ++v) EXPECT_NEAR(t.data()[v], v / 127.5 - 1.0, 1e-7);
  EXPECT_EQ(tensor_to_raw(t).pixels, ramp.pixels);
}

TEST(Image, CorruptOrUnsupportedFilesAreDecodeErrors) {
  TempDir dir;
  write_text(dir / "junk.png", "definitely not a png");
  EXPECT_THROW(read_png(dir / "junk.png"), DecodeError);
  write_png(solid(4, 4, 3, 10), dir / "ok.png");
  auto bytes = read_file_bytes(dir / "ok.png");
  bytes.resize(bytes.size() / 2);
  write_file_bytes(dir / "cut.png", bytes);
  EXPECT_THROW(read_png(dir / "cut.png"), DecodeError);
  EXPECT_THROW(read_png(dir / "missing.png"), IoError);
}

TEST(ToyCorpus, AlternatesEyesAndWritesFiles) {
  TempDir dir;
  const auto m = gen_toy_corpus(10, 32, 1, dir.path());
  ASSERT_EQ(m.size(), 10u);
  std::size_t left = 0, right = 0;
  for (const auto& e : m.entries) {
    EXPECT_TRUE(fs::exists(e.resolved_path()));
    EXPECT_EQ(e.label, Label::BonaFide);
    left += e.eye == EyeSide::Left;
    right += e.eye == EyeSide::Right;
  }
  EXPECT_EQ(left, 5u);
  EXPECT_EQ(right, 5u);
  EXPECT_EQ(load_manifest(dir / "manifest.jsonl").size(), 10u);
}

TEST(ToyCorpus, SameSeedSameBytes) {
  TempDir dir;
  gen_toy_corpus(6, 32, 4, dir / "a");
  gen_toy_corpus(6, 32, 4, dir / "b");
  gen_toy_corpus(6, 32, 5, dir / "c");
  bool any_diff = false;
  for (int i = 0; i < 6; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "toy_%05d.png", i);
    EXPECT_EQ(read_file_bytes(dir / "a" / name), read_file_bytes(dir / "b" / name));
    any_diff = any_diff || read_file_bytes(dir / "a" / name) != read_file_bytes(dir / "c" / name);
  }
  EXPECT_TRUE(any_diff);
}

TEST(ToyCorpus, FullCorpusMeanIsNonDegenerate) {
  double total = 0;
  std::size_t count = 0;
  double lo = 1, hi = -1;
  for (std::uint64_t i = 0; i < 500; ++i) {
    const auto img = render_toy_eye(64, Rng(1).split(i).next_u64(), i % 2 ? EyeSide::Right : EyeSide::Left);
    for (float v : img.data()) {
      total += v;
      lo = std::min<double>(lo, v);
      hi = std::max<double>(hi, v);
    }
    count += img.numel();
  }
  const double mean = total / double(count);
  EXPECT_GE(mean, -0.5);
  EXPECT_LE(mean, 0.5);
  EXPECT_LT(lo, -0.5);
  EXPECT_GT(hi, 0.5);
}

template <typename T>
void blob_round_trip(std::uint64_t seed) {
  const Shape shapes[] = {{7}, {3, 5}, {2, 3, 4}, {2, 1, 3, 5}};
  for (const auto& s : shapes) {
    const auto t = Tensor<T>::create(s, Normal{0, 1e3}, seed);
    const auto bytes = encode_tensor_blob(t);
    EXPECT_EQ(bytes.size(), 8 + 8 * s.size() + t.numel() * sizeof(T));
    EXPECT_TRUE(bitwise_equal(decode_tensor_blob<T>(bytes), t));
  }
}

TEST(TensorBlob, LosslessForBothDtypesAndAllRanks) {
  blob_round_trip<float>(1);
  blob_round_trip<double>(2);
}

TEST(TensorBlob, HeaderLayout) {
  const auto bytes = encode_tensor_blob(Tensor<double>({2}, {1.0, -2.0}));
  ASSERT_EQ(bytes.size(), 8u + 8u + 16u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "PADT");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[5], 1);
  EXPECT_EQ(bytes[6], 1);
  EXPECT_EQ(bytes[7], 0);
  EXPECT_EQ(bytes[8], 2);
  for (int i = 9; i < 16; ++i) EXPECT_EQ(bytes[i], 0);
  EXPECT_EQ(blob_dtype(bytes), DType::F64);
}

TEST(TensorBlob, DamageIsDetected) {
  auto bytes = encode_tensor_blob(Tensor<float>::create({3, 3}, Uniform{-1, 1}, 1));
  auto cut = bytes;
  cut.pop_back();
  EXPECT_THROW(decode_tensor_blob<float>(cut), CorruptionError);
  auto extra = bytes;
  extra.push_back(0);
  EXPECT_THROW(decode_tensor_blob<float>(extra), CorruptionError);
  auto version = bytes;
  version[4] = 9;
  EXPECT_THROW(decode_tensor_blob<float>(version), UnsupportedVersionError);
  EXPECT_THROW(decode_tensor_blob<double>(bytes), ParseError);
}

TEST(TensorBlob, FileRoundTrip) {
  TempDir dir;
  const auto t = Tensor<double>::create({4, 4}, Uniform{-1, 1}, 3);
  save_tensor(t, dir / "t.padt");
  EXPECT_TRUE(bitwise_equal(load_tensor<double>(dir / "t.padt"), t));
}

Checkpoint sample_checkpoint() {
  Checkpoint c;
  const auto net = build_dcgan_discriminator<float>({3, 16, 16}, 0.125, 7);
  store_network(c, net);
  store_adam(c, AdamState<float>::for_params(net.params()));
  c.metadata["iteration"] = 12;
  c.metadata["config_hash"] = "abc";
  c.rng = {0x1234, 12};
  return c;
}

TEST(Checkpoint, SaveLoadSaveIsByteIdentical) {
  TempDir dir;
  save_checkpoint(sample_checkpoint(), dir / "a.ckpt");
  const auto loaded = load_checkpoint(dir / "a.ckpt");
  save_checkpoint(loaded, dir / "b.ckpt");
  EXPECT_EQ(read_file_bytes(dir / "a.ckpt"), read_file_bytes(dir / "b.ckpt"));
  EXPECT_EQ(loaded.rng, (RngState{0x1234, 12}));
  EXPECT_EQ(loaded.metadata["iteration"], 12);
}

TEST(Checkpoint, NetworkRestoresBitwise) {
  const auto original = build_dcgan_generator<float>({20}, {1, 16, 16}, 0.125, 3);
  Checkpoint c;
  store_network(c, original);
  const auto back = restore_network(decode_checkpoint(encode_checkpoint(c)));
  EXPECT_EQ(back.layers(), original.layers());
  EXPECT_EQ(back.input_shape(), original.input_shape());
  for (const auto& [name, p] : original.params()) EXPECT_TRUE(bitwise_equal(back.params().at(name), p)) << name;
  for (const auto& [name, b] : original.buffers()) EXPECT_TRUE(bitwise_equal(back.buffers().at(name), b)) << name;
}

TEST(Checkpoint, EveryTruncationIsCorruption) {
  const auto bytes = encode_checkpoint(sample_checkpoint());
  for (std::size_t len = 0; len < bytes.size(); len += 1 + len / 16) {
    std::vector<std::uint8_t> cut(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(len));
    EXPECT_THROW(decode_checkpoint(cut), CorruptionError) << len;
  }
  auto extra = bytes;
  extra.push_back(1);
  EXPECT_THROW(decode_checkpoint(extra), CorruptionError);
}

TEST(Checkpoint, VersionMismatchIsUnsupported) {
  auto bytes = encode_checkpoint(sample_checkpoint());
  bytes[4] = kCheckpointVersion + 1;
  EXPECT_THROW(decode_checkpoint(bytes), UnsupportedVersionError);
}

TEST(Checkpoint, ConfigHashMismatchIsDetected) {
  const auto c = sample_checkpoint();
  EXPECT_NO_THROW(require_config_hash(c, "abc"));
  EXPECT_THROW(require_config_hash(c, "abd"), ConfigMismatchError);
  EXPECT_EQ(config_hash({{"a", 1}}), config_hash({{"a", 1}}));
  EXPECT_NE(config_hash({{"a", 1}}), config_hash({{"a", 2}}));
}

TEST(Checkpoint, AdamStateRoundTrip) {
  const auto net = build_dcgan_discriminator<float>({3, 16, 16}, 0.125, 7);
  auto st = AdamState<float>::for_params(net.params());
  st.step = 9;
  st.moments.begin()->second.m.mutable_data()[0] = 0.25f;
  Checkpoint c;
  store_network(c, net);
  store_adam(c, st);
  const auto back = restore_adam(decode_checkpoint(encode_checkpoint(c)), net);
  EXPECT_EQ(back.step, 9u);
  EXPECT_EQ(back.moments.begin()->second.m.data()[0], 0.25f);
}

}  // namespace
}  // namespace spoofsmith
