#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "spoofsmith/error.hpp"
#include "spoofsmith/eval.hpp"
#include "spoofsmith/io/blob.hpp"
#include "spoofsmith/io/checkpoint.hpp"
#include "spoofsmith/io/image.hpp"
#include "spoofsmith/io/manifest.hpp"
#include "spoofsmith/rng.hpp"
#include "spoofsmith/verify/verify.hpp"

namespace spoofsmith {

namespace fs = std::filesystem;

namespace {

template <typename Fn>
CheckResult timed(const char* name, Fn&& fn) {
  const auto start = std::chrono::steady_clock::now();
  CheckResult r;
  r.suite = "roundtrip";
  r.name = name;
  try {
    fn(r);
  } catch (const std::exception& e) {
    r.passed = false;
    r.detail = std::string("unexpected exception: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

template <typename T>
Tensor<T> random_bits(Rng& rng, const Shape& shape) {
  auto t = Tensor<T>::zeros(shape);
  for (T& v : t.mutable_data()) {
    const std::uint64_t bits = rng.next_u64();
    std::memcpy(&v, &bits, sizeof(T));
  }
  return t;
}

template <typename T>
bool bitwise_equal(const Tensor<T>& a, const Tensor<T>& b) {
  return a.shape() == b.shape() && std::memcmp(a.data().data(), b.data().data(), a.numel() * sizeof(T)) == 0;
}

template <typename Error, typename Fn>
bool throws(Fn&& fn) {
  try {
    fn();
  } catch (const Error&) {
    return true;
  } catch (...) {
    return false;
  }
  return false;
}

Checkpoint sample_checkpoint(std::uint64_t seed) {
  auto g = build_dcgan_generator<float>(LatentSpec{8}, ImageShape{3, 16, 16}, 0.125, seed);
  Checkpoint c;
  store_network(c, g);
  auto adam = AdamState<float>::for_params(g.params());
  Rng rng(seed);
  for (auto& [name, m] : adam.moments) {
    for (float& v : m.m.mutable_data()) v = static_cast<float>(rng.normal());
    for (float& v : m.v.mutable_data()) v = static_cast<float>(rng.uniform());
  }
  adam.step = 7;
  store_adam(c, adam);
  c.metadata["iteration"] = 7;
  c.metadata["config_hash"] = config_hash({{"seed", seed}});
  c.metadata["note"] = "fixture";
  c.rng = Rng(seed).state();
  return c;
}

}  // namespace

std::vector<CheckResult> run_roundtrip_suite(const VerifyOptions& options) {
  std::vector<CheckResult> out;
  const Rng root = Rng(options.seed).split(0x0b);

  fs::path scratch = options.scratch_dir;
  bool owned = false;
  if (scratch.empty()) {
    const auto tick = static_cast<std::uint64_t>(std::chrono::steady_clock::now().time_since_epoch().count());
    scratch = fs::temp_directory_path() / ("spoofsmith-verify-" + std::to_string(Rng(tick).next_u64()));
    owned = true;
  }
  fs::create_directories(scratch);

  out.push_back(timed("tensor_blob_bitwise", [&](CheckResult& r) {
    std::size_t failures = 0, cases = 0;
    for (std::size_t rank = 1; rank <= 4; ++rank) {
      for (int trial = 0; trial < 8; ++trial) {
        Rng rng = root.split(rank * 100 + static_cast<std::uint64_t>(trial));
        Shape shape(rank);
        for (auto& d : shape) d = 1 + rng.below(5);
        const auto f = random_bits<float>(rng, shape);
        const auto d = random_bits<double>(rng, shape);
        failures += !bitwise_equal(f, decode_tensor_blob<float>(encode_tensor_blob(f)));
        failures += !bitwise_equal(d, decode_tensor_blob<double>(encode_tensor_blob(d)));
        cases += 2;
      }
    }
    Rng file_rng = root.split(999);
    const auto f = random_bits<float>(file_rng, {2, 3});
    save_tensor(f, scratch / "blob.padt");
    failures += !bitwise_equal(f, load_tensor<float>(scratch / "blob.padt"));
    auto bytes = encode_tensor_blob(f);
    bytes.pop_back();
    failures += !throws<CorruptionError>([&] { decode_tensor_blob<float>(bytes); });
    r.passed = failures == 0;
    r.detail = std::to_string(cases) + " in-memory cases (f32+f64, ranks 1-4), file and truncation checks, " +
               std::to_string(failures) + " failures";
  }));

  out.push_back(timed("checkpoint_canonical_and_corruption", [&](CheckResult& r) {
    const auto c = sample_checkpoint(options.seed);
    const auto path = scratch / "fixture.ckpt";
    save_checkpoint(c, path);
    const auto first = read_file_bytes(path);
    const auto loaded = load_checkpoint(path);
    save_checkpoint(loaded, scratch / "fixture2.ckpt");
    const bool identical = first == read_file_bytes(scratch / "fixture2.ckpt");

    std::size_t tensors_ok = 0;
    for (const auto& [name, t] : c.tensors) tensors_ok += bitwise_equal(t, loaded.tensors.at(name));

    std::size_t truncations_caught = 0, truncations = 0;
    for (std::size_t cut : {std::size_t{0}, std::size_t{3}, std::size_t{9}, first.size() / 4, first.size() / 2,
                            first.size() - 1}) {
      std::vector<std::uint8_t> partial(first.begin(), first.begin() + static_cast<std::ptrdiff_t>(cut));
      ++truncations;
      truncations_caught += throws<CorruptionError>([&] { decode_checkpoint(partial); });
    }
    auto extra = first;
    extra.push_back(0);
    const bool trailing = throws<CorruptionError>([&] { decode_checkpoint(extra); });
    auto bumped = first;
    bumped[4] = kCheckpointVersion + 1;
    const bool version = throws<UnsupportedVersionError>([&] { decode_checkpoint(bumped); });
    const auto restored = restore_network(loaded);
    const bool network = network_to_json(restored) == c.network;

    r.passed = identical && tensors_ok == c.tensors.size() && truncations_caught == truncations && trailing &&
               version && network;
    r.detail = std::string("resave ") + (identical ? "byte-identical" : "DIFFERS") + ", " +
               std::to_string(tensors_ok) + "/" + std::to_string(c.tensors.size()) + " tensors bitwise, " +
               std::to_string(truncations_caught) + "/" + std::to_string(truncations) + " truncations rejected" +
               (trailing ? "" : ", trailing bytes accepted") + (version ? "" : ", version bump accepted");
  }));

  out.push_back(timed("png_endpoints_and_requantization", [&](CheckResult& r) {
    RawImage raw{4, 1, 1, {0, 255, 128, 127}};
    write_png(raw, scratch / "endpoints.png");
    const auto t = decode_image(scratch / "endpoints.png", ImageShape{1, 1, 4});
    const bool decode_ok = t.data()[0] == -1.0f && t.data()[1] == 1.0f;
    const auto back = tensor_to_raw(Tensor<float>({1, 1, 3}, {-1.0f, 1.0f, 0.0f}));
    const bool encode_ok = back.pixels == std::vector<std::uint8_t>{0, 255, 128};

    Rng rng = root.split(7);
    RawImage rgb{9, 7, 3, {}};
    for (std::size_t i = 0; i < 9 * 7 * 3; ++i) rgb.pixels.push_back(static_cast<std::uint8_t>(rng.below(256)));
    write_png(rgb, scratch / "rgb.png");
    const auto first = decode_image(scratch / "rgb.png", ImageShape{3, 7, 9});
    encode_image(first, scratch / "rgb2.png");
    const auto second = decode_image(scratch / "rgb2.png", ImageShape{3, 7, 9});
    double worst = 0;
    for (std::size_t i = 0; i < first.numel(); ++i) {
      worst = std::max(worst, static_cast<double>(std::fabs(first.data()[i] - second.data()[i])));
    }
    const bool pixels_ok = read_png(scratch / "rgb2.png").pixels == rgb.pixels;
    r.passed = decode_ok && encode_ok && worst <= 1.0 / 127.5 && pixels_ok;
    char buf[160];
    std::snprintf(buf, sizeof buf, "0->%g, 255->%g, encode(-1,1,0)=(%d,%d,%d), requantization max err %.3g",
                  static_cast<double>(t.data()[0]), static_cast<double>(t.data()[1]), back.pixels[0], back.pixels[1],
                  back.pixels[2], worst);
    r.detail = buf;
  }));

  out.push_back(timed("manifest_and_report", [&](CheckResult& r) {
    std::istringstream in(
        "{\"path\":\"a.png\",\"label\":\"bona_fide\",\"eye\":\"left\",\"camera\":\"x\"}\n\n"
        "{\"path\":\"b.png\",\"label\":\"attack\",\"subset\":\"s1\"}\n");
    const auto m = parse_manifest(in);
    std::ostringstream written;
    write_manifest(written, m);
    std::istringstream again(written.str());
    const auto m2 = parse_manifest(again);
    const bool manifest_ok = m2.size() == 2 && m2.entries[0].extra == nlohmann::json{{"camera", "x"}} &&
                             m2.entries[1].subset == std::optional<std::string>("s1") &&
                             m2.entries[0].eye == EyeSide::Left;
    std::istringstream bad("{\"path\":\"a.png\",\"label\":\"fake\"}\n");
    const bool rejects = throws<ParseError>([&] { parse_manifest(bad); });

    Rng rng = root.split(9);
    ScoredSet set;
    for (int i = 0; i < 50; ++i) set.push_back({rng.uniform(), i % 2 ? Label::BonaFide : Label::Attack});
    const auto report = evaluate(set, 0.5);
    emit_report(report, scratch / "report");
    const bool report_ok = load_report(scratch / "report" / "report.json") == report;
    std::ifstream csv(scratch / "report" / "roc.csv");
    std::size_t rows = 0;
    for (std::string line; std::getline(csv, line);) ++rows;
    r.passed = manifest_ok && rejects && report_ok && rows == report.roc.size() + 1;
    r.detail = std::string("manifest ") + (manifest_ok ? "ok" : "MISMATCH") + ", label check " +
               (rejects ? "ok" : "MISSING") + ", report " + (report_ok ? "ok" : "MISMATCH") + ", roc.csv rows " +
               std::to_string(rows);
  }));

  if (owned) {
    std::error_code ec;
    fs::remove_all(scratch, ec);
  }
  return out;
}

}  // namespace spoofsmith
