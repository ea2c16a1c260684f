#include "spoofsmith/io/toy_corpus.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "spoofsmith/error.hpp"
#include "spoofsmith/io/image.hpp"
#include "spoofsmith/rng.hpp"

namespace spoofsmith {

namespace fs = std::filesystem;

namespace {

struct Rgb {
  float r, g, b;
};

Rgb mix(const Rgb& a, const Rgb& b, float t) {
  return {a.r + (b.r - a.r) * t, a.g + (b.g - a.g) * t, a.b + (b.b - a.b) * t};
}

float smoothstep(float edge0, float edge1, float x) {
  const float t = std::clamp((x - edge0) / (edge1 - edge0), 0.0f, 1.0f);
  return t * t * (3 - 2 * t);
}

}  // namespace

Tensor<float> render_toy_eye(std::size_t resolution, std::uint64_t seed, EyeSide eye) {
  if (resolution < 8) throw InvalidArgumentError("toy images need a resolution of at least 8");
  Rng rng(seed);
  constexpr float kPi = std::numbers::pi_v<float>;

  const float tone = static_cast<float>(rng.uniform(0.45, 0.9));
  const float warmth_g = static_cast<float>(rng.uniform(0.68, 0.82));
  const float warmth_b = static_cast<float>(rng.uniform(0.72, 0.9));
  const Rgb skin{tone, tone * warmth_g, tone * warmth_g * warmth_b};
  const Rgb skin_shadow = mix(skin, {0.2f, 0.12f, 0.1f}, 0.45f);
  const Rgb iris_base{static_cast<float>(rng.uniform(0.15, 0.55)), static_cast<float>(rng.uniform(0.2, 0.5)),
                      static_cast<float>(rng.uniform(0.1, 0.45))};
  const Rgb iris_dark = mix(iris_base, {0.02f, 0.02f, 0.02f}, 0.6f);
  const Rgb sclera{0.93f, 0.91f, 0.88f};
  const Rgb sclera_edge{0.78f, 0.68f, 0.64f};

  // Geometry in unit coordinates, origin at the image center.
  const float eye_cx = static_cast<float>(rng.uniform(-0.05, 0.05));
  const float eye_cy = static_cast<float>(rng.uniform(0.0, 0.1));
  const float eye_a = static_cast<float>(rng.uniform(0.36, 0.44));
  const float eye_b = static_cast<float>(rng.uniform(0.16, 0.22));
  const float iris_r = static_cast<float>(rng.uniform(0.13, 0.17));
  const float iris_cx = eye_cx + static_cast<float>(rng.uniform(-0.08, 0.08));
  const float iris_cy = eye_cy + static_cast<float>(rng.uniform(-0.03, 0.03));
  const float pupil_r = iris_r * static_cast<float>(rng.uniform(0.3, 0.5));
  const float ring_freq = static_cast<float>(rng.uniform(18.0, 30.0));
  const float ring_phase = static_cast<float>(rng.uniform(0.0, 2 * kPi));
  const float brow_y = eye_cy - eye_b - static_cast<float>(rng.uniform(0.12, 0.18));
  const float brow_tilt = static_cast<float>(rng.uniform(-0.15, 0.15));
  const float light_dx = static_cast<float>(rng.uniform(-0.4, 0.4)) * iris_r;
  const float light_dy = static_cast<float>(rng.uniform(-0.5, -0.2)) * iris_r;

  constexpr int kSpokes = 24;
  float spoke_amp[kSpokes];
  for (float& a : spoke_amp) a = static_cast<float>(rng.uniform(-1.0, 1.0));

  const std::size_t n = resolution;
  auto out = Tensor<float>::zeros({3, n, n});
  auto d = out.mutable_data();
  const float mirror = eye == EyeSide::Right ? -1.0f : 1.0f;
  const float px = 1.0f / static_cast<float>(n);

  for (std::size_t yi = 0; yi < n; ++yi) {
    for (std::size_t xi = 0; xi < n; ++xi) {
      const float x = mirror * ((static_cast<float>(xi) + 0.5f) * px - 0.5f);
      const float y = (static_cast<float>(yi) + 0.5f) * px - 0.5f;

      // Skin with a soft shadow towards the inner corner (x > 0 before mirroring).
      Rgb c = mix(skin, skin_shadow, smoothstep(-0.2f, 0.6f, x) * 0.5f + smoothstep(0.1f, 0.5f, y) * 0.2f);

      // Eyebrow band.
      const float by = brow_y + brow_tilt * x - 0.1f * x * x;
      const float brow = (1 - smoothstep(0.02f, 0.05f, std::fabs(y - by))) * (1 - smoothstep(0.3f, 0.45f, std::fabs(x)));
      c = mix(c, {0.12f, 0.08f, 0.06f}, brow * 0.85f);

      // Almond-shaped opening: an ellipse pinched towards the corners.
      const float ex = (x - eye_cx) / eye_a;
      const float ey = (y - eye_cy) / eye_b;
      const float lid = ex * ex + ey * ey / std::max(0.05f, 1 - 0.35f * ex * ex);
      const float inside = 1 - smoothstep(0.9f, 1.0f, lid);
      const float lid_line = (1 - smoothstep(0.0f, 0.08f, std::fabs(lid - 1.0f))) * 0.6f;

      Rgb e = mix(sclera, sclera_edge, smoothstep(0.2f, 1.0f, lid));
      // Caruncle at the inner corner.
      e = mix(e, {0.8f, 0.45f, 0.45f}, smoothstep(0.75f, 0.95f, ex) * 0.7f);

      const float dx = x - iris_cx;
      const float dy = y - iris_cy;
      const float r = std::sqrt(dx * dx + dy * dy);
      const float theta = std::atan2(dy, dx);
      if (r < iris_r * 1.08f) {
        const float t = std::clamp((r - pupil_r) / (iris_r - pupil_r), 0.0f, 1.0f);
        const float spoke_pos = (theta + kPi) / (2 * kPi) * kSpokes;
        const int s0 = static_cast<int>(spoke_pos) % kSpokes;
        const int s1 = (s0 + 1) % kSpokes;
        const float sf = spoke_pos - std::floor(spoke_pos);
        const float radial_noise = spoke_amp[s0] * (1 - sf) + spoke_amp[s1] * sf;
        const float rings = 0.5f + 0.5f * std::sin(ring_freq * r / iris_r + ring_phase + 1.5f * radial_noise);
        Rgb iris = mix(iris_base, iris_dark, 0.35f * rings + 0.15f * radial_noise + 0.25f);
        // Limbal ring and collarette.
        iris = mix(iris, iris_dark, smoothstep(0.8f, 1.0f, t) * 0.8f);
        iris = mix(iris, mix(iris_base, {0.9f, 0.8f, 0.6f}, 0.3f), (1 - smoothstep(0.0f, 0.12f, std::fabs(t - 0.3f))) * 0.4f);
        const float pupil = 1 - smoothstep(pupil_r * 0.92f, pupil_r * 1.05f, r);
        iris = mix(iris, {0.02f, 0.02f, 0.03f}, pupil);
        const float iris_mask = 1 - smoothstep(iris_r * 0.97f, iris_r * 1.05f, r);
        e = mix(e, iris, iris_mask);
      }
      const float hx = dx - light_dx, hy = dy - light_dy;
      const float highlight = 1 - smoothstep(0.2f * pupil_r, 0.45f * pupil_r, std::sqrt(hx * hx + hy * hy));
      e = mix(e, {1.0f, 1.0f, 1.0f}, highlight * 0.9f);

      c = mix(c, e, inside);
      c = mix(c, {0.15f, 0.08f, 0.07f}, lid_line);

      const std::size_t at = yi * n + xi;
      d[at] = std::clamp(c.r, 0.0f, 1.0f) * 2 - 1;
      d[n * n + at] = std::clamp(c.g, 0.0f, 1.0f) * 2 - 1;
      d[2 * n * n + at] = std::clamp(c.b, 0.0f, 1.0f) * 2 - 1;
    }
  }
  return out;
}

DatasetManifest gen_toy_corpus(std::size_t count, std::size_t resolution, std::uint64_t seed, const fs::path& out_dir) {
  if (count == 0) throw InvalidArgumentError("toy corpus count must be at least 1");
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create directory " + out_dir.string() + ": " + ec.message());

  DatasetManifest manifest;
  const Rng root(seed);
  for (std::size_t i = 0; i < count; ++i) {
    const EyeSide eye = i % 2 == 0 ? EyeSide::Left : EyeSide::Right;
    char name[32];
    std::snprintf(name, sizeof name, "toy_%05zu.png", i);
    const auto image = render_toy_eye(resolution, root.split(i).next_u64(), eye);
    encode_image(image, out_dir / name);
    ManifestEntry entry;
    entry.path = name;
    entry.label = Label::BonaFide;
    entry.eye = eye;
    entry.base_dir = out_dir;
    manifest.entries.push_back(std::move(entry));
  }
  save_manifest(manifest, out_dir / "manifest.jsonl");
  return manifest;
}

}  // namespace spoofsmith
