#pragma once

#include <cstdint>
#include <filesystem>

#include "spoofsmith/io/manifest.hpp"
#include "spoofsmith/tensor.hpp"

namespace spoofsmith {

/// Renders one procedural periocular image [3, resolution, resolution] in
/// [-1, 1]: skin, eyelid opening, sclera gradient, ringed iris with radial
/// noise, pupil, eyebrow and a specular highlight. `eye` mirrors the layout.
Tensor<float> render_toy_eye(std::size_t resolution, std::uint64_t seed, EyeSide eye);

/// Writes `count` bona-fide images (toy_00000.png, ...) plus manifest.jsonl
/// into `out_dir`, alternating left and right eyes.
DatasetManifest gen_toy_corpus(std::size_t count, std::size_t resolution, std::uint64_t seed,
                               const std::filesystem::path& out_dir);

}  // namespace spoofsmith
