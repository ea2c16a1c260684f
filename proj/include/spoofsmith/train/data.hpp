#pragma once

#include <span>
#include <vector>

#include "spoofsmith/io/manifest.hpp"
#include "spoofsmith/models.hpp"
#include "spoofsmith/rng.hpp"
#include "spoofsmith/tensor.hpp"

namespace spoofsmith {

/// Decodes every manifest entry at `shape`. Decoding runs on parallel
/// workers; results are stored by manifest index.
std::vector<Tensor<float>> load_images(const DatasetManifest& manifest, const ImageShape& shape);

/// Stacks images[indices[i]] into a batch [n, c, h, w].
Tensor<float> stack_images(std::span<const Tensor<float>> images, std::span<const std::size_t> indices);

/// Fisher-Yates permutation of 0..n-1.
std::vector<std::size_t> permutation(std::size_t n, Rng rng);

/// [n, 1] tensor filled with `value`.
Tensor<float> target_column(std::size_t n, float value);

/// 1 for bona fide, 0 for attack.
float target_for(Label label);

/// Shape the network expects per sample, as an image.
ImageShape image_shape_of(const NetworkSpec& net);

}  // namespace spoofsmith
