#include "spoofsmith/train/data.hpp"

#include <cstring>
#include <exception>

#include "spoofsmith/error.hpp"
#include "spoofsmith/gemm.hpp"
#include "spoofsmith/io/image.hpp"
#include "spoofsmith/rng.hpp"

namespace spoofsmith {

std::vector<Tensor<float>> load_images(const DatasetManifest& manifest, const ImageShape& shape) {
  const std::size_t n = manifest.size();
  std::vector<Tensor<float>> images(n);
  std::vector<std::exception_ptr> errors(n);
  const int workers = static_cast<int>(kernels::worker_count());
#pragma omp parallel for schedule(dynamic, 8) num_threads(workers) if (workers > 1 && n > 8)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    try {
      images[i] = decode_image(manifest.entries[i].resolved_path(), shape);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return images;
}

Tensor<float> stack_images(std::span<const Tensor<float>> images, std::span<const std::size_t> indices) {
  if (indices.empty()) throw InvalidArgumentError("cannot stack an empty batch");
  const Shape& per = images[indices[0]].shape();
  Shape shape{indices.size()};
  shape.insert(shape.end(), per.begin(), per.end());
  auto out = Tensor<float>::zeros(shape);
  auto d = out.mutable_data();
  const std::size_t stride = images[indices[0]].numel();
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto& img = images[indices[i]];
    if (img.shape() != per) throw InvalidShapeError("images in a batch must share one shape");
    std::memcpy(d.data() + i * stride, img.data().data(), stride * sizeof(float));
  }
  return out;
}

std::vector<std::size_t> permutation(std::size_t n, Rng rng) {
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = i;
  for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[rng.below(i)]);
  return p;
}

Tensor<float> target_column(std::size_t n, float value) { return Tensor<float>::full({n, 1}, value); }

float target_for(Label label) { return label == Label::BonaFide ? 1.0f : 0.0f; }

ImageShape image_shape_of(const NetworkSpec& net) {
  const Shape& s = net.input_shape();
  if (s.size() != 3) throw InvalidShapeError("network input is not an image: " + to_string(s));
  return {s[0], s[1], s[2]};
}

}  // namespace spoofsmith
