#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "spoofsmith/layers.hpp"
#include "spoofsmith/tensor.hpp"

namespace spoofsmith {

enum class LayerKind { Conv2d, ConvTranspose2d, BatchNorm2d, MaxPool2d, Flatten, Dense, Reshape };
enum class Activation { None, Relu, LeakyRelu, Tanh, Sigmoid };
enum class Mode { Train, Eval };

std::string to_string(LayerKind kind);
std::string to_string(Activation act);
LayerKind parse_layer_kind(const std::string& name);
Activation parse_activation(const std::string& name);

/// One step of a network. Only the geometry fields relevant to `kind` are
/// read; `activation` is applied to the layer output.
struct LayerDesc {
  LayerKind kind = LayerKind::Flatten;
  std::string name;
  Activation activation = Activation::None;
  double alpha = 0.2;

  std::size_t in_channels = 0;  // conv, conv-transpose, batchnorm
  std::size_t out_channels = 0;
  std::size_t kernel = 0;
  std::size_t stride = 1;
  std::size_t padding = 0;
  bool bias = true;

  std::size_t in_features = 0;  // dense
  std::size_t out_features = 0;

  Shape reshape_to;  // per-sample target shape

  bool operator==(const LayerDesc&) const = default;
};

struct LayerCounts {
  int conv2d = 0;
  int maxpool = 0;
  int flatten = 0;
  int dense = 0;

  bool operator==(const LayerCounts&) const = default;
};

struct ImageShape {
  std::size_t channels = 3;
  std::size_t height = 64;
  std::size_t width = 64;

  [[nodiscard]] Shape as_shape() const { return {channels, height, width}; }
  bool operator==(const ImageShape&) const = default;
};

struct LatentSpec {
  std::size_t z_dim = 100;
};

enum class InitScheme {
  Dcgan,     // normal(0, 0.02) weights, gamma ~ normal(1, 0.02)
  HeNormal,  // normal(0, sqrt(2 / fan_in)) weights
};

/// Ordered layer list plus named parameters (trainable) and buffers
/// (batchnorm running statistics). Shapes of adjacent layers are validated
/// when the network is assembled.
template <typename T>
class Network {
 public:
  Network() = default;
  Network(std::string kind, Shape input_shape, std::vector<LayerDesc> layers);

  [[nodiscard]] const std::string& kind() const { return kind_; }
  [[nodiscard]] const Shape& input_shape() const { return input_shape_; }
  [[nodiscard]] const std::vector<LayerDesc>& layers() const { return layers_; }

  /// Per-sample output shape from symbolic propagation.
  [[nodiscard]] Shape output_shape() const;
  [[nodiscard]] LayerCounts counts() const;
  [[nodiscard]] std::size_t parameter_count() const;

  std::map<std::string, Tensor<T>>& params() { return params_; }
  [[nodiscard]] const std::map<std::string, Tensor<T>>& params() const { return params_; }
  std::map<std::string, Tensor<T>>& buffers() { return buffers_; }
  [[nodiscard]] const std::map<std::string, Tensor<T>>& buffers() const { return buffers_; }

  /// Re-draws every parameter from `seed`; buffers reset to mean 0 / var 1.
  void initialize(std::uint64_t seed, InitScheme scheme);

  /// Deep copy; plain copies share parameter storage.
  [[nodiscard]] Network clone() const;

 private:
  std::string kind_;
  Shape input_shape_;
  std::vector<LayerDesc> layers_;
  std::map<std::string, Tensor<T>> params_;
  std::map<std::string, Tensor<T>> buffers_;
};

using NetworkSpec = Network<float>;

/// Per-sample shape after each layer, validating geometry along the way.
std::vector<Shape> propagate_shapes(const Shape& input, const std::vector<LayerDesc>& layers);

/// VGG-style stack: blocks of 3x3 convs [64,64 | 128,128 | 256x3 | 512x3 |
/// 512x4] (scaled by width_scale) each followed by a 2x2 max-pool, then
/// flatten, dense(head_units, ReLU) and dense(1, sigmoid).
template <typename T>
Network<T> build_modified_vggnet(const ImageShape& input, double width_scale = 1.0, std::size_t head_units = 256,
                                 std::uint64_t seed = 0, InitScheme scheme = InitScheme::HeNormal);

template <typename T>
Network<T> build_dcgan_generator(const LatentSpec& latent, const ImageShape& out, double width_scale = 1.0,
                                 std::uint64_t seed = 0);

template <typename T>
Network<T> build_dcgan_discriminator(const ImageShape& in, double width_scale = 1.0, std::uint64_t seed = 0);

/// Throws InvalidShapeError unless the discriminator consumes exactly the
/// generator's output shape.
template <typename T>
void check_gan_duality(const Network<T>& generator, const Network<T>& discriminator);

/// Applies the layers in order. Eval mode uses running batchnorm statistics
/// and records no graph.
template <typename T>
Tensor<T> forward(Network<T>& net, const Tensor<T>& batch, Mode mode);

std::size_t scaled_width(std::size_t base, double scale);

}  // namespace spoofsmith
