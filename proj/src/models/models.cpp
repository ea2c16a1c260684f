#include "spoofsmith/models.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "spoofsmith/ops.hpp"
#include "spoofsmith/rng.hpp"

namespace spoofsmith {

std::string to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::Conv2d: return "conv2d";
    case LayerKind::ConvTranspose2d: return "conv_transpose2d";
    case LayerKind::BatchNorm2d: return "batchnorm2d";
    case LayerKind::MaxPool2d: return "maxpool2d";
    case LayerKind::Flatten: return "flatten";
    case LayerKind::Dense: return "dense";
    case LayerKind::Reshape: return "reshape";
  }
  return "?";
}

std::string to_string(Activation act) {
  switch (act) {
    case Activation::None: return "none";
    case Activation::Relu: return "relu";
    case Activation::LeakyRelu: return "leaky_relu";
    case Activation::Tanh: return "tanh";
    case Activation::Sigmoid: return "sigmoid";
  }
  return "?";
}

LayerKind parse_layer_kind(const std::string& name) {
  for (auto k : {LayerKind::Conv2d, LayerKind::ConvTranspose2d, LayerKind::BatchNorm2d, LayerKind::MaxPool2d,
                 LayerKind::Flatten, LayerKind::Dense, LayerKind::Reshape})
    if (to_string(k) == name) return k;
  throw ParseError("unknown layer kind '" + name + "'");
}

Activation parse_activation(const std::string& name) {
  for (auto a : {Activation::None, Activation::Relu, Activation::LeakyRelu, Activation::Tanh, Activation::Sigmoid})
    if (to_string(a) == name) return a;
  throw ParseError("unknown activation '" + name + "'");
}

std::size_t scaled_width(std::size_t base, double scale) {
  if (!(scale > 0.0)) throw InvalidArgumentError("width scale must be positive");
  const auto w = static_cast<std::size_t>(std::lround(static_cast<double>(base) * scale));
  return w < 1 ? 1 : w;
}

std::vector<Shape> propagate_shapes(const Shape& input, const std::vector<LayerDesc>& layers) {
  checked_numel(input);
  std::vector<Shape> shapes;
  Shape cur = input;
  auto fail = [](const LayerDesc& l, const std::string& why) {
    throw InvalidShapeError("layer '" + l.name + "' (" + to_string(l.kind) + "): " + why);
  };
  for (const auto& l : layers) {
    switch (l.kind) {
      case LayerKind::Conv2d:
      case LayerKind::ConvTranspose2d: {
        if (cur.size() != 3) fail(l, "expects [c,h,w], got " + to_string(cur));
        if (cur[0] != l.in_channels) {
          fail(l, "expects " + std::to_string(l.in_channels) + " channels, got " + std::to_string(cur[0]));
        }
        if (l.out_channels == 0 || l.kernel == 0 || l.stride == 0) fail(l, "zero-sized geometry");
        if (l.kind == LayerKind::Conv2d) {
          cur = {l.out_channels, conv_output_dim(cur[1], l.kernel, l.stride, l.padding),
                 conv_output_dim(cur[2], l.kernel, l.stride, l.padding)};
        } else {
          cur = {l.out_channels, conv_transpose_output_dim(cur[1], l.kernel, l.stride, l.padding),
                 conv_transpose_output_dim(cur[2], l.kernel, l.stride, l.padding)};
        }
        break;
      }
      case LayerKind::BatchNorm2d:
        if (cur.size() != 3 || cur[0] != l.in_channels) fail(l, "channel mismatch with input " + to_string(cur));
        break;
      case LayerKind::MaxPool2d:
        if (cur.size() != 3) fail(l, "expects [c,h,w], got " + to_string(cur));
        if (cur[1] % 2 || cur[2] % 2) fail(l, "odd spatial size " + to_string(cur));
        cur = {cur[0], cur[1] / 2, cur[2] / 2};
        break;
      case LayerKind::Flatten:
        cur = {checked_numel(cur)};
        break;
      case LayerKind::Dense:
        if (cur.size() != 1 || cur[0] != l.in_features) {
          fail(l, "expects [" + std::to_string(l.in_features) + "], got " + to_string(cur));
        }
        if (l.out_features == 0) fail(l, "zero output features");
        cur = {l.out_features};
        break;
      case LayerKind::Reshape:
        if (checked_numel(l.reshape_to) != checked_numel(cur)) {
          fail(l, "cannot reshape " + to_string(cur) + " to " + to_string(l.reshape_to));
        }
        cur = l.reshape_to;
        break;
    }
    shapes.push_back(cur);
  }
  return shapes;
}

template <typename T>
Network<T>::Network(std::string kind, Shape input_shape, std::vector<LayerDesc> layers)
    : kind_(std::move(kind)), input_shape_(std::move(input_shape)), layers_(std::move(layers)) {
  propagate_shapes(input_shape_, layers_);
  for (const auto& l : layers_) {
    switch (l.kind) {
      case LayerKind::Conv2d:
        params_[l.name + ".weight"] = Tensor<T>::zeros({l.out_channels, l.in_channels, l.kernel, l.kernel});
        if (l.bias) params_[l.name + ".bias"] = Tensor<T>::zeros({l.out_channels});
        break;
      case LayerKind::ConvTranspose2d:
        params_[l.name + ".weight"] = Tensor<T>::zeros({l.in_channels, l.out_channels, l.kernel, l.kernel});
        if (l.bias) params_[l.name + ".bias"] = Tensor<T>::zeros({l.out_channels});
        break;
      case LayerKind::BatchNorm2d:
        params_[l.name + ".gamma"] = Tensor<T>::full({l.in_channels}, T(1));
        params_[l.name + ".beta"] = Tensor<T>::zeros({l.in_channels});
        buffers_[l.name + ".running_mean"] = Tensor<T>::zeros({l.in_channels});
        buffers_[l.name + ".running_var"] = Tensor<T>::full({l.in_channels}, T(1));
        break;
      case LayerKind::Dense:
        params_[l.name + ".weight"] = Tensor<T>::zeros({l.in_features, l.out_features});
        params_[l.name + ".bias"] = Tensor<T>::zeros({l.out_features});
        break;
      default:
        break;
    }
  }
  for (auto& [name, p] : params_) p.set_requires_grad(true);
}

template <typename T>
Network<T> Network<T>::clone() const {
  Network out;
  out.kind_ = kind_;
  out.input_shape_ = input_shape_;
  out.layers_ = layers_;
  for (const auto& [name, p] : params_) out.params_[name] = p.clone();
  for (const auto& [name, b] : buffers_) out.buffers_[name] = b.clone();
  return out;
}

template <typename T>
Shape Network<T>::output_shape() const {
  auto shapes = propagate_shapes(input_shape_, layers_);
  return shapes.empty() ? input_shape_ : shapes.back();
}

template <typename T>
LayerCounts Network<T>::counts() const {
  LayerCounts c;
  for (const auto& l : layers_) {
    if (l.kind == LayerKind::Conv2d) ++c.conv2d;
    if (l.kind == LayerKind::MaxPool2d) ++c.maxpool;
    if (l.kind == LayerKind::Flatten) ++c.flatten;
    if (l.kind == LayerKind::Dense) ++c.dense;
  }
  return c;
}

template <typename T>
std::size_t Network<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, p] : params_) n += p.numel();
  return n;
}

template <typename T>
void Network<T>::initialize(std::uint64_t seed, InitScheme scheme) {
  const Rng root(seed);
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const LayerDesc& l = layers_[i];
    const std::uint64_t layer_seed = root.split(i).next_u64();
    auto set = [&](const std::string& key, const Fill& fill, std::uint64_t s) {
      Tensor<T>& p = params_.at(l.name + key);
      auto fresh = Tensor<T>::create(p.shape(), fill, s);
      std::copy(fresh.data().begin(), fresh.data().end(), p.mutable_data().begin());
    };
    auto weight_std = [&](std::size_t fan_in) {
      return scheme == InitScheme::Dcgan ? 0.02 : std::sqrt(2.0 / static_cast<double>(fan_in));
    };
    switch (l.kind) {
      case LayerKind::Conv2d:
        set(".weight", Normal{0.0, weight_std(l.in_channels * l.kernel * l.kernel)}, layer_seed);
        if (l.bias) set(".bias", Constant{0.0}, 0);
        break;
      case LayerKind::ConvTranspose2d:
        set(".weight", Normal{0.0, weight_std(l.in_channels * l.kernel * l.kernel)}, layer_seed);
        if (l.bias) set(".bias", Constant{0.0}, 0);
        break;
      case LayerKind::Dense:
        set(".weight", Normal{0.0, weight_std(l.in_features)}, layer_seed);
        set(".bias", Constant{0.0}, 0);
        break;
      case LayerKind::BatchNorm2d: {
        set(".gamma", scheme == InitScheme::Dcgan ? Fill{Normal{1.0, 0.02}} : Fill{Constant{1.0}}, layer_seed);
        set(".beta", Constant{0.0}, 0);
        auto rm = buffers_.at(l.name + ".running_mean").mutable_data();
        auto rv = buffers_.at(l.name + ".running_var").mutable_data();
        std::fill(rm.begin(), rm.end(), T(0));
        std::fill(rv.begin(), rv.end(), T(1));
        break;
      }
      default:
        break;
    }
  }
}

namespace {

LayerDesc conv(std::string name, std::size_t in, std::size_t out, std::size_t k, std::size_t s, std::size_t p,
               Activation act, bool bias = true) {
  LayerDesc l;
  l.kind = LayerKind::Conv2d;
  l.name = std::move(name);
  l.in_channels = in;
  l.out_channels = out;
  l.kernel = k;
  l.stride = s;
  l.padding = p;
  l.activation = act;
  l.bias = bias;
  return l;
}

LayerDesc simple(LayerKind kind, std::string name, Activation act = Activation::None) {
  LayerDesc l;
  l.kind = kind;
  l.name = std::move(name);
  l.activation = act;
  return l;
}

LayerDesc batchnorm(std::string name, std::size_t channels, Activation act) {
  LayerDesc l = simple(LayerKind::BatchNorm2d, std::move(name), act);
  l.in_channels = channels;
  return l;
}

LayerDesc dense_layer(std::string name, std::size_t in, std::size_t out, Activation act) {
  LayerDesc l = simple(LayerKind::Dense, std::move(name), act);
  l.in_features = in;
  l.out_features = out;
  return l;
}

bool is_power_of_two(std::size_t v) { return v && !(v & (v - 1)); }

void check_gan_resolution(const ImageShape& s) {
  if (s.height != s.width || !is_power_of_two(s.height) || s.height < 16) {
    throw InvalidShapeError("GAN resolution must be square, a power of two and >= 16, got " +
                            std::to_string(s.height) + "x" + std::to_string(s.width));
  }
  if (s.channels == 0) throw InvalidShapeError("GAN images need at least one channel");
}

std::size_t log2_exact(std::size_t v) {
  std::size_t r = 0;
  while (v > 1) {
    v >>= 1;
    ++r;
  }
  return r;
}

}  // namespace

template <typename T>
Network<T> build_modified_vggnet(const ImageShape& input, double width_scale, std::size_t head_units,
                                 std::uint64_t seed, InitScheme scheme) {
  if (input.height % 32 != 0 || input.width % 32 != 0 || input.height == 0 || input.width == 0) {
    throw InvalidShapeError("modified VGGNet input must be divisible by 32, got " + std::to_string(input.height) +
                            "x" + std::to_string(input.width));
  }
  if (head_units == 0) throw InvalidArgumentError("head_units must be positive");
  static const std::vector<std::vector<std::size_t>> kBlocks = {
      {64, 64}, {128, 128}, {256, 256, 256}, {512, 512, 512}, {512, 512, 512, 512}};
  std::vector<LayerDesc> layers;
  std::size_t channels = input.channels;
  for (std::size_t b = 0; b < kBlocks.size(); ++b) {
    for (std::size_t i = 0; i < kBlocks[b].size(); ++i) {
      const std::size_t out = scaled_width(kBlocks[b][i], width_scale);
      layers.push_back(conv("conv" + std::to_string(b + 1) + "_" + std::to_string(i + 1), channels, out, 3, 1, 1,
                            Activation::Relu));
      channels = out;
    }
    layers.push_back(simple(LayerKind::MaxPool2d, "pool" + std::to_string(b + 1)));
  }
  layers.push_back(simple(LayerKind::Flatten, "flatten"));
  const std::size_t flat = channels * (input.height / 32) * (input.width / 32);
  layers.push_back(dense_layer("fc1", flat, head_units, Activation::Relu));
  layers.push_back(dense_layer("fc2", head_units, 1, Activation::Sigmoid));
  Network<T> net("modified_vggnet", input.as_shape(), std::move(layers));
  net.initialize(seed, scheme);
  return net;
}

template <typename T>
Network<T> build_dcgan_generator(const LatentSpec& latent, const ImageShape& out, double width_scale,
                                 std::uint64_t seed) {
  if (latent.z_dim == 0) throw InvalidArgumentError("z_dim must be positive");
  check_gan_resolution(out);
  const std::size_t upsamples = log2_exact(out.height / 4);
  std::size_t channels = scaled_width(512, width_scale);
  std::vector<LayerDesc> layers;
  layers.push_back(dense_layer("project", latent.z_dim, channels * 16, Activation::None));
  LayerDesc reshape = simple(LayerKind::Reshape, "reshape");
  reshape.reshape_to = {channels, 4, 4};
  layers.push_back(reshape);
  layers.push_back(batchnorm("project_bn", channels, Activation::Relu));
  for (std::size_t i = 0; i < upsamples; ++i) {
    const bool last = i + 1 == upsamples;
    const std::size_t next = last ? out.channels : std::max<std::size_t>(1, channels / 2);
    LayerDesc up;
    up.kind = LayerKind::ConvTranspose2d;
    up.name = "up" + std::to_string(i + 1);
    up.in_channels = channels;
    up.out_channels = next;
    up.kernel = 4;
    up.stride = 2;
    up.padding = 1;
    // Hidden layers feed batchnorm, which absorbs any bias.
    up.bias = last;
    up.activation = last ? Activation::Tanh : Activation::None;
    layers.push_back(up);
    if (!last) layers.push_back(batchnorm("up" + std::to_string(i + 1) + "_bn", next, Activation::Relu));
    channels = next;
  }
  Network<T> net("dcgan_generator", {latent.z_dim}, std::move(layers));
  net.initialize(seed, InitScheme::Dcgan);
  return net;
}

template <typename T>
Network<T> build_dcgan_discriminator(const ImageShape& in, double width_scale, std::uint64_t seed) {
  check_gan_resolution(in);
  const std::size_t downsamples = log2_exact(in.height / 4);
  std::vector<LayerDesc> layers;
  std::size_t channels = in.channels;
  std::size_t width = scaled_width(64, width_scale);
  for (std::size_t i = 0; i < downsamples; ++i) {
    const std::string name = "down" + std::to_string(i + 1);
    if (i == 0) {
      auto l = conv(name, channels, width, 4, 2, 1, Activation::LeakyRelu, false);
      layers.push_back(l);
    } else {
      layers.push_back(conv(name, channels, width, 4, 2, 1, Activation::None, false));
      layers.push_back(batchnorm(name + "_bn", width, Activation::LeakyRelu));
    }
    channels = width;
    width *= 2;
  }
  layers.push_back(conv("score", channels, 1, 4, 1, 0, Activation::Sigmoid));
  layers.push_back(simple(LayerKind::Flatten, "flatten"));
  Network<T> net("dcgan_discriminator", in.as_shape(), std::move(layers));
  net.initialize(seed, InitScheme::Dcgan);
  return net;
}

template <typename T>
void check_gan_duality(const Network<T>& generator, const Network<T>& discriminator) {
  if (generator.output_shape() != discriminator.input_shape()) {
    throw InvalidShapeError("discriminator input " + to_string(discriminator.input_shape()) +
                            " does not match generator output " + to_string(generator.output_shape()));
  }
}

template <typename T>
Tensor<T> forward(Network<T>& net, const Tensor<T>& batch, Mode mode) {
  const Shape& in = net.input_shape();
  if (batch.rank() != in.size() + 1 || !std::equal(in.begin(), in.end(), batch.shape().begin() + 1)) {
    throw InvalidShapeError("network expects [n," + to_string(in).substr(1) + ", got " + to_string(batch.shape()));
  }
  std::optional<NoGradGuard> no_grad;
  if (mode == Mode::Eval) no_grad.emplace();

  auto& params = net.params();
  Tensor<T> x = batch;
  for (const auto& l : net.layers()) {
    switch (l.kind) {
      case LayerKind::Conv2d: {
        Conv2dParams<T> cp{params.at(l.name + ".weight"), {}, l.stride, l.padding};
        if (l.bias) cp.bias = params.at(l.name + ".bias");
        x = conv2d(x, cp);
        break;
      }
      case LayerKind::ConvTranspose2d:
        x = conv_transpose2d(x, params.at(l.name + ".weight"), l.stride, l.padding,
                             l.bias ? params.at(l.name + ".bias") : Tensor<T>{});
        break;
      case LayerKind::BatchNorm2d: {
        BatchNormState<T> st{params.at(l.name + ".gamma"), params.at(l.name + ".beta"),
                             net.buffers().at(l.name + ".running_mean"), net.buffers().at(l.name + ".running_var")};
        x = batchnorm2d(x, st, mode == Mode::Train ? BnMode::Train : BnMode::Eval);
        break;
      }
      case LayerKind::MaxPool2d: x = maxpool2d(x); break;
      case LayerKind::Flatten: x = flatten(x); break;
      case LayerKind::Dense:
        x = dense(x, params.at(l.name + ".weight"), params.at(l.name + ".bias"));
        break;
      case LayerKind::Reshape: {
        Shape target{x.dim(0)};
        target.insert(target.end(), l.reshape_to.begin(), l.reshape_to.end());
        x = reshape(x, target);
        break;
      }
    }
    switch (l.activation) {
      case Activation::None: break;
      case Activation::Relu: x = relu(x); break;
      case Activation::LeakyRelu: x = leaky_relu(x, static_cast<T>(l.alpha)); break;
      case Activation::Tanh: x = tanh(x); break;
      case Activation::Sigmoid: x = sigmoid(x); break;
    }
  }
  return x;
}

#define SPOOFSMITH_INSTANTIATE(T)                                                                         \
  template class Network<T>;                                                                              \
  template Network<T> build_modified_vggnet(const ImageShape&, double, std::size_t, std::uint64_t,       \
                                            InitScheme);                                                  \
  template Network<T> build_dcgan_generator(const LatentSpec&, const ImageShape&, double, std::uint64_t); \
  template Network<T> build_dcgan_discriminator(const ImageShape&, double, std::uint64_t);                \
  template void check_gan_duality(const Network<T>&, const Network<T>&);                                  \
  template Tensor<T> forward(Network<T>&, const Tensor<T>&, Mode);

SPOOFSMITH_INSTANTIATE(float)
SPOOFSMITH_INSTANTIATE(double)

#undef SPOOFSMITH_INSTANTIATE

}  // namespace spoofsmith
