#include "spoofsmith/io/checkpoint.hpp"

#include <cstdio>
#include <cstring>

#include "spoofsmith/error.hpp"
#include "spoofsmith/io/blob.hpp"

namespace spoofsmith {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint8_t kMagic[4] = {'P', 'A', 'D', 'C'};
constexpr std::size_t kPrefix = 4 + 1 + 8;

const std::string kParam = "param/";
const std::string kBuffer = "buffer/";
const std::string kAdamM = "adam/m/";
const std::string kAdamV = "adam/v/";

json layer_to_json(const LayerDesc& l) {
  return json{{"kind", to_string(l.kind)},
              {"name", l.name},
              {"activation", to_string(l.activation)},
              {"alpha", l.alpha},
              {"in_channels", l.in_channels},
              {"out_channels", l.out_channels},
              {"kernel", l.kernel},
              {"stride", l.stride},
              {"padding", l.padding},
              {"bias", l.bias},
              {"in_features", l.in_features},
              {"out_features", l.out_features},
              {"reshape_to", l.reshape_to}};
}

LayerDesc layer_from_json(const json& j) {
  LayerDesc l;
  l.kind = parse_layer_kind(j.at("kind").get<std::string>());
  l.name = j.at("name").get<std::string>();
  l.activation = parse_activation(j.at("activation").get<std::string>());
  l.alpha = j.at("alpha").get<double>();
  l.in_channels = j.at("in_channels").get<std::size_t>();
  l.out_channels = j.at("out_channels").get<std::size_t>();
  l.kernel = j.at("kernel").get<std::size_t>();
  l.stride = j.at("stride").get<std::size_t>();
  l.padding = j.at("padding").get<std::size_t>();
  l.bias = j.at("bias").get<bool>();
  l.in_features = j.at("in_features").get<std::size_t>();
  l.out_features = j.at("out_features").get<std::size_t>();
  l.reshape_to = j.at("reshape_to").get<Shape>();
  return l;
}

void copy_into(Tensor<float>& dst, const Tensor<float>& src, const std::string& name) {
  if (dst.shape() != src.shape()) {
    throw CorruptionError("checkpoint tensor '" + name + "' has shape " + to_string(src.shape()) + ", expected " +
                          to_string(dst.shape()));
  }
  auto d = dst.mutable_data();
  auto s = src.data();
  std::copy(s.begin(), s.end(), d.begin());
}

const Tensor<float>& find_tensor(const Checkpoint& c, const std::string& name) {
  auto it = c.tensors.find(name);
  if (it == c.tensors.end()) throw CorruptionError("checkpoint is missing tensor '" + name + "'");
  return it->second;
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& c) {
  std::vector<std::uint8_t> blobs;
  json directory = json::array();
  for (const auto& [name, tensor] : c.tensors) {
    const std::size_t offset = blobs.size();
    append_tensor_blob(blobs, tensor);
    directory.push_back({{"name", name}, {"offset", offset}, {"size", blobs.size() - offset}});
  }
  const json header{{"blobs", directory},
                    {"metadata", c.metadata},
                    {"network", c.network},
                    {"rng", {{"key", c.rng.key}, {"counter", c.rng.counter}}}};
  const std::string text = header.dump();

  std::vector<std::uint8_t> out(kPrefix + text.size() + blobs.size());
  std::memcpy(out.data(), kMagic, 4);
  out[4] = kCheckpointVersion;
  const std::uint64_t len = text.size();
  for (int i = 0; i < 8; ++i) out[5 + i] = static_cast<std::uint8_t>(len >> (8 * i));
  std::memcpy(out.data() + kPrefix, text.data(), text.size());
  if (!blobs.empty()) std::memcpy(out.data() + kPrefix + text.size(), blobs.data(), blobs.size());
  return out;
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 5) throw CorruptionError("checkpoint truncated in prefix");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw CorruptionError("bad checkpoint magic");
  if (bytes[4] != kCheckpointVersion) {
    throw UnsupportedVersionError("checkpoint version " + std::to_string(bytes[4]) + " is not supported");
  }
  if (bytes.size() < kPrefix) throw CorruptionError("checkpoint truncated in prefix");
  std::uint64_t len = 0;
  for (int i = 0; i < 8; ++i) len |= static_cast<std::uint64_t>(bytes[5 + i]) << (8 * i);
  if (len > bytes.size() - kPrefix) throw CorruptionError("checkpoint truncated in header");

  json header;
  try {
    header = json::parse(bytes.begin() + kPrefix, bytes.begin() + kPrefix + static_cast<std::ptrdiff_t>(len));
  } catch (const json::parse_error& e) {
    throw CorruptionError(std::string("checkpoint header is not valid JSON: ") + e.what());
  }

  const auto blob_section = bytes.subspan(kPrefix + len);
  Checkpoint c;
  try {
    c.network = header.at("network");
    c.metadata = header.at("metadata");
    c.rng.key = header.at("rng").at("key").get<std::uint64_t>();
    c.rng.counter = header.at("rng").at("counter").get<std::uint64_t>();
    std::size_t expected_offset = 0;
    for (const auto& entry : header.at("blobs")) {
      const auto name = entry.at("name").get<std::string>();
      const auto offset = entry.at("offset").get<std::uint64_t>();
      const auto size = entry.at("size").get<std::uint64_t>();
      if (offset != expected_offset) throw CorruptionError("checkpoint blob directory is not contiguous");
      if (offset > blob_section.size() || size > blob_section.size() - offset) {
        throw CorruptionError("checkpoint truncated in blob '" + name + "'");
      }
      if (!c.tensors.emplace(name, decode_tensor_blob<float>(blob_section.subspan(offset, size))).second) {
        throw CorruptionError("checkpoint has duplicate blob '" + name + "'");
      }
      expected_offset = offset + size;
    }
    if (expected_offset != blob_section.size()) throw CorruptionError("checkpoint has trailing bytes");
  } catch (const json::exception& e) {
    throw CorruptionError(std::string("checkpoint header is malformed: ") + e.what());
  } catch (const ParseError& e) {
    throw CorruptionError(std::string("checkpoint blob is malformed: ") + e.what());
  }
  return c;
}

void save_checkpoint(const Checkpoint& checkpoint, const fs::path& path) {
  write_file_bytes(path, encode_checkpoint(checkpoint));
}

Checkpoint load_checkpoint(const fs::path& path) { return decode_checkpoint(read_file_bytes(path)); }

json network_to_json(const NetworkSpec& net) {
  json layers = json::array();
  for (const auto& l : net.layers()) layers.push_back(layer_to_json(l));
  return json{{"kind", net.kind()}, {"input_shape", net.input_shape()}, {"layers", layers}};
}

NetworkSpec network_from_json(const json& j) {
  try {
    std::vector<LayerDesc> layers;
    for (const auto& l : j.at("layers")) layers.push_back(layer_from_json(l));
    return NetworkSpec(j.at("kind").get<std::string>(), j.at("input_shape").get<Shape>(), std::move(layers));
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed network descriptor: ") + e.what());
  }
}

void store_network(Checkpoint& c, const NetworkSpec& net) {
  c.network = network_to_json(net);
  for (const auto& [name, t] : net.params()) c.tensors[kParam + name] = t.detach();
  for (const auto& [name, t] : net.buffers()) c.tensors[kBuffer + name] = t.detach();
}

NetworkSpec restore_network(const Checkpoint& c) {
  NetworkSpec net;
  try {
    net = network_from_json(c.network);
  } catch (const ParseError& e) {
    throw CorruptionError(e.what());
  }
  for (auto& [name, t] : net.params()) copy_into(t, find_tensor(c, kParam + name), kParam + name);
  for (auto& [name, t] : net.buffers()) copy_into(t, find_tensor(c, kBuffer + name), kBuffer + name);
  return net;
}

void store_adam(Checkpoint& c, const AdamState<float>& state) {
  for (const auto& [name, mom] : state.moments) {
    c.tensors[kAdamM + name] = mom.m.detach();
    c.tensors[kAdamV + name] = mom.v.detach();
  }
  c.metadata["adam_step"] = state.step;
}

AdamState<float> restore_adam(const Checkpoint& c, const NetworkSpec& net) {
  auto state = AdamState<float>::for_params(net.params());
  for (auto& [name, mom] : state.moments) {
    copy_into(mom.m, find_tensor(c, kAdamM + name), kAdamM + name);
    copy_into(mom.v, find_tensor(c, kAdamV + name), kAdamV + name);
  }
  auto step = c.metadata.find("adam_step");
  if (step == c.metadata.end() || !step->is_number_unsigned()) {
    throw CorruptionError("checkpoint metadata lacks adam_step");
  }
  state.step = step->get<std::uint64_t>();
  return state;
}

std::string config_hash(const json& config) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : config.dump()) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void require_config_hash(const Checkpoint& c, const std::string& expected) {
  auto it = c.metadata.find("config_hash");
  const std::string actual = it != c.metadata.end() && it->is_string() ? it->get<std::string>() : "";
  if (actual != expected) {
    throw ConfigMismatchError("checkpoint was written with config " + (actual.empty() ? "<none>" : actual) +
                              ", current config is " + expected);
  }
}

}  // namespace spoofsmith
