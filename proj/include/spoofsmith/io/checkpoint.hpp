#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "spoofsmith/models.hpp"
#include "spoofsmith/optim.hpp"
#include "spoofsmith/rng.hpp"
#include "spoofsmith/tensor.hpp"

namespace spoofsmith {

inline constexpr std::uint8_t kCheckpointVersion = 1;

/// File layout: "PADC" | u8 version | u64 LE header length | JSON header |
/// concatenated TensorBlobs. The header holds the network descriptor,
/// metadata, RNG state and a directory of {name, offset, size} entries with
/// offsets relative to the start of the blob section.
///
/// Tensor names: "param/<p>", "buffer/<b>", "adam/m/<p>", "adam/v/<p>".
struct Checkpoint {
  nlohmann::json network = nlohmann::json::object();
  nlohmann::json metadata = nlohmann::json::object();
  RngState rng;
  std::map<std::string, Tensor<float>> tensors;
};

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& checkpoint);
/// CorruptionError on truncation or trailing bytes; UnsupportedVersionError
/// on an unknown version. Nothing is returned on failure.
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

nlohmann::json network_to_json(const NetworkSpec& net);
/// Rebuilds the layer stack; parameters are allocated but not initialized.
NetworkSpec network_from_json(const nlohmann::json& descriptor);

/// Stores the descriptor plus every parameter and buffer.
void store_network(Checkpoint& checkpoint, const NetworkSpec& net);
NetworkSpec restore_network(const Checkpoint& checkpoint);

void store_adam(Checkpoint& checkpoint, const AdamState<float>& state);
AdamState<float> restore_adam(const Checkpoint& checkpoint, const NetworkSpec& net);

/// FNV-1a 64 of the compact JSON dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& config);
/// Throws ConfigMismatchError if metadata.config_hash differs from `expected`.
void require_config_hash(const Checkpoint& checkpoint, const std::string& expected);

}  // namespace spoofsmith
