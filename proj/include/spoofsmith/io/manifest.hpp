#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace spoofsmith {

enum class Label { BonaFide, Attack };
enum class EyeSide { Left, Right, Unknown };

std::string to_string(Label label);
std::string to_string(EyeSide eye);
/// Accepts exactly "bona_fide" and "attack".
std::optional<Label> parse_label(const std::string& text);
std::optional<EyeSide> parse_eye(const std::string& text);

struct ManifestEntry {
  std::string path;
  Label label = Label::BonaFide;
  EyeSide eye = EyeSide::Unknown;
  std::optional<std::string> subset;
  /// Fields this version does not know about; written back unchanged.
  nlohmann::json extra = nlohmann::json::object();
  /// Directory relative paths are resolved against (not serialized).
  std::filesystem::path base_dir;

  [[nodiscard]] std::filesystem::path resolved_path() const;
};

/// One JSON object per line:
///   {"path": "...", "label": "bona_fide"|"attack", "eye": "left"|"right"|"unknown", "subset": "..."}
struct DatasetManifest {
  std::vector<ManifestEntry> entries;

  [[nodiscard]] std::size_t size() const { return entries.size(); }
  [[nodiscard]] bool empty() const { return entries.empty(); }
  [[nodiscard]] std::size_t count(Label label) const;
};

/// Parses JSON Lines. Blank lines are skipped. Malformed lines raise
/// ParseError naming the line; duplicate paths raise ValidationError.
DatasetManifest parse_manifest(std::istream& in, const std::filesystem::path& base_dir = {},
                               const std::string& source = "<stream>");
DatasetManifest load_manifest(const std::filesystem::path& path);

void write_manifest(std::ostream& out, const DatasetManifest& manifest);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

/// Throws ValidationError if two entries resolve to the same file.
void validate_manifest(const DatasetManifest& manifest);

/// Concatenation with every path made absolute; duplicates are rejected.
DatasetManifest merge_manifests(const DatasetManifest& a, const DatasetManifest& b);

}  // namespace spoofsmith
