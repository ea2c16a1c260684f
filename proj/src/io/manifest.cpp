#include "spoofsmith/io/manifest.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "spoofsmith/error.hpp"

namespace spoofsmith {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(Label label) { return label == Label::BonaFide ? "bona_fide" : "attack"; }

std::string to_string(EyeSide eye) {
  switch (eye) {
    case EyeSide::Left: return "left";
    case EyeSide::Right: return "right";
    case EyeSide::Unknown: return "unknown";
  }
  return "unknown";
}

std::optional<Label> parse_label(const std::string& text) {
  if (text == "bona_fide") return Label::BonaFide;
  if (text == "attack") return Label::Attack;
  return std::nullopt;
}

std::optional<EyeSide> parse_eye(const std::string& text) {
  if (text == "left") return EyeSide::Left;
  if (text == "right") return EyeSide::Right;
  if (text == "unknown") return EyeSide::Unknown;
  return std::nullopt;
}

fs::path ManifestEntry::resolved_path() const {
  const fs::path p(path);
  if (p.is_absolute() || base_dir.empty()) return p.lexically_normal();
  return (base_dir / p).lexically_normal();
}

std::size_t DatasetManifest::count(Label label) const {
  std::size_t n = 0;
  for (const auto& e : entries) n += e.label == label;
  return n;
}

namespace {

ManifestEntry parse_entry(const std::string& line, std::size_t line_no, const fs::path& base_dir,
                          const std::string& source) {
  auto fail = [&](const std::string& why) -> ParseError {
    return ParseError(source + ":" + std::to_string(line_no) + ": " + why);
  };
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw fail(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw fail("expected a JSON object");

  ManifestEntry entry;
  entry.base_dir = base_dir;
  auto path = j.find("path");
  if (path == j.end() || !path->is_string() || path->get<std::string>().empty()) {
    throw fail("missing or empty \"path\"");
  }
  entry.path = path->get<std::string>();

  auto label = j.find("label");
  if (label == j.end() || !label->is_string()) throw fail("missing \"label\"");
  auto parsed_label = parse_label(label->get<std::string>());
  if (!parsed_label) throw fail("label \"" + label->get<std::string>() + "\" is not bona_fide or attack");
  entry.label = *parsed_label;

  if (auto eye = j.find("eye"); eye != j.end() && !eye->is_null()) {
    if (!eye->is_string()) throw fail("\"eye\" must be a string");
    auto parsed = parse_eye(eye->get<std::string>());
    if (!parsed) throw fail("eye \"" + eye->get<std::string>() + "\" is not left, right or unknown");
    entry.eye = *parsed;
  }
  if (auto subset = j.find("subset"); subset != j.end() && !subset->is_null()) {
    if (!subset->is_string()) throw fail("\"subset\" must be a string");
    entry.subset = subset->get<std::string>();
  }
  for (const char* key : {"path", "label", "eye", "subset"}) j.erase(key);
  entry.extra = std::move(j);
  return entry;
}

}  // namespace

DatasetManifest parse_manifest(std::istream& in, const fs::path& base_dir, const std::string& source) {
  DatasetManifest manifest;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    manifest.entries.push_back(parse_entry(line, line_no, base_dir, source));
  }
  validate_manifest(manifest);
  return manifest;
}

DatasetManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  return parse_manifest(in, path.parent_path(), path.string());
}

void write_manifest(std::ostream& out, const DatasetManifest& manifest) {
  for (const auto& e : manifest.entries) {
    json j = e.extra.is_object() ? e.extra : json::object();
    j["path"] = e.path;
    j["label"] = to_string(e.label);
    j["eye"] = to_string(e.eye);
    if (e.subset) j["subset"] = *e.subset;
    out << j.dump() << '\n';
  }
}

void save_manifest(const DatasetManifest& manifest, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write manifest " + path.string());
  write_manifest(out, manifest);
  if (!out) throw IoError("failed writing manifest " + path.string());
}

void validate_manifest(const DatasetManifest& manifest) {
  std::set<std::string> seen;
  for (const auto& e : manifest.entries) {
    if (!seen.insert(e.resolved_path().string()).second) {
      throw ValidationError("duplicate manifest path '" + e.path + "'");
    }
  }
}

DatasetManifest merge_manifests(const DatasetManifest& a, const DatasetManifest& b) {
  DatasetManifest out;
  for (const auto* m : {&a, &b}) {
    for (ManifestEntry e : m->entries) {
      e.path = fs::absolute(e.resolved_path()).lexically_normal().string();
      e.base_dir.clear();
      out.entries.push_back(std::move(e));
    }
  }
  validate_manifest(out);
  return out;
}

}  // namespace spoofsmith
