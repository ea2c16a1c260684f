#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "spoofsmith/io/manifest.hpp"

namespace spoofsmith {

/// Bona fide is the positive class; a score >= threshold predicts it.
struct ScoredSample {
  double score = 0.0;
  Label label = Label::BonaFide;
};
using ScoredSet = std::vector<ScoredSample>;

struct Confusion {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  [[nodiscard]] std::uint64_t total() const { return tp + fp + tn + fn; }
  bool operator==(const Confusion&) const = default;
};

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  bool operator==(const RocPoint&) const = default;
};

/// Rates with a zero denominator are std::nullopt (JSON null). `roc` and
/// `auc` are empty when the set holds only one label.
struct EvalReport {
  double threshold = 0.5;
  Confusion confusion;
  double accuracy = 0.0;
  std::optional<double> tpr;
  std::optional<double> fpr;
  std::vector<RocPoint> roc;
  std::optional<double> auc;

  bool operator==(const EvalReport&) const = default;
};

/// Counts and rates at one threshold. Throws EmptyInputError on an empty set
/// and InvalidArgumentError on non-finite scores.
EvalReport confusion(const ScoredSet& set, double threshold);

/// (0,0), then one point per distinct score in descending order (ties
/// grouped), ending at (1,1). Throws DegenerateInputError unless both labels
/// are present.
std::vector<RocPoint> roc_curve(const ScoredSet& set);

/// Trapezoidal area under the curve. Throws InvalidArgumentError on fewer
/// than two points.
double auc(std::span<const RocPoint> roc);

/// confusion() plus ROC/AUC when both labels are present.
EvalReport evaluate(const ScoredSet& set, double threshold = 0.5);

nlohmann::json report_to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);

/// "fpr,tpr" header then one shortest round-trip row per point.
std::string roc_to_csv(std::span<const RocPoint> roc);

/// Writes report.json and roc.csv into `dir` (created if missing).
void emit_report(const EvalReport& report, const std::filesystem::path& dir);
EvalReport load_report(const std::filesystem::path& path);

std::string format_double(double value);

}  // namespace spoofsmith
