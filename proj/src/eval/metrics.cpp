#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "spoofsmith/error.hpp"
#include "spoofsmith/eval.hpp"

namespace spoofsmith {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void check_scores(const ScoredSet& set) {
  for (const auto& s : set) {
    if (!std::isfinite(s.score)) throw InvalidArgumentError("scores must be finite");
  }
}

std::optional<double> ratio(std::uint64_t num, std::uint64_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> optional_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, end);
}

EvalReport confusion(const ScoredSet& set, double threshold) {
  if (set.empty()) throw EmptyInputError("cannot score an empty set");
  check_scores(set);
  EvalReport r;
  r.threshold = threshold;
  for (const auto& s : set) {
    const bool predicted_positive = s.score >= threshold;
    if (s.label == Label::BonaFide) {
      ++(predicted_positive ? r.confusion.tp : r.confusion.fn);
    } else {
      ++(predicted_positive ? r.confusion.fp : r.confusion.tn);
    }
  }
  const auto& c = r.confusion;
  r.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
  r.tpr = ratio(c.tp, c.tp + c.fn);
  r.fpr = ratio(c.fp, c.fp + c.tn);
  return r;
}

std::vector<RocPoint> roc_curve(const ScoredSet& set) {
  check_scores(set);
  std::vector<double> pos, neg;
  for (const auto& s : set) (s.label == Label::BonaFide ? pos : neg).push_back(s.score);
  if (pos.empty() || neg.empty()) throw DegenerateInputError("ROC needs both bona-fide and attack samples");

  std::vector<ScoredSample> sorted(set.begin(), set.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.score > b.score; });
  const double p = static_cast<double>(pos.size());
  const double n = static_cast<double>(neg.size());
  std::vector<RocPoint> roc{{0.0, 0.0}};
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    const double score = sorted[i].score;
    for (; i < sorted.size() && sorted[i].score == score; ++i) {
      ++(sorted[i].label == Label::BonaFide ? tp : fp);
    }
    roc.push_back({static_cast<double>(fp) / n, static_cast<double>(tp) / p});
  }
  return roc;
}

double auc(std::span<const RocPoint> roc) {
  if (roc.size() < 2) throw InvalidArgumentError("AUC needs at least two ROC points");
  double area = 0.0;
  for (std::size_t i = 1; i < roc.size(); ++i) {
    area += (roc[i].fpr - roc[i - 1].fpr) * (roc[i].tpr + roc[i - 1].tpr) * 0.5;
  }
  return area;
}

EvalReport evaluate(const ScoredSet& set, double threshold) {
  EvalReport r = confusion(set, threshold);
  if (r.confusion.tp + r.confusion.fn > 0 && r.confusion.fp + r.confusion.tn > 0) {
    r.roc = roc_curve(set);
    r.auc = auc(r.roc);
  }
  return r;
}

json report_to_json(const EvalReport& r) {
  json roc = json::array();
  for (const auto& pt : r.roc) roc.push_back({pt.fpr, pt.tpr});
  return json{{"threshold", r.threshold},
              {"confusion", {{"tp", r.confusion.tp}, {"fp", r.confusion.fp}, {"tn", r.confusion.tn}, {"fn", r.confusion.fn}}},
              {"accuracy", r.accuracy},
              {"tpr", optional_json(r.tpr)},
              {"fpr", optional_json(r.fpr)},
              {"roc", roc},
              {"auc", optional_json(r.auc)}};
}

EvalReport report_from_json(const json& j) {
  try {
    EvalReport r;
    r.threshold = j.at("threshold").get<double>();
    const auto& c = j.at("confusion");
    r.confusion = {c.at("tp").get<std::uint64_t>(), c.at("fp").get<std::uint64_t>(), c.at("tn").get<std::uint64_t>(),
                   c.at("fn").get<std::uint64_t>()};
    r.accuracy = j.at("accuracy").get<double>();
    r.tpr = optional_from(j.at("tpr"));
    r.fpr = optional_from(j.at("fpr"));
    for (const auto& pt : j.at("roc")) r.roc.push_back({pt.at(0).get<double>(), pt.at(1).get<double>()});
    r.auc = optional_from(j.at("auc"));
    return r;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed report: ") + e.what());
  }
}

std::string roc_to_csv(std::span<const RocPoint> roc) {
  std::string out = "fpr,tpr\n";
  for (const auto& pt : roc) out += format_double(pt.fpr) + "," + format_double(pt.tpr) + "\n";
  return out;
}

void emit_report(const EvalReport& report, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
  write_text(dir / "report.json", report_to_json(report).dump(2) + "\n");
  write_text(dir / "roc.csv", roc_to_csv(report.roc));
}

EvalReport load_report(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return report_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace spoofsmith
