#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <sstream>

#include "spoofsmith/eval.hpp"
#include "spoofsmith/rng.hpp"
#include "spoofsmith/verify/oracles.hpp"
#include "test_support.hpp"

namespace spoofsmith {
namespace {

ScoredSet random_set(Rng& rng, std::size_t n, bool coarse) {
  ScoredSet set;
  for (std::size_t i = 0; i < n; ++i) {
    // Coarse scores force plenty of ties.
    const double s = coarse ? double(rng.below(6)) / 5.0 : rng.uniform();
    set.push_back({s, rng.bernoulli(0.5) ? Label::BonaFide : Label::Attack});
  }
  return set;
}

bool has_both_labels(const ScoredSet& set) {
  const auto bf = std::count_if(set.begin(), set.end(), [](const auto& s) { return s.label == Label::BonaFide; });
  return bf > 0 && bf < static_cast<std::ptrdiff_t>(set.size());
}

TEST(Confusion, ThirtyEightOfForty) {
  ScoredSet set;
  for (int i = 0; i < 20; ++i) set.push_back({i < 19 ? 0.9 : 0.1, Label::BonaFide});
  for (int i = 0; i < 20; ++i) set.push_back({i < 19 ? 0.1 : 0.9, Label::Attack});
  const auto r = confusion(set, 0.5);
  EXPECT_DOUBLE_EQ(r.accuracy, 0.95);
  EXPECT_EQ(r.confusion, (Confusion{19, 1, 19, 1}));
}

TEST(Confusion, PerfectSeparation) {
  const ScoredSet set{{1.0, Label::BonaFide}, {1.0, Label::BonaFide}, {0.0, Label::Attack}};
  const auto r = confusion(set, 0.5);
  EXPECT_EQ(r.accuracy, 1.0);
  EXPECT_EQ(r.tpr, 1.0);
  EXPECT_EQ(r.fpr, 0.0);
}

TEST(Confusion, ThresholdIsInclusive) {
  const auto r = confusion({{0.5, Label::BonaFide}, {0.5, Label::Attack}}, 0.5);
  EXPECT_EQ(r.confusion, (Confusion{1, 1, 0, 0}));
}

TEST(Confusion, UndefinedRatesAreEmpty) {
  const auto r = confusion({{0.7, Label::BonaFide}}, 0.5);
  EXPECT_EQ(r.tpr, 1.0);
  EXPECT_FALSE(r.fpr.has_value());
  EXPECT_THROW(confusion({}, 0.5), EmptyInputError);
  EXPECT_THROW(confusion({{std::nan(""), Label::Attack}}, 0.5), InvalidArgumentError);
}

TEST(Confusion, MatchesBruteForceRecount) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto set = random_set(rng, 200, trial % 2);
    const double thr = rng.uniform();
    std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
    for (const auto& s : set) {
      const bool pos = s.score >= thr, bf = s.label == Label::BonaFide;
      tp += pos && bf;
      fp += pos && !bf;
      tn += !pos && !bf;
      fn += !pos && bf;
    }
    const auto r = confusion(set, thr);
    EXPECT_EQ(r.confusion, (Confusion{tp, fp, tn, fn}));
    EXPECT_EQ(r.confusion.total(), set.size());
    EXPECT_DOUBLE_EQ(r.accuracy, double(tp + tn) / double(set.size()));
  }
}

TEST(Roc, PerfectAndTiedCurves) {
  const ScoredSet perfect{{1.0, Label::BonaFide}, {1.0, Label::BonaFide}, {0.0, Label::Attack}};
  EXPECT_EQ(roc_curve(perfect), (std::vector<RocPoint>{{0, 0}, {0, 1}, {1, 1}}));
  EXPECT_EQ(auc(roc_curve(perfect)), 1.0);
  // Distinct scores keep their own (collinear) points.
  const ScoredSet spread{{0.9, Label::BonaFide}, {0.8, Label::BonaFide}, {0.2, Label::Attack}};
  EXPECT_EQ(roc_curve(spread), (std::vector<RocPoint>{{0, 0}, {0, 0.5}, {0, 1}, {1, 1}}));
  EXPECT_EQ(auc(roc_curve(spread)), 1.0);
  const ScoredSet tied{{0.4, Label::BonaFide}, {0.4, Label::Attack}, {0.4, Label::Attack}};
  EXPECT_EQ(roc_curve(tied), (std::vector<RocPoint>{{0, 0}, {1, 1}}));
  EXPECT_EQ(auc(roc_curve(tied)), 0.5);
}

TEST(Roc, SingleLabelIsDegenerate) {
  EXPECT_THROW(roc_curve({{0.3, Label::Attack}, {0.6, Label::Attack}}), DegenerateInputError);
  const std::vector<RocPoint> one{{0, 0}};
  EXPECT_THROW(auc(one), InvalidArgumentError);
}

TEST(Roc, MatchesThresholdEnumerationAndMannWhitney) {
  Rng rng(5);
  int checked = 0;
  while (checked < 500) {
    const auto set = random_set(rng, 2 + rng.below(63), rng.bernoulli(0.5));
    if (!has_both_labels(set)) continue;
    ++checked;
    const auto roc = roc_curve(set);
    EXPECT_EQ(roc, oracle::brute_force_roc(set));
    EXPECT_EQ(roc.front(), (RocPoint{0, 0}));
    EXPECT_EQ(roc.back(), (RocPoint{1, 1}));
    const double a = auc(roc);
    EXPECT_NEAR(a, oracle::mann_whitney_auc(set), 1e-9);
    EXPECT_GE(a, 0.0);
    EXPECT_LE(a, 1.0);

    auto swapped = set;
    for (auto& s : swapped) {
      s.score = 1.0 - s.score;
      s.label = s.label == Label::BonaFide ? Label::Attack : Label::BonaFide;
    }
    EXPECT_NEAR(auc(roc_curve(swapped)), a, 1e-12);
  }
}

TEST(Roc, RaisingThresholdNeverRaisesRates) {
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const auto set = random_set(rng, 40, trial % 2);
    if (!has_both_labels(set)) continue;
    double prev_tpr = 2, prev_fpr = 2;
    for (double thr = 0.0; thr <= 1.0001; thr += 0.05) {
      const auto r = confusion(set, thr);
      EXPECT_LE(*r.tpr, prev_tpr);
      EXPECT_LE(*r.fpr, prev_fpr);
      prev_tpr = *r.tpr;
      prev_fpr = *r.fpr;
    }
  }
}

TEST(Report, EmitAndReloadAreExact) {
  testing::TempDir dir;
  Rng rng(11);
  auto set = random_set(rng, 64, false);
  set.push_back({0.1, Label::Attack});
  set.push_back({0.9, Label::BonaFide});
  const auto report = evaluate(set, 0.5);
  emit_report(report, dir.path() / "out");
  EXPECT_EQ(load_report(dir.path() / "out" / "report.json"), report);
  EXPECT_EQ(report_from_json(report_to_json(report)), report);

  std::ifstream csv(dir.path() / "out" / "roc.csv");
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "fpr,tpr");
  std::size_t rows = 0;
  while (std::getline(csv, line)) {
    const auto comma = line.find(',');
    EXPECT_EQ(std::stod(line.substr(0, comma)), report.roc[rows].fpr);
    EXPECT_EQ(std::stod(line.substr(comma + 1)), report.roc[rows].tpr);
    ++rows;
  }
  EXPECT_EQ(rows, report.roc.size());
}

TEST(Report, AccuracyKeepsFullPrecision) {
  const double awkward = 1.0 / 3.0;
  EXPECT_EQ(std::stod(format_double(awkward)), awkward);
  EvalReport r;
  r.accuracy = awkward;
  r.confusion = {1, 1, 0, 1};
  EXPECT_EQ(report_from_json(nlohmann::json::parse(report_to_json(r).dump())).accuracy, awkward);
}

TEST(Report, SingleLabelReportHasNullAuc) {
  const auto r = evaluate({{0.9, Label::BonaFide}, {0.2, Label::BonaFide}});
  EXPECT_FALSE(r.auc.has_value());
  EXPECT_TRUE(r.roc.empty());
  EXPECT_TRUE(report_to_json(r)["auc"].is_null());
  EXPECT_TRUE(report_to_json(r)["fpr"].is_null());
}

}  // namespace
}  // namespace spoofsmith
