#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "shroom/errors.hpp"
#include "shroom/evaluation.hpp"
#include "shroom/util.hpp"

namespace shroom {
namespace {

constexpr Label H = Label::kHallucination;
constexpr Label N = Label::kNotHallucination;

// Independent oracle: rank by counting, then textbook Pearson.
double oracle_rho(const std::vector<double>& x, const std::vector<double>& y) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      double less = 0, equal = 0;
      for (double w : v) {
        less += w < v[i];
        equal += w == v[i];
      }
      r[i] = less + (equal + 1.0) / 2.0;
    }
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += rx[i] / n, my += ry[i] / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

TEST(Accuracy, Basics) {
  const std::vector<Label> p = {H, N, H, N}, g = {H, H, H, N};
  EXPECT_DOUBLE_EQ(accuracy(p, g), 0.75);
  EXPECT_THROW(accuracy(std::span(p).first(3), g), AlignmentError);
  EXPECT_THROW(accuracy({}, {}), InputError);
}

TEST(Ranks, TiesShareTheMean) {
  const std::vector<double> v = {0.2, 0.4, 0.2, 1.0};
  EXPECT_EQ(average_ranks(v), (std::vector<double>{1.5, 3.0, 1.5, 4.0}));
}

TEST(Spearman, KnownValues) {
  const std::vector<double> x = {0.1, 0.4, 0.35, 0.8}, y = {0.0, 0.2, 0.2, 1.0};
  EXPECT_NEAR(spearman_rho(x, x), 1.0, 1e-12);
  std::vector<double> reversed(x.rbegin(), x.rend());
  const std::vector<double> desc = {4, 3, 2, 1}, asc = {1, 2, 3, 4};
  EXPECT_NEAR(spearman_rho(asc, desc), -1.0, 1e-12);
  EXPECT_NEAR(spearman_rho(x, y), oracle_rho(x, y), 1e-12);
}

TEST(Spearman, Errors) {
  const std::vector<double> a = {1, 2, 3}, constant = {0.2, 0.2, 0.2};
  EXPECT_THROW(spearman_rho(a, constant), UndefinedCorrelationError);
  EXPECT_THROW(spearman_rho(std::span(a).first(2), a), AlignmentError);
  EXPECT_THROW(spearman_rho(std::span(a).first(1), std::span(a).first(1)), InputError);
}

TEST(Spearman, MatchesOracleWithTies) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> x(50), y(50);
    for (auto& v : x) v = static_cast<double>(rng() % 6) / 5.0;  // heavy ties
    for (auto& v : y) v = std::uniform_real_distribution<double>(0, 1)(rng);
    y[3] = y[7];
    EXPECT_NEAR(spearman_rho(x, y), oracle_rho(x, y), 1e-9);
  }
}

TEST(Spearman, MonotoneInvariance) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x(30), y(30), fx(30);
    for (std::size_t i = 0; i < 30; ++i) {
      x[i] = u(rng);
      y[i] = u(rng);
      fx[i] = std::exp(3 * x[i]) + 7;
    }
    EXPECT_NEAR(spearman_rho(fx, y), spearman_rho(x, y), 1e-12);
  }
}

TEST(Histogram, AnnotatorBins) {
  const Histogram h = Histogram::annotator_fractions();
  ASSERT_EQ(h.labels.size(), 6u);
  for (std::size_t k = 0; k <= 5; ++k) EXPECT_EQ(h.bin_of(k / 5.0), k) << k;
  EXPECT_EQ(h.bin_of(1.0), 5u);
  const Histogram u = Histogram::uniform(10);
  EXPECT_EQ(u.bin_of(0.0), 0u);
  EXPECT_EQ(u.bin_of(0.95), 9u);
  EXPECT_EQ(u.bin_of(1.0), 9u);
  EXPECT_EQ(make_bins(parse_bin_mode("uniform10")), u);
  EXPECT_THROW(parse_bin_mode("log"), ConfigError);
}

TEST(Histogram, PartitionsMisclassifications) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const auto gold = testing::synthetic_annotated(200, rng());
    std::vector<Label> preds;
    std::size_t wrong = 0;
    for (const auto& g : gold) {
      preds.push_back(rng() & 1 ? H : N);
      wrong += preds.back() != g.gold_label;
    }
    for (BinMode mode : {BinMode::kAnnotatorFractions, BinMode::kUniform10}) {
      EXPECT_EQ(misclassification_histogram(preds, gold, make_bins(mode)).total(), wrong);
    }
  }
}

TEST(Breakdowns, PerTaskAndModel) {
  auto gold = testing::synthetic_annotated(6, 1);
  const Task tasks[] = {Task::kMT, Task::kMT, Task::kDM, Task::kDM, Task::kPG, Task::kPG};
  std::vector<Sample> samples;
  std::vector<Label> g, p;
  for (std::size_t i = 0; i < 6; ++i) {
    gold[i].sample.task = tasks[i];
    gold[i].sample.model = i < 3 ? "m1" : (i == 3 ? "" : "m2");
    samples.push_back(gold[i].sample);
    g.push_back(H);
    p.push_back(i % 2 ? H : N);  // right on odd positions
  }
  const auto per_task = per_task_breakdown(p, g, samples);
  EXPECT_DOUBLE_EQ(per_task.at(Task::kMT), 0.5);
  EXPECT_DOUBLE_EQ(per_task.at(Task::kPG), 0.5);
  const auto per_model = per_model_breakdown(p, g, samples);
  EXPECT_EQ(per_model.size(), 2u);
  EXPECT_DOUBLE_EQ(per_model.at("m1"), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(per_model.at("m2"), 0.5);
  const auto both = per_model_task_breakdown(p, g, samples);
  EXPECT_DOUBLE_EQ(both.at({"m1", Task::kDM}), 0.0);
}

TEST(Align, ById) {
  const auto gold = testing::synthetic_annotated(4, 2);
  std::vector<PredictionRecord> records = {
      {"3", H, 0.9}, {"0", N, 0.1}, {"2", H, 0.7}, {"1", N, 0.2}};
  const AlignedPredictions a = align_predictions(records, gold);
  EXPECT_EQ(a.labels, (std::vector<Label>{N, N, H, H}));
  EXPECT_EQ(a.p_hallucination, (std::vector<double>{0.1, 0.2, 0.7, 0.9}));

  records.pop_back();
  EXPECT_THROW(align_predictions(records, gold), AlignmentError);
  records.push_back({"0", N, 0.1});
  EXPECT_THROW(align_predictions(records, gold), AlignmentError);
  records.back().id = "99";
  EXPECT_THROW(align_predictions(records, gold), AlignmentError);
}

TEST(Report, UndefinedRhoIsRecorded) {
  const auto gold = testing::synthetic_annotated(10, 3);
  std::vector<PredictionRecord> records;
  for (const auto& g : gold) records.push_back({g.sample.id, g.gold_label, 0.5});
  const MethodResult m =
      evaluate_method("flat", records, gold, Histogram::annotator_fractions());
  EXPECT_EQ(m.accuracy, 1.0);
  EXPECT_FALSE(m.spearman_rho.has_value());
  EXPECT_FALSE(m.rho_error.empty());
  EXPECT_EQ(m.misclassified, 0u);
}

TEST(Report, JsonRoundTripAndFiles) {
  const auto gold = testing::synthetic_annotated(60, 9);
  std::mt19937_64 rng(4);
  std::vector<PredictionRecord> records;
  for (const auto& g : gold) {
    records.push_back({g.sample.id, rng() % 4 ? g.gold_label : H,
                       std::uniform_real_distribution<double>(0, 1)(rng)});
  }
  EvaluationReport report;
  report.split = "test";
  report.track = "model-aware";
  report.methods.push_back(
      evaluate_method("ensemble", records, gold, Histogram::annotator_fractions()));
  EXPECT_EQ(report_from_json(to_json(report)), report);

  std::vector<Label> preds, labels;
  std::vector<double> p, gp;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    preds.push_back(records[i].label);
    labels.push_back(gold[i].gold_label);
    p.push_back(records[i].p_hallucination);
    gp.push_back(gold[i].gold_p_hallucination);
  }
  EXPECT_EQ(report.methods[0].accuracy, accuracy(preds, labels));
  EXPECT_NEAR(*report.methods[0].spearman_rho, oracle_rho(p, gp), 1e-12);

  testing::TempDir dir;
  EXPECT_EQ(render_report(report, ReportFormat::kJson, dir.path()).size(), 1u);
  EXPECT_EQ(render_report(report, ReportFormat::kMarkdown, dir.path()).size(), 1u);
  const auto plots = render_report(report, ReportFormat::kPlots, dir.path());
  EXPECT_EQ(plots.size(), 4u);
  const std::string md = read_file(dir / "report.md");
  EXPECT_NE(md.find("| ensemble |"), std::string::npos) << md;
  EXPECT_EQ(report_from_json(nlohmann::json::parse(read_file(dir / "report.json"))), report);
}

}  // namespace
}  // namespace shroom
