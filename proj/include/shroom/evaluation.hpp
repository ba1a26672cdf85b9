#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "shroom/dataset.hpp"
#include "shroom/ensemble.hpp"

namespace shroom {

// Fraction of positions where preds and gold agree. Throws AlignmentError on a
// length mismatch and InputError on empty input.
double accuracy(std::span<const Label> preds, std::span<const Label> gold);

// 1-based ranks; tied values share the mean of the ranks they span.
std::vector<double> average_ranks(std::span<const double> values);

// Spearman's rho: Pearson correlation of the average-ranked vectors. Throws
// AlignmentError on a length mismatch, InputError for fewer than two items and
// UndefinedCorrelationError when either side is constant.
double spearman_rho(std::span<const double> pred_p, std::span<const double> gold_p);

// Half-open bins [edges[i], edges[i+1]); the last bin also holds 1.0.
struct Histogram {
  std::vector<double> edges;
  std::vector<std::string> labels;
  std::vector<std::size_t> counts;

  // Bins centred on the six five-annotator fractions 0.0, 0.2, ..., 1.0.
  static Histogram annotator_fractions();
  static Histogram uniform(std::size_t bins);

  std::size_t bin_of(double p) const;
  std::size_t total() const;

  bool operator==(const Histogram&) const = default;
};

enum class BinMode { kAnnotatorFractions, kUniform10 };
BinMode parse_bin_mode(std::string_view text);
Histogram make_bins(BinMode mode);

// Gold p(Hallucination) of the samples the predictions got wrong.
Histogram misclassification_histogram(std::span<const Label> preds,
                                      std::span<const AnnotatedSample> gold, Histogram bins);

// Accuracy restricted to each subset; subsets with no samples are omitted.
std::map<Task, double> per_task_breakdown(std::span<const Label> preds,
                                          std::span<const Label> gold,
                                          std::span<const Sample> samples);
// Keyed by the sample's model field; samples without one are skipped.
std::map<std::string, double> per_model_breakdown(std::span<const Label> preds,
                                                  std::span<const Label> gold,
                                                  std::span<const Sample> samples);
std::map<std::pair<std::string, Task>, double> per_model_task_breakdown(
    std::span<const Label> preds, std::span<const Label> gold, std::span<const Sample> samples);

struct AlignedPredictions {
  std::vector<Label> labels;
  std::vector<double> p_hallucination;
};

// Orders prediction records to match `gold` by id. Throws AlignmentError when
// lengths differ, ids repeat, or an id has no gold counterpart.
AlignedPredictions align_predictions(std::span<const PredictionRecord> records,
                                     std::span<const AnnotatedSample> gold);

struct MethodResult {
  std::string method;
  std::size_t n = 0;
  double accuracy = 0.0;
  // Empty when the correlation is undefined; the reason is in rho_error.
  std::optional<double> spearman_rho;
  std::string rho_error;
  std::map<Task, double> per_task;
  std::map<Task, std::size_t> per_task_counts;
  std::map<std::string, double> per_model;
  std::map<std::pair<std::string, Task>, double> per_model_task;
  std::size_t misclassified = 0;
  Histogram misclassified_p_histogram;

  bool operator==(const MethodResult&) const = default;
};

inline constexpr int kReportSchemaVersion = 1;

struct EvaluationReport {
  int schema_version = kReportSchemaVersion;
  std::string split;
  std::string track;
  std::vector<MethodResult> methods;

  bool operator==(const EvaluationReport&) const = default;
};

MethodResult evaluate_method(std::string method, std::span<const PredictionRecord> records,
                             std::span<const AnnotatedSample> gold, const Histogram& bins);

nlohmann::json to_json(const EvaluationReport& report);
EvaluationReport report_from_json(const nlohmann::json& j);

// One row per method (acc., rho); with `per_task`, accuracy per task and per
// NLG model.
std::string render_markdown(const EvaluationReport& report, bool per_task);

enum class ReportFormat { kJson, kMarkdown, kPlots };

// Writes report.json, report.md, or one chart per histogram and per-task
// breakdown into `out_dir`. Returns the written paths.
std::vector<std::filesystem::path> render_report(const EvaluationReport& report,
                                                 ReportFormat format,
                                                 const std::filesystem::path& out_dir,
                                                 bool per_task = true);

}  // namespace shroom
