#include "shroom/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include <fmt/format.h>

#include "shroom/errors.hpp"
#include "shroom/plot.hpp"
#include "shroom/util.hpp"

namespace shroom {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

void require_aligned(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw AlignmentError(fmt::format("{}: {} predictions for {} gold items", what, a, b));
  }
}

template <typename Key, typename KeyFn>
std::map<Key, double> grouped_accuracy(std::span<const Label> preds, std::span<const Label> gold,
                                       std::span<const Sample> samples, KeyFn key_of) {
  require_aligned(preds.size(), gold.size(), "breakdown");
  require_aligned(preds.size(), samples.size(), "breakdown");
  std::map<Key, std::pair<std::size_t, std::size_t>> tallies;  // hits, total
  for (std::size_t i = 0; i < preds.size(); ++i) {
    auto key = key_of(samples[i]);
    if (!key) continue;
    auto& [hits, total] = tallies[*key];
    hits += preds[i] == gold[i];
    ++total;
  }
  std::map<Key, double> out;
  for (const auto& [key, tally] : tallies) {
    out[key] = static_cast<double>(tally.first) / static_cast<double>(tally.second);
  }
  return out;
}

json histogram_json(const Histogram& h) {
  return {{"edges", h.edges}, {"labels", h.labels}, {"counts", h.counts}};
}

Histogram histogram_from_json(const json& j) {
  Histogram h;
  h.edges = j.at("edges").get<std::vector<double>>();
  h.labels = j.at("labels").get<std::vector<std::string>>();
  h.counts = j.at("counts").get<std::vector<std::size_t>>();
  return h;
}

json method_json(const MethodResult& m) {
  json per_task = json::object(), per_task_counts = json::object();
  for (const auto& [task, acc] : m.per_task) per_task[std::string(to_string(task))] = acc;
  for (const auto& [task, n] : m.per_task_counts) {
    per_task_counts[std::string(to_string(task))] = n;
  }
  json per_model_task = json::object();
  for (const auto& [key, acc] : m.per_model_task) {
    per_model_task[key.first][std::string(to_string(key.second))] = acc;
  }
  return {{"method", m.method},
          {"n", m.n},
          {"accuracy", m.accuracy},
          {"spearman_rho", m.spearman_rho ? json(*m.spearman_rho) : json(nullptr)},
          {"rho_error", m.rho_error},
          {"per_task", per_task},
          {"per_task_counts", per_task_counts},
          {"per_model", m.per_model},
          {"per_model_task", per_model_task},
          {"misclassified", m.misclassified},
          {"misclassified_p_histogram", histogram_json(m.misclassified_p_histogram)}};
}

MethodResult method_from_json(const json& j) {
  MethodResult m;
  m.method = j.at("method").get<std::string>();
  m.n = j.at("n").get<std::size_t>();
  m.accuracy = j.at("accuracy").get<double>();
  if (j.at("spearman_rho").is_number()) m.spearman_rho = j["spearman_rho"].get<double>();
  m.rho_error = j.value("rho_error", "");
  for (const auto& [task, acc] : j.at("per_task").items()) {
    m.per_task[parse_task(task)] = acc.get<double>();
  }
  const json counts = j.value("per_task_counts", json::object());
  for (const auto& [task, n] : counts.items()) {
    m.per_task_counts[parse_task(task)] = n.get<std::size_t>();
  }
  m.per_model = j.value("per_model", std::map<std::string, double>{});
  const json per_model_task = j.value("per_model_task", json::object());
  for (const auto& [model, tasks] : per_model_task.items()) {
    for (const auto& [task, acc] : tasks.items()) {
      m.per_model_task[{model, parse_task(task)}] = acc.get<double>();
    }
  }
  m.misclassified = j.at("misclassified").get<std::size_t>();
  m.misclassified_p_histogram = histogram_from_json(j.at("misclassified_p_histogram"));
  return m;
}

std::string fixed3(double x) { return fmt::format("{:.3f}", x); }

std::string slug(std::string_view text) {
  std::string out;
  for (char c : text) {
    const bool keep = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                      (c >= '0' && c <= '9') || c == '-' || c == '_';
    out += keep ? c : '_';
  }
  return out.empty() ? "method" : out;
}

}  // namespace

double accuracy(std::span<const Label> preds, std::span<const Label> gold) {
  require_aligned(preds.size(), gold.size(), "accuracy");
  if (preds.empty()) throw InputError("accuracy of an empty prediction set");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) hits += preds[i] == gold[i];
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t start = 0; start < order.size();) {
    std::size_t end = start;
    while (end + 1 < order.size() && values[order[end + 1]] == values[order[start]]) ++end;
    const double rank = (static_cast<double>(start) + static_cast<double>(end)) / 2.0 + 1.0;
    for (std::size_t k = start; k <= end; ++k) ranks[order[k]] = rank;
    start = end + 1;
  }
  return ranks;
}

double spearman_rho(std::span<const double> pred_p, std::span<const double> gold_p) {
  require_aligned(pred_p.size(), gold_p.size(), "spearman_rho");
  if (pred_p.size() < 2) throw InputError("spearman_rho needs at least two items");
  for (double v : pred_p) {
    if (std::isnan(v)) throw InputError("spearman_rho: NaN prediction");
  }
  const auto rx = average_ranks(pred_p);
  const auto ry = average_ranks(gold_p);
  const double n = static_cast<double>(rx.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mx, dy = ry[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0) throw UndefinedCorrelationError("predicted p(Hallucination) is constant");
  if (syy == 0.0) throw UndefinedCorrelationError("gold p(Hallucination) is constant");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

Histogram Histogram::annotator_fractions() {
  return {{0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 1.0},
          {"0.0", "0.2", "0.4", "0.6", "0.8", "1.0"},
          std::vector<std::size_t>(6, 0)};
}

Histogram Histogram::uniform(std::size_t bins) {
  if (bins == 0) throw ConfigError("histogram needs at least one bin");
  Histogram h;
  for (std::size_t i = 0; i <= bins; ++i) {
    h.edges.push_back(static_cast<double>(i) / static_cast<double>(bins));
  }
  for (std::size_t i = 0; i < bins; ++i) {
    h.labels.push_back(fmt::format("[{:.2g},{:.2g}{}", h.edges[i], h.edges[i + 1],
                                   i + 1 == bins ? "]" : ")"));
  }
  h.counts.assign(bins, 0);
  return h;
}

std::size_t Histogram::bin_of(double p) const {
  if (!(p >= edges.front() && p <= edges.back())) {
    throw InputError(fmt::format("p = {} lies outside the histogram range", p));
  }
  const auto it = std::upper_bound(edges.begin(), edges.end(), p);
  const auto bin = static_cast<std::size_t>(it - edges.begin()) - 1;
  return std::min(bin, counts.size() - 1);
}

std::size_t Histogram::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

BinMode parse_bin_mode(std::string_view text) {
  const std::string lower = to_lower_ascii(text);
  if (lower == "annotator" || lower == "exact" || lower == "annotator_fractions") {
    return BinMode::kAnnotatorFractions;
  }
  if (lower == "uniform" || lower == "uniform10") return BinMode::kUniform10;
  throw ConfigError("unknown bin mode '" + std::string(text) + "'");
}

Histogram make_bins(BinMode mode) {
  return mode == BinMode::kAnnotatorFractions ? Histogram::annotator_fractions()
                                              : Histogram::uniform(10);
}

Histogram misclassification_histogram(std::span<const Label> preds,
                                      std::span<const AnnotatedSample> gold, Histogram bins) {
  require_aligned(preds.size(), gold.size(), "misclassification histogram");
  std::fill(bins.counts.begin(), bins.counts.end(), 0);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] != gold[i].gold_label) ++bins.counts[bins.bin_of(gold[i].gold_p_hallucination)];
  }
  return bins;
}

std::map<Task, double> per_task_breakdown(std::span<const Label> preds,
                                          std::span<const Label> gold,
                                          std::span<const Sample> samples) {
  return grouped_accuracy<Task>(preds, gold, samples,
                                [](const Sample& s) { return std::optional<Task>(s.task); });
}

std::map<std::string, double> per_model_breakdown(std::span<const Label> preds,
                                                  std::span<const Label> gold,
                                                  std::span<const Sample> samples) {
  return grouped_accuracy<std::string>(preds, gold, samples, [](const Sample& s) {
    return s.model.empty() ? std::nullopt : std::optional<std::string>(s.model);
  });
}

std::map<std::pair<std::string, Task>, double> per_model_task_breakdown(
    std::span<const Label> preds, std::span<const Label> gold, std::span<const Sample> samples) {
  using Key = std::pair<std::string, Task>;
  return grouped_accuracy<Key>(preds, gold, samples, [](const Sample& s) {
    return s.model.empty() ? std::nullopt : std::optional<Key>(Key{s.model, s.task});
  });
}

AlignedPredictions align_predictions(std::span<const PredictionRecord> records,
                                     std::span<const AnnotatedSample> gold) {
  require_aligned(records.size(), gold.size(), "alignment");
  std::unordered_map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!by_id.emplace(records[i].id, i).second) {
      throw AlignmentError("duplicate prediction id '" + records[i].id + "'");
    }
  }
  AlignedPredictions out;
  out.labels.reserve(gold.size());
  out.p_hallucination.reserve(gold.size());
  for (const auto& g : gold) {
    auto it = by_id.find(g.sample.id);
    if (it == by_id.end()) {
      throw AlignmentError("no prediction for gold id '" + g.sample.id + "'");
    }
    out.labels.push_back(records[it->second].label);
    out.p_hallucination.push_back(records[it->second].p_hallucination);
  }
  return out;
}

MethodResult evaluate_method(std::string method, std::span<const PredictionRecord> records,
                             std::span<const AnnotatedSample> gold, const Histogram& bins) {
  const AlignedPredictions aligned = align_predictions(records, gold);
  std::vector<Label> gold_labels;
  std::vector<double> gold_p;
  gold_labels.reserve(gold.size());
  gold_p.reserve(gold.size());
  for (const auto& g : gold) {
    gold_labels.push_back(g.gold_label);
    gold_p.push_back(g.gold_p_hallucination);
  }
  const std::vector<Sample> samples = strip_annotations(gold);

  MethodResult result;
  result.method = std::move(method);
  result.n = gold.size();
  result.accuracy = accuracy(aligned.labels, gold_labels);
  try {
    result.spearman_rho = spearman_rho(aligned.p_hallucination, gold_p);
  } catch (const UndefinedCorrelationError& e) {
    result.rho_error = e.what();
  }
  result.per_task = per_task_breakdown(aligned.labels, gold_labels, samples);
  for (const auto& s : samples) ++result.per_task_counts[s.task];
  result.per_model = per_model_breakdown(aligned.labels, gold_labels, samples);
  result.per_model_task = per_model_task_breakdown(aligned.labels, gold_labels, samples);
  result.misclassified_p_histogram = misclassification_histogram(aligned.labels, gold, bins);
  result.misclassified = result.misclassified_p_histogram.total();
  return result;
}

nlohmann::json to_json(const EvaluationReport& report) {
  json methods = json::array();
  for (const auto& m : report.methods) methods.push_back(method_json(m));
  return {{"schema_version", report.schema_version},
          {"split", report.split},
          {"track", report.track},
          {"methods", std::move(methods)}};
}

EvaluationReport report_from_json(const nlohmann::json& j) {
  try {
    EvaluationReport report;
    report.schema_version = j.at("schema_version").get<int>();
    if (report.schema_version != kReportSchemaVersion) {
      throw ParseError(fmt::format("unsupported report schema_version {}", report.schema_version));
    }
    report.split = j.value("split", "");
    report.track = j.value("track", "");
    for (const auto& m : j.at("methods")) report.methods.push_back(method_from_json(m));
    return report;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed report: ") + e.what());
  }
}

std::string render_markdown(const EvaluationReport& report, bool per_task) {
  std::string md = fmt::format("# Evaluation: {} ({})\n\n", report.split.empty() ? "-" : report.split,
                               report.track.empty() ? "-" : report.track);
  md += "| Method | acc. | rho | n |\n|---|---|---|---|\n";
  for (const auto& m : report.methods) {
    md += fmt::format("| {} | {} | {} | {} |\n", m.method, fixed3(m.accuracy),
                      m.spearman_rho ? fixed3(*m.spearman_rho) : "n/a", m.n);
  }
  if (per_task) {
    md += "\n## Accuracy per task\n\n| Method | Task | n | acc. |\n|---|---|---|---|\n";
    for (const auto& m : report.methods) {
      for (const auto& [task, acc] : m.per_task) {
        md += fmt::format("| {} | {} | {} | {} |\n", m.method, to_string(task),
                          m.per_task_counts.count(task) ? m.per_task_counts.at(task) : 0,
                          fixed3(acc));
      }
    }
    const bool any_model = std::any_of(report.methods.begin(), report.methods.end(),
                                       [](const auto& m) { return !m.per_model_task.empty(); });
    if (any_model) {
      md += "\n## Accuracy per NLG model and task\n\n| Method | NLG Model | Task | acc. |\n"
            "|---|---|---|---|\n";
      for (const auto& m : report.methods) {
        for (const auto& [key, acc] : m.per_model_task) {
          md += fmt::format("| {} | {} | {} | {} |\n", m.method, key.first,
                            to_string(key.second), fixed3(acc));
        }
      }
    }
  }
  md += "\n## Gold p(Hallucination) of misclassified samples\n\n";
  if (!report.methods.empty()) {
    const auto& labels = report.methods.front().misclassified_p_histogram.labels;
    md += "| Method |";
    for (const auto& l : labels) md += " " + l + " |";
    md += "\n|---|";
    for (std::size_t i = 0; i < labels.size(); ++i) md += "---|";
    md += "\n";
    for (const auto& m : report.methods) {
      md += "| " + m.method + " |";
      for (std::size_t c : m.misclassified_p_histogram.counts) md += fmt::format(" {} |", c);
      md += "\n";
    }
  }
  for (const auto& m : report.methods) {
    if (!m.rho_error.empty()) md += fmt::format("\n- {}: rho undefined ({})", m.method, m.rho_error);
  }
  return md + "\n";
}

std::vector<fs::path> render_report(const EvaluationReport& report, ReportFormat format,
                                    const fs::path& out_dir, bool per_task) {
  std::vector<fs::path> written;
  switch (format) {
    case ReportFormat::kJson:
      write_file(out_dir / "report.json", to_json(report).dump(2) + "\n");
      written.push_back(out_dir / "report.json");
      break;
    case ReportFormat::kMarkdown:
      write_file(out_dir / "report.md", render_markdown(report, per_task));
      written.push_back(out_dir / "report.md");
      break;
    case ReportFormat::kPlots:
      for (const auto& m : report.methods) {
        const auto& h = m.misclassified_p_histogram;
        BarChart hist{"p(Hallucination) of misclassified samples: " + m.method,
                      "gold p(Hallucination)", "count", h.labels,
                      {{m.method, std::vector<double>(h.counts.begin(), h.counts.end())}}};
        auto files = write_chart(hist, out_dir / ("misclassified_p_" + slug(m.method)));
        written.insert(written.end(), files.begin(), files.end());

        BarChart tasks{"Accuracy per task: " + m.method, "task", "accuracy", {}, {{m.method, {}}}};
        for (const auto& [task, acc] : m.per_task) {
          tasks.categories.emplace_back(to_string(task));
          tasks.series.front().values.push_back(acc);
        }
        files = write_chart(tasks, out_dir / ("per_task_" + slug(m.method)));
        written.insert(written.end(), files.begin(), files.end());
      }
      break;
  }
  return written;
}

}  // namespace shroom
