#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "shroom/types.hpp"

namespace shroom {

// One shared-task datapoint. `id` is the record's "id" key when present,
// otherwise its array index within the split.
struct Sample {
  std::string id;
  std::string src;
  std::string hyp;
  std::string tgt;
  Ref ref = Ref::kEither;
  Task task = Task::kMT;
  std::string model;

  bool operator==(const Sample&) const = default;
};

struct AnnotatedSample {
  Sample sample;
  std::vector<Label> annotator_labels;
  Label gold_label = Label::kNotHallucination;
  double gold_p_hallucination = 0.0;

  bool operator==(const AnnotatedSample&) const = default;
};

struct GoldAnnotation {
  Label label;
  double p_hallucination;
};

// The text pair every scorer consumes: premise grounds, hypothesis is judged.
struct EvidencePair {
  std::string premise;
  std::string hypothesis;
  Provenance provenance = Provenance::kTgt;

  bool operator==(const EvidencePair&) const = default;
};

struct DatasetStats {
  std::size_t size = 0;
  std::map<Task, std::size_t> per_task_counts;
  std::map<Label, std::size_t> per_label_counts;
  // Keys are the exact observed annotator fractions.
  std::map<double, std::size_t> p_hallucination_histogram;
  std::map<std::pair<Label, double>, std::size_t> p_per_label_breakdown;

  bool operator==(const DatasetStats&) const = default;
};

// Majority label and Hallucination vote share. Throws AnnotationError on an
// empty list or an even-length list (ties are never broken).
GoldAnnotation derive_gold(std::span<const Label> annotator_labels);

// Checks the per-record invariants (non-empty hyp, the field named by ref is
// present, except tgt on model-aware PG records). Throws ParseError describing
// the first violation.
void validate_sample(const Sample& sample);

// Parse a JSON array of shared-task records. Errors name the offending index
// and key. The gold probability is read from "p(Hallucination)" or
// "p_hallucination"; when present, "label" and the probability must agree with
// the annotator votes.
std::vector<Sample> parse_samples(std::string_view json_text);
std::vector<AnnotatedSample> parse_annotated(std::string_view json_text);

// True when the document's records carry annotator labels.
bool has_annotations(std::string_view json_text);

// File variants; parse errors are prefixed with the path.
std::vector<Sample> load_samples(const std::filesystem::path& path);
std::vector<AnnotatedSample> load_annotated(const std::filesystem::path& path);

nlohmann::json to_json(const Sample& sample);
nlohmann::json to_json(const AnnotatedSample& sample);
// Integer-looking ids are written as JSON integers, everything else as strings.
nlohmann::json id_to_json(const std::string& id);

std::string serialize_samples(std::span<const Sample> samples);
std::string serialize_annotated(std::span<const AnnotatedSample> samples);

std::vector<Sample> strip_annotations(std::span<const AnnotatedSample> samples);

// hyp is always the hypothesis. The premise is tgt, or src when tgt is empty
// (model-aware paraphrase records ship without a target). ref is recorded but
// does not change the choice. Throws UnscorableSampleError if both are empty.
EvidencePair select_evidence_pair(const Sample& sample);

DatasetStats compute_stats(std::span<const Sample> samples);
DatasetStats compute_stats(std::span<const AnnotatedSample> samples);

nlohmann::json to_json(const DatasetStats& stats);

// Shortest decimal form that round-trips, e.g. 0.6 -> "0.6", 0 -> "0.0".
std::string format_fraction(double value);

}  // namespace shroom
