#include "shroom/dataset.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "shroom/errors.hpp"
#include "shroom/util.hpp"

namespace shroom {
namespace {

using nlohmann::json;

constexpr double kProbabilityTolerance = 1e-6;

[[noreturn]] void fail_at(std::size_t index, const std::string& what) {
  throw ParseError(fmt::format("record {}: {}", index, what));
}

const json& require_key(const json& record, std::size_t index,
                        const char* key) {
  auto it = record.find(key);
  if (it == record.end()) fail_at(index, fmt::format("missing key '{}'", key));
  return *it;
}

std::string require_string(const json& record, std::size_t index,
                           const char* key) {
  const json& value = require_key(record, index, key);
  if (!value.is_string()) {
    fail_at(index, fmt::format("key '{}' must be a string", key));
  }
  return value.get<std::string>();
}

std::string parse_id(const json& record, std::size_t index) {
  auto it = record.find("id");
  if (it == record.end()) return std::to_string(index);
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return std::to_string(it->get<long long>());
  fail_at(index, "key 'id' must be a string or an integer");
}

json parse_document(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(fmt::format("malformed JSON: {}", e.what()));
  }
  if (!doc.is_array()) throw ParseError("document must be a JSON array");
  return doc;
}

Sample parse_record(const json& record, std::size_t index) {
  if (!record.is_object()) fail_at(index, "record must be a JSON object");
  Sample sample;
  sample.id = parse_id(record, index);
  sample.src = require_string(record, index, "src");
  sample.hyp = require_string(record, index, "hyp");
  sample.tgt = require_string(record, index, "tgt");
  try {
    sample.ref = parse_ref(require_string(record, index, "ref"));
    sample.task = parse_task(require_string(record, index, "task"));
  } catch (const ParseError& e) {
    if (std::string_view(e.what()).starts_with("record ")) throw;
    fail_at(index, e.what());
  }
  if (auto it = record.find("model"); it != record.end() && !it->is_null()) {
    if (!it->is_string()) fail_at(index, "key 'model' must be a string");
    sample.model = it->get<std::string>();
  }
  try {
    validate_sample(sample);
  } catch (const ParseError& e) {
    fail_at(index, e.what());
  }
  return sample;
}

AnnotatedSample parse_annotated_record(const json& record, std::size_t index) {
  AnnotatedSample annotated;
  annotated.sample = parse_record(record, index);

  const json& labels = require_key(record, index, "labels");
  if (!labels.is_array()) fail_at(index, "key 'labels' must be an array");
  for (const json& vote : labels) {
    if (!vote.is_string()) fail_at(index, "annotator labels must be strings");
    try {
      annotated.annotator_labels.push_back(parse_label(vote.get<std::string>()));
    } catch (const ParseError& e) {
      fail_at(index, e.what());
    }
  }

  GoldAnnotation gold{};
  try {
    gold = derive_gold(annotated.annotator_labels);
  } catch (const AnnotationError& e) {
    fail_at(index, e.what());
  }
  annotated.gold_label = gold.label;
  annotated.gold_p_hallucination = gold.p_hallucination;

  Label stated_label{};
  try {
    stated_label = parse_label(require_string(record, index, "label"));
  } catch (const ParseError& e) {
    if (std::string_view(e.what()).starts_with("record ")) throw;
    fail_at(index, e.what());
  }
  if (stated_label != gold.label) {
    fail_at(index, fmt::format("'label' is '{}' but the annotator majority is '{}'",
                               to_string(stated_label), to_string(gold.label)));
  }

  auto p_it = record.find("p(Hallucination)");
  if (p_it == record.end()) p_it = record.find("p_hallucination");
  if (p_it == record.end()) fail_at(index, "missing key 'p(Hallucination)'");
  if (!p_it->is_number()) fail_at(index, "'p(Hallucination)' must be a number");
  const double stated_p = p_it->get<double>();
  if (std::abs(stated_p - gold.p_hallucination) > kProbabilityTolerance) {
    fail_at(index, fmt::format("'p(Hallucination)' is {} but the annotator share is {}",
                               stated_p, gold.p_hallucination));
  }
  return annotated;
}

template <typename Range>
std::string dump_array(const Range& items) {
  json doc = json::array();
  for (const auto& item : items) doc.push_back(to_json(item));
  return doc.dump(2);
}

void count_annotations(const AnnotatedSample& s, DatasetStats& stats) {
  ++stats.per_label_counts[s.gold_label];
  ++stats.p_hallucination_histogram[s.gold_p_hallucination];
  ++stats.p_per_label_breakdown[{s.gold_label, s.gold_p_hallucination}];
}

}  // namespace

GoldAnnotation derive_gold(std::span<const Label> annotator_labels) {
  if (annotator_labels.empty()) {
    throw AnnotationError("annotator label list is empty");
  }
  const std::size_t n = annotator_labels.size();
  const std::size_t votes = count_hallucinations(annotator_labels);
  if (n % 2 == 0) {
    throw AnnotationError(fmt::format(
        "even number of annotators ({}, {} Hallucination votes); strict majority "
        "is undefined",
        n, votes));
  }
  return {2 * votes > n ? Label::kHallucination : Label::kNotHallucination,
          static_cast<double>(votes) / static_cast<double>(n)};
}

void validate_sample(const Sample& sample) {
  if (sample.hyp.empty()) throw ParseError("hyp is empty");
  const bool needs_src = sample.ref == Ref::kSrc || sample.ref == Ref::kEither;
  const bool needs_tgt = sample.ref == Ref::kTgt || sample.ref == Ref::kEither;
  if (needs_src && sample.src.empty()) {
    throw ParseError(fmt::format("ref is '{}' but src is empty", to_string(sample.ref)));
  }
  // Model-aware paraphrase records ship without a target.
  const bool tgt_optional = sample.task == Task::kPG && !sample.model.empty();
  if (needs_tgt && sample.tgt.empty() && !tgt_optional) {
    throw ParseError(fmt::format("ref is '{}' but tgt is empty", to_string(sample.ref)));
  }
}

std::vector<Sample> parse_samples(std::string_view json_text) {
  const json doc = parse_document(json_text);
  std::vector<Sample> samples;
  samples.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    samples.push_back(parse_record(doc[i], i));
  }
  return samples;
}

std::vector<AnnotatedSample> parse_annotated(std::string_view json_text) {
  const json doc = parse_document(json_text);
  std::vector<AnnotatedSample> samples;
  samples.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    samples.push_back(parse_annotated_record(doc[i], i));
  }
  return samples;
}

bool has_annotations(std::string_view json_text) {
  const json doc = parse_document(json_text);
  return !doc.empty() && doc.front().is_object() && doc.front().contains("labels");
}

std::vector<Sample> load_samples(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    return parse_samples(text);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::vector<AnnotatedSample> load_annotated(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    return parse_annotated(text);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

nlohmann::json to_json(const Sample& sample) {
  return json{{"id", id_to_json(sample.id)},
              {"src", sample.src},
              {"hyp", sample.hyp},
              {"tgt", sample.tgt},
              {"ref", to_string(sample.ref)},
              {"task", to_string(sample.task)},
              {"model", sample.model}};
}

nlohmann::json to_json(const AnnotatedSample& sample) {
  json record = to_json(sample.sample);
  json labels = json::array();
  for (Label vote : sample.annotator_labels) labels.push_back(to_string(vote));
  record["labels"] = std::move(labels);
  record["label"] = to_string(sample.gold_label);
  record["p(Hallucination)"] = sample.gold_p_hallucination;
  return record;
}

std::string serialize_samples(std::span<const Sample> samples) {
  return dump_array(samples);
}

std::string serialize_annotated(std::span<const AnnotatedSample> samples) {
  return dump_array(samples);
}

std::vector<Sample> strip_annotations(std::span<const AnnotatedSample> samples) {
  std::vector<Sample> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.sample);
  return out;
}

EvidencePair select_evidence_pair(const Sample& sample) {
  if (sample.hyp.empty()) {
    throw UnscorableSampleError(fmt::format("sample {}: hyp is empty", sample.id));
  }
  if (!sample.tgt.empty()) return {sample.tgt, sample.hyp, Provenance::kTgt};
  if (!sample.src.empty()) return {sample.src, sample.hyp, Provenance::kSrc};
  throw UnscorableSampleError(
      fmt::format("sample {}: both tgt and src are empty", sample.id));
}

DatasetStats compute_stats(std::span<const Sample> samples) {
  DatasetStats stats;
  stats.size = samples.size();
  for (const auto& s : samples) ++stats.per_task_counts[s.task];
  return stats;
}

DatasetStats compute_stats(std::span<const AnnotatedSample> samples) {
  DatasetStats stats;
  stats.size = samples.size();
  for (const auto& s : samples) {
    ++stats.per_task_counts[s.sample.task];
    count_annotations(s, stats);
  }
  return stats;
}

nlohmann::json to_json(const DatasetStats& stats) {
  json tasks = json::object();
  for (const auto& [task, n] : stats.per_task_counts) tasks[std::string(to_string(task))] = n;
  json labels = json::object();
  for (const auto& [label, n] : stats.per_label_counts) labels[std::string(to_string(label))] = n;
  json histogram = json::object();
  for (const auto& [p, n] : stats.p_hallucination_histogram) histogram[format_fraction(p)] = n;
  json breakdown = json::object();
  for (const auto& [key, n] : stats.p_per_label_breakdown) {
    breakdown[std::string(to_string(key.first))][format_fraction(key.second)] = n;
  }
  return json{{"size", stats.size},
              {"per_task_counts", tasks},
              {"per_label_counts", labels},
              {"p_hallucination_histogram", histogram},
              {"p_per_label_breakdown", breakdown}};
}

// Integer ids are written back as integers; "007"-style strings stay strings.
nlohmann::json id_to_json(const std::string& id) {
  const bool numeric =
      !id.empty() && id.size() < 18 &&
      std::all_of(id.begin(), id.end(), [](char c) { return c >= '0' && c <= '9'; }) &&
      (id.size() == 1 || id.front() != '0');
  if (numeric) return std::stoll(id);
  return id;
}

std::string format_fraction(double value) {
  std::string text = fmt::format("{}", value);
  if (text.find_first_of(".eE") == std::string::npos &&
      text.find("inf") == std::string::npos && text.find("nan") == std::string::npos) {
    text += ".0";
  }
  return text;
}

}  // namespace shroom
