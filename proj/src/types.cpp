#include "shroom/types.hpp"

#include <algorithm>

#include "shroom/errors.hpp"
#include "shroom/util.hpp"

namespace shroom {

std::string_view to_string(Label label) {
  return label == Label::kHallucination ? "Hallucination" : "Not Hallucination";
}

std::string_view to_string(Task task) {
  switch (task) {
    case Task::kMT: return "MT";
    case Task::kDM: return "DM";
    case Task::kPG: return "PG";
  }
  return "?";
}

std::string_view to_string(Ref ref) {
  switch (ref) {
    case Ref::kSrc: return "src";
    case Ref::kTgt: return "tgt";
    case Ref::kEither: return "either";
  }
  return "?";
}

std::string_view to_string(Provenance provenance) {
  return provenance == Provenance::kTgt ? "tgt" : "src";
}

std::string_view to_string(Track track) {
  return track == Track::kModelAware ? "model-aware" : "model-agnostic";
}

Label parse_label(std::string_view text) {
  const std::string lower = to_lower_ascii(text);
  if (lower == "hallucination") return Label::kHallucination;
  if (lower == "not hallucination") return Label::kNotHallucination;
  throw ParseError("unknown label '" + std::string(text) + "'");
}

Task parse_task(std::string_view text) {
  const std::string lower = to_lower_ascii(text);
  if (lower == "mt") return Task::kMT;
  if (lower == "dm") return Task::kDM;
  if (lower == "pg") return Task::kPG;
  throw ParseError("unknown task '" + std::string(text) + "'");
}

Ref parse_ref(std::string_view text) {
  const std::string lower = to_lower_ascii(text);
  if (lower == "src") return Ref::kSrc;
  if (lower == "tgt") return Ref::kTgt;
  if (lower == "either") return Ref::kEither;
  throw ParseError("unknown ref '" + std::string(text) + "'");
}

Track parse_track(std::string_view text) {
  std::string lower = to_lower_ascii(text);
  std::replace(lower.begin(), lower.end(), '_', '-');
  if (lower == "model-aware" || lower == "aware") return Track::kModelAware;
  if (lower == "model-agnostic" || lower == "agnostic") return Track::kModelAgnostic;
  throw ParseError("unknown track '" + std::string(text) + "'");
}

std::string track_slug(Track track) {
  return track == Track::kModelAware ? "model_aware" : "model_agnostic";
}

std::size_t count_hallucinations(std::span<const Label> labels) {
  return static_cast<std::size_t>(
      std::count(labels.begin(), labels.end(), Label::kHallucination));
}

}  // namespace shroom
