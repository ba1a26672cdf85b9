#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>

namespace shroom {

enum class Label { kHallucination, kNotHallucination };
enum class Task { kMT, kDM, kPG };
enum class Ref { kSrc, kTgt, kEither };
enum class Provenance { kTgt, kSrc };
enum class Track { kModelAware, kModelAgnostic };

// Canonical shared-task spellings: "Hallucination" / "Not Hallucination".
std::string_view to_string(Label label);
std::string_view to_string(Task task);
std::string_view to_string(Ref ref);
std::string_view to_string(Provenance provenance);
// "model-aware" / "model-agnostic".
std::string_view to_string(Track track);

// Case-insensitive; throw ParseError on unknown input.
Label parse_label(std::string_view text);
Task parse_task(std::string_view text);
Ref parse_ref(std::string_view text);
Track parse_track(std::string_view text);

// File-name friendly form of a track ("model_aware").
std::string track_slug(Track track);

std::size_t count_hallucinations(std::span<const Label> labels);

}  // namespace shroom
