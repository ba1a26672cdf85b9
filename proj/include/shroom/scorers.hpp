#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "shroom/dataset.hpp"
#include "shroom/engine.hpp"
#include "shroom/types.hpp"

namespace shroom {

enum class Backend { kConsistency, kNli, kPromptJudge };

std::string_view to_string(Backend backend);
Backend parse_backend(std::string_view text);

inline constexpr double kConsistencyThreshold = 0.5;
inline constexpr double kNliThreshold = 0.8;
inline constexpr int kDefaultMaxSequenceLength = 512;

// Checkpoints named by default; any of them can be replaced by a local
// directory, a "builtin:" model or a "stub:" table key.
inline constexpr std::string_view kDefaultConsistencyCheckpoint =
    "vectara/hallucination_evaluation_model";
inline constexpr std::string_view kDefaultNliCheckpoint =
    "MoritzLaurer/mDeBERTa-v3-base-xnli-multilingual-nli-2mil7";
inline constexpr std::string_view kDefaultJudgeCheckpoint =
    "TheBloke/Mistral-7B-Instruct-v0.2-GGUF";

struct ScorerConfig {
  Backend backend = Backend::kConsistency;
  std::string checkpoint_ref;
  double threshold = kConsistencyThreshold;
  int max_sequence_length = kDefaultMaxSequenceLength;
  std::uint64_t seed = 42;

  // Backend defaults: thresholds 0.5 / 0.8 and the default checkpoints.
  static ScorerConfig defaults(Backend backend);

  // Throws ConfigError unless 0 < threshold < 1 and max_sequence_length > 0.
  void validate() const;

  bool operator==(const ScorerConfig&) const = default;
};

struct ScorerOutput {
  Label label = Label::kNotHallucination;
  double p_hallucination = 0.0;
  std::map<std::string, double> raw;

  bool operator==(const ScorerOutput&) const = default;
};

nlohmann::json to_json(const ScorerOutput& output);
ScorerOutput scorer_output_from_json(const nlohmann::json& j);

// Consistency rule: Not Hallucination iff score > threshold (strict);
// p(Hallucination) = 1 - score.
ScorerOutput decide_consistency(double consistency, double threshold);

// NLI rule: Not Hallucination iff entailment >= threshold;
// p(Hallucination) = 1 - entailment.
ScorerOutput decide_nli(const NliMasses& masses, double threshold);

// The judge prompt, byte-exact:
//   "Context {premise}\nSentence: {hypothesis}\nIs the sentence supported by
//    the context above?\nAnswer Yes or No:"
std::string judge_prompt_render(const EvidencePair& pair);

// Maps the judge's first generated token to a label. "Yes" -> Not
// Hallucination with p = 1 - prob; "No" -> Hallucination with p = prob;
// anything else -> a label drawn from `rng` and p = 0.5. Matching is a
// case-insensitive prefix test after leading whitespace and SentencePiece
// word markers.
ScorerOutput judge_prompt_parse(std::string_view first_token,
                                double first_token_probability,
                                std::mt19937_64& rng);

// Per-item generator for undecidable judge answers. Depends only on the seed
// and the prompt, so batch and single scoring agree.
std::mt19937_64 judge_rng(std::uint64_t seed, std::string_view prompt);

// Whitespace-token truncation to at most `max_tokens` tokens in total, removing
// from whichever side is currently longer. Kept text is an unmodified prefix.
EvidencePair truncate_pair(const EvidencePair& pair, int max_tokens);

std::size_t whitespace_token_count(std::string_view text);

ScorerOutput score_consistency(const EvidencePair& pair, const ScorerConfig& cfg,
                               Engine& engine);
ScorerOutput score_nli(const EvidencePair& pair, const ScorerConfig& cfg,
                       Engine& engine);
ScorerOutput score_judge(const EvidencePair& pair, const ScorerConfig& cfg,
                         Engine& engine);

// A configured backend instance. Not thread-safe: use one instance per thread.
class Scorer {
 public:
  // Resolves cfg.checkpoint_ref and loads the engine. Throws ConfigError for
  // an invalid config and BackendError when the checkpoint cannot be loaded.
  Scorer(ScorerConfig cfg, const EngineContext& context);
  Scorer(ScorerConfig cfg, std::unique_ptr<Engine> engine);

  const ScorerConfig& config() const { return cfg_; }

  ScorerOutput score(const EvidencePair& pair);

  // Order-preserving; identical to scoring each pair on its own. Backend
  // failures are rethrown as BackendError carrying the item index.
  std::vector<ScorerOutput> score_batch(std::span<const EvidencePair> pairs);

 private:
  ScorerConfig cfg_;
  std::unique_ptr<Engine> engine_;
};

}  // namespace shroom
