#include "shroom/scorers.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include <fmt/format.h>

#include "shroom/checkpoint.hpp"
#include "shroom/errors.hpp"
#include "shroom/util.hpp"

namespace shroom {
namespace {

constexpr double kMassTolerance = 1e-6;

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

void check_fraction(double value, const char* what, std::size_t index) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw BackendError(fmt::format("{} {} is outside [0, 1]", what, value), index);
  }
}

// Byte offset just past the first `keep` whitespace-separated tokens.
std::size_t prefix_end(std::string_view text, std::size_t keep) {
  std::size_t seen = 0, i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    if (i == text.size()) break;
    if (seen == keep) return i;
    while (i < text.size() && !is_space(text[i])) ++i;
    ++seen;
    if (seen == keep) return i;
  }
  return text.size();
}

std::string_view strip_answer_prefix(std::string_view token) {
  constexpr std::string_view kWordMarker = "\xE2\x96\x81";  // U+2581
  while (true) {
    if (!token.empty() && is_space(token.front())) {
      token.remove_prefix(1);
    } else if (token.starts_with(kWordMarker)) {
      token.remove_prefix(kWordMarker.size());
    } else {
      return token;
    }
  }
}

bool starts_with_ci(std::string_view text, std::string_view prefix) {
  if (text.size() < prefix.size()) return false;
  return to_lower_ascii(text.substr(0, prefix.size())) == prefix;
}

}  // namespace

std::string_view to_string(Backend backend) {
  switch (backend) {
    case Backend::kConsistency: return "consistency";
    case Backend::kNli: return "nli";
    case Backend::kPromptJudge: return "prompt_judge";
  }
  return "?";
}

Backend parse_backend(std::string_view text) {
  std::string lower = to_lower_ascii(text);
  std::replace(lower.begin(), lower.end(), '-', '_');
  if (lower == "consistency") return Backend::kConsistency;
  if (lower == "nli") return Backend::kNli;
  if (lower == "prompt_judge" || lower == "judge") return Backend::kPromptJudge;
  throw ConfigError("unknown backend '" + std::string(text) + "'");
}

ScorerConfig ScorerConfig::defaults(Backend backend) {
  ScorerConfig cfg;
  cfg.backend = backend;
  switch (backend) {
    case Backend::kConsistency:
      cfg.checkpoint_ref = kDefaultConsistencyCheckpoint;
      cfg.threshold = kConsistencyThreshold;
      break;
    case Backend::kNli:
      cfg.checkpoint_ref = kDefaultNliCheckpoint;
      cfg.threshold = kNliThreshold;
      break;
    case Backend::kPromptJudge:
      cfg.checkpoint_ref = kDefaultJudgeCheckpoint;
      cfg.threshold = 0.5;
      break;
  }
  return cfg;
}

void ScorerConfig::validate() const {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ConfigError(fmt::format("threshold must lie in (0, 1), got {}", threshold));
  }
  if (max_sequence_length <= 0) {
    throw ConfigError(fmt::format("max_sequence_length must be positive, got {}",
                                  max_sequence_length));
  }
  if (checkpoint_ref.empty()) throw ConfigError("checkpoint_ref is empty");
}

nlohmann::json to_json(const ScorerOutput& output) {
  return {{"label", to_string(output.label)},
          {"p_hallucination", output.p_hallucination},
          {"raw", output.raw}};
}

ScorerOutput scorer_output_from_json(const nlohmann::json& j) {
  try {
    ScorerOutput out;
    out.label = parse_label(j.at("label").get<std::string>());
    out.p_hallucination = j.at("p_hallucination").get<double>();
    out.raw = j.value("raw", std::map<std::string, double>{});
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed scorer output: ") + e.what());
  }
}

ScorerOutput decide_consistency(double consistency, double threshold) {
  return {consistency > threshold ? Label::kNotHallucination : Label::kHallucination,
          1.0 - consistency,
          {{"consistency", consistency}}};
}

ScorerOutput decide_nli(const NliMasses& masses, double threshold) {
  return {masses.entailment >= threshold ? Label::kNotHallucination : Label::kHallucination,
          1.0 - masses.entailment,
          {{"entailment", masses.entailment},
           {"neutral", masses.neutral},
           {"contradiction", masses.contradiction}}};
}

std::string judge_prompt_render(const EvidencePair& pair) {
  std::string prompt = "Context ";
  prompt += pair.premise;
  prompt += "\nSentence: ";
  prompt += pair.hypothesis;
  prompt += "\nIs the sentence supported by the context above?\nAnswer Yes or No:";
  return prompt;
}

ScorerOutput judge_prompt_parse(std::string_view first_token, double first_token_probability,
                                std::mt19937_64& rng) {
  if (!(first_token_probability >= 0.0 && first_token_probability <= 1.0)) {
    throw BackendError(
        fmt::format("token probability {} is outside [0, 1]", first_token_probability));
  }
  const std::string_view answer = strip_answer_prefix(first_token);
  std::map<std::string, double> raw{{"first_token_probability", first_token_probability}};
  if (starts_with_ci(answer, "yes")) {
    return {Label::kNotHallucination, 1.0 - first_token_probability, std::move(raw)};
  }
  if (starts_with_ci(answer, "no")) {
    return {Label::kHallucination, first_token_probability, std::move(raw)};
  }
  const Label coin = (rng() >> 63) != 0 ? Label::kHallucination : Label::kNotHallucination;
  return {coin, 0.5, std::move(raw)};
}

std::mt19937_64 judge_rng(std::uint64_t seed, std::string_view prompt) {
  const std::uint64_t h = fingerprint64(prompt);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
  return std::mt19937_64(seq);
}

std::size_t whitespace_token_count(std::string_view text) {
  std::size_t count = 0;
  bool in_token = false;
  for (char c : text) {
    const bool space = is_space(c);
    if (!space && !in_token) ++count;
    in_token = !space;
  }
  return count;
}

EvidencePair truncate_pair(const EvidencePair& pair, int max_tokens) {
  std::size_t premise_len = whitespace_token_count(pair.premise);
  std::size_t hyp_len = whitespace_token_count(pair.hypothesis);
  const auto budget = static_cast<std::size_t>(std::max(max_tokens, 0));
  if (premise_len + hyp_len <= budget) return pair;

  const std::size_t premise_full = premise_len, hyp_full = hyp_len;
  while (premise_len + hyp_len > budget) {
    if (premise_len >= hyp_len) {
      --premise_len;
    } else {
      --hyp_len;
    }
  }
  EvidencePair out = pair;
  if (premise_len < premise_full) out.premise.resize(prefix_end(pair.premise, premise_len));
  if (hyp_len < hyp_full) out.hypothesis.resize(prefix_end(pair.hypothesis, hyp_len));
  return out;
}

namespace {

std::vector<ScorerOutput> score_with(const ScorerConfig& cfg, Engine& engine,
                                     std::span<const EvidencePair> pairs) {
  std::vector<EvidencePair> inputs;
  inputs.reserve(pairs.size());
  for (const auto& pair : pairs) inputs.push_back(truncate_pair(pair, cfg.max_sequence_length));

  std::vector<ScorerOutput> out;
  out.reserve(pairs.size());
  switch (cfg.backend) {
    case Backend::kConsistency: {
      const auto scores = engine.consistency(inputs);
      if (scores.size() != inputs.size()) throw BackendError("engine dropped items");
      for (std::size_t i = 0; i < scores.size(); ++i) {
        check_fraction(scores[i], "consistency score", i);
        out.push_back(decide_consistency(scores[i], cfg.threshold));
      }
      break;
    }
    case Backend::kNli: {
      const auto masses = engine.classify(inputs);
      if (masses.size() != inputs.size()) throw BackendError("engine dropped items");
      for (std::size_t i = 0; i < masses.size(); ++i) {
        const NliMasses& m = masses[i];
        check_fraction(m.entailment, "entailment", i);
        check_fraction(m.neutral, "neutral", i);
        check_fraction(m.contradiction, "contradiction", i);
        if (std::abs(m.entailment + m.neutral + m.contradiction - 1.0) > kMassTolerance) {
          throw BackendError("NLI class masses do not sum to 1", i);
        }
        out.push_back(decide_nli(m, cfg.threshold));
      }
      break;
    }
    case Backend::kPromptJudge: {
      std::vector<JudgeRequest> requests;
      requests.reserve(inputs.size());
      for (std::size_t i = 0; i < inputs.size(); ++i) {
        requests.push_back({judge_prompt_render(inputs[i]), pairs[i]});
      }
      const auto answers = engine.answer(requests);
      if (answers.size() != requests.size()) throw BackendError("engine dropped items");
      for (std::size_t i = 0; i < answers.size(); ++i) {
        auto rng = judge_rng(cfg.seed, requests[i].prompt);
        try {
          out.push_back(judge_prompt_parse(answers[i].first_token, answers[i].probability, rng));
        } catch (const BackendError& e) {
          throw BackendError(e.what(), i);
        }
      }
      break;
    }
  }
  return out;
}

}  // namespace

ScorerOutput score_consistency(const EvidencePair& pair, const ScorerConfig& cfg,
                               Engine& engine) {
  if (cfg.backend != Backend::kConsistency) throw ConfigError("config is not a consistency scorer");
  return score_with(cfg, engine, std::span(&pair, 1)).at(0);
}

ScorerOutput score_nli(const EvidencePair& pair, const ScorerConfig& cfg, Engine& engine) {
  if (cfg.backend != Backend::kNli) throw ConfigError("config is not an NLI scorer");
  return score_with(cfg, engine, std::span(&pair, 1)).at(0);
}

ScorerOutput score_judge(const EvidencePair& pair, const ScorerConfig& cfg, Engine& engine) {
  if (cfg.backend != Backend::kPromptJudge) throw ConfigError("config is not a prompt judge");
  return score_with(cfg, engine, std::span(&pair, 1)).at(0);
}

Scorer::Scorer(ScorerConfig cfg, const EngineContext& context) : cfg_(std::move(cfg)) {
  cfg_.validate();
  engine_ = make_engine(cfg_.backend, resolve_checkpoint(cfg_.checkpoint_ref, context),
                        cfg_.max_sequence_length, context);
}

Scorer::Scorer(ScorerConfig cfg, std::unique_ptr<Engine> engine)
    : cfg_(std::move(cfg)), engine_(std::move(engine)) {
  cfg_.validate();
  if (!engine_) throw ConfigError("scorer needs an engine");
}

ScorerOutput Scorer::score(const EvidencePair& pair) {
  return score_with(cfg_, *engine_, std::span(&pair, 1)).at(0);
}

std::vector<ScorerOutput> Scorer::score_batch(std::span<const EvidencePair> pairs) {
  std::vector<ScorerOutput> out;
  out.reserve(pairs.size());
  const std::size_t chunk = std::max<std::size_t>(1, engine_->preferred_batch_size());
  for (std::size_t start = 0; start < pairs.size(); start += chunk) {
    const auto part = pairs.subspan(start, std::min(chunk, pairs.size() - start));
    try {
      auto scored = score_with(cfg_, *engine_, part);
      std::move(scored.begin(), scored.end(), std::back_inserter(out));
    } catch (const BackendError& e) {
      if (!e.index()) {
        throw BackendError(fmt::format("items {}..{}: {}", start, start + part.size() - 1,
                                       e.what()));
      }
      const std::size_t at = start + *e.index();
      throw BackendError(fmt::format("item {}: {}", at, e.what()), at);
    }
  }
  return out;
}

}  // namespace shroom
