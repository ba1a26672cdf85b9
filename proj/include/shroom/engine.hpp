#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "shroom/dataset.hpp"

namespace shroom {

struct NliMasses {
  double entailment = 0.0;
  double neutral = 0.0;
  double contradiction = 0.0;

  bool operator==(const NliMasses&) const = default;
};

struct JudgeAnswer {
  std::string first_token;
  double probability = 0.0;
};

// The rendered prompt plus the pair it was rendered from.
struct JudgeRequest {
  std::string prompt;
  EvidencePair pair;
};

// Raw model access. Engines produce the scores that the decision rules in
// scorers.hpp threshold. Every method is batch-oriented and must be a pure
// function of each item; the base implementations throw BackendError.
class Engine {
 public:
  virtual ~Engine() = default;

  virtual std::vector<double> consistency(std::span<const EvidencePair> pairs);
  virtual std::vector<NliMasses> classify(std::span<const EvidencePair> pairs);
  virtual std::vector<JudgeAnswer> answer(std::span<const JudgeRequest> requests);

  // Preferred request size; Scorer splits batches accordingly.
  virtual std::size_t preferred_batch_size() const { return 64; }
};

// Fixed lookup table for the stub backend. Layout:
//   { "<key>": [ {"hypothesis": ..., "premise": ... (optional),
//                 "consistency": s, "entailment": e, "neutral": n,
//                 "contradiction": c, "first_token": t, "probability": q}, ...] }
// Entries without a premise match any premise. Missing numbers fall back to
// the hash-derived defaults below.
class StubTable {
 public:
  struct Entry {
    std::optional<std::string> premise;
    std::string hypothesis;
    std::optional<double> consistency;
    std::optional<NliMasses> nli;
    std::optional<JudgeAnswer> judge;
  };

  StubTable() = default;
  static StubTable from_json(const nlohmann::json& doc);
  static StubTable load(const std::filesystem::path& path);

  // Exact (premise, hypothesis) match first, then a premise-less entry.
  const Entry* find(const std::string& key, const EvidencePair& pair) const;

 private:
  // key -> hypothesis -> entries
  std::map<std::string, std::map<std::string, std::vector<Entry>>> entries_;
};

// Engine backed by a StubTable. Items absent from the table get deterministic
// values derived from SHA-256 of (key, premise, hypothesis).
class StubEngine final : public Engine {
 public:
  StubEngine(std::string key, std::shared_ptr<const StubTable> table);

  std::vector<double> consistency(std::span<const EvidencePair> pairs) override;
  std::vector<NliMasses> classify(std::span<const EvidencePair> pairs) override;
  std::vector<JudgeAnswer> answer(std::span<const JudgeRequest> requests) override;

  const std::string& key() const { return key_; }

 private:
  std::string key_;
  std::shared_ptr<const StubTable> table_;
};

// Everything needed to turn a checkpoint reference into an Engine.
struct EngineContext {
  std::shared_ptr<const StubTable> stub_table;
  // Base URL of an inference service for registry identifiers.
  std::string endpoint;
  double timeout_seconds = 600.0;
  // Target of "@name" references: a JSON object name -> checkpoint ref.
  std::filesystem::path checkpoint_index;
};

}  // namespace shroom
