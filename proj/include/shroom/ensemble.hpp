#pragma once

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "shroom/dataset.hpp"
#include "shroom/scorers.hpp"

namespace shroom {

struct VoterPrediction {
  std::string voter_id;
  ScorerOutput output;
};

struct EnsemblePrediction {
  Label label = Label::kNotHallucination;
  double p_vote_fraction = 0.0;
  double p_averaged = 0.0;
  std::vector<VoterPrediction> votes;
};

// Strict-majority label. Throws InputError for an empty or even-sized vote.
Label majority_vote(std::span<const VoterPrediction> votes);

// Share of voters saying Hallucination. Throws InputError when empty.
double p_by_vote_fraction(std::span<const VoterPrediction> votes);

// Mean of the voters' p(Hallucination). Throws InputError when empty.
double p_by_average(std::span<const VoterPrediction> votes);

// Combines collected votes; rejects duplicate voter ids.
EnsemblePrediction aggregate_votes(std::vector<VoterPrediction> votes);

// One ensemble member. The label comes from `label_scorer`; when a
// `probability_scorer` is attached its p(Hallucination) replaces the label
// scorer's (binary-trained model votes, float-trained model supplies p).
class Voter {
 public:
  Voter(std::string id, std::unique_ptr<Scorer> label_scorer,
        std::unique_ptr<Scorer> probability_scorer = nullptr);

  const std::string& id() const { return id_; }

  VoterPrediction predict(const EvidencePair& pair);
  std::vector<VoterPrediction> predict_batch(std::span<const EvidencePair> pairs);

 private:
  VoterPrediction combine(ScorerOutput label_output,
                          const ScorerOutput* probability_output) const;

  std::string id_;
  std::unique_ptr<Scorer> label_scorer_;
  std::unique_ptr<Scorer> probability_scorer_;
};

// Failures of an individual voter are rethrown as BackendError naming it.
EnsemblePrediction predict_ensemble(const EvidencePair& pair, std::span<Voter> voters);

// Scores every pair with every voter, one thread per voter when `concurrent`.
std::vector<EnsemblePrediction> predict_ensemble_batch(std::span<const EvidencePair> pairs,
                                                       std::span<Voter> voters,
                                                       bool concurrent = true);

// Submission-shaped prediction records.
enum class PVariant { kVoteFraction, kAveraged };

std::string_view to_string(PVariant variant);
PVariant parse_p_variant(std::string_view text);

struct PredictionRecord {
  std::string id;
  Label label = Label::kNotHallucination;
  double p_hallucination = 0.0;

  bool operator==(const PredictionRecord&) const = default;
};

PredictionRecord to_record(const std::string& id, const EnsemblePrediction& prediction,
                           PVariant variant);

// [{"id", "label", "p(Hallucination)"}, ...]
std::string serialize_predictions(std::span<const PredictionRecord> records);
std::vector<PredictionRecord> parse_predictions(std::string_view json_text);
std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path);

// Per-voter detail kept next to an ensemble prediction file.
nlohmann::json voter_details_json(std::span<const std::string> ids,
                                  std::span<const EnsemblePrediction> predictions);

}  // namespace shroom
