#include "shroom/ensemble.hpp"

#include <algorithm>
#include <future>
#include <set>

#include <fmt/format.h>

#include "shroom/errors.hpp"
#include "shroom/util.hpp"

namespace shroom {
namespace {

using nlohmann::json;

std::size_t hallucination_votes(std::span<const VoterPrediction> votes) {
  return static_cast<std::size_t>(std::count_if(votes.begin(), votes.end(), [](const auto& v) {
    return v.output.label == Label::kHallucination;
  }));
}

}  // namespace

Label majority_vote(std::span<const VoterPrediction> votes) {
  if (votes.empty()) throw InputError("majority vote over zero voters");
  if (votes.size() % 2 == 0) {
    throw InputError(fmt::format("majority vote needs an odd number of voters, got {}",
                                 votes.size()));
  }
  return 2 * hallucination_votes(votes) > votes.size() ? Label::kHallucination
                                                       : Label::kNotHallucination;
}

double p_by_vote_fraction(std::span<const VoterPrediction> votes) {
  if (votes.empty()) throw InputError("vote fraction over zero voters");
  return static_cast<double>(hallucination_votes(votes)) / static_cast<double>(votes.size());
}

double p_by_average(std::span<const VoterPrediction> votes) {
  if (votes.empty()) throw InputError("average over zero voters");
  double total = 0.0;
  for (const auto& v : votes) {
    if (!(v.output.p_hallucination >= 0.0 && v.output.p_hallucination <= 1.0)) {
      throw InputError(fmt::format("voter '{}' reported p = {}", v.voter_id,
                                   v.output.p_hallucination));
    }
    total += v.output.p_hallucination;
  }
  return total / static_cast<double>(votes.size());
}

EnsemblePrediction aggregate_votes(std::vector<VoterPrediction> votes) {
  std::set<std::string> seen;
  for (const auto& v : votes) {
    if (!seen.insert(v.voter_id).second) {
      throw InputError("duplicate voter id '" + v.voter_id + "'");
    }
  }
  EnsemblePrediction out;
  out.label = majority_vote(votes);
  out.p_vote_fraction = p_by_vote_fraction(votes);
  out.p_averaged = p_by_average(votes);
  out.votes = std::move(votes);
  return out;
}

Voter::Voter(std::string id, std::unique_ptr<Scorer> label_scorer,
             std::unique_ptr<Scorer> probability_scorer)
    : id_(std::move(id)),
      label_scorer_(std::move(label_scorer)),
      probability_scorer_(std::move(probability_scorer)) {
  if (!label_scorer_) throw ConfigError("voter '" + id_ + "' has no label scorer");
}

VoterPrediction Voter::combine(ScorerOutput label_output,
                               const ScorerOutput* probability_output) const {
  VoterPrediction out{id_, std::move(label_output)};
  if (probability_output) {
    out.output.p_hallucination = probability_output->p_hallucination;
    for (const auto& [name, value] : probability_output->raw) {
      out.output.raw["probability_model." + name] = value;
    }
  }
  return out;
}

VoterPrediction Voter::predict(const EvidencePair& pair) {
  return predict_batch(std::span(&pair, 1)).at(0);
}

std::vector<VoterPrediction> Voter::predict_batch(std::span<const EvidencePair> pairs) {
  auto labels = label_scorer_->score_batch(pairs);
  std::vector<ScorerOutput> probabilities;
  if (probability_scorer_) probabilities = probability_scorer_->score_batch(pairs);
  std::vector<VoterPrediction> out;
  out.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out.push_back(combine(std::move(labels[i]),
                          probability_scorer_ ? &probabilities[i] : nullptr));
  }
  return out;
}

EnsemblePrediction predict_ensemble(const EvidencePair& pair, std::span<Voter> voters) {
  return predict_ensemble_batch(std::span(&pair, 1), voters, false).at(0);
}

std::vector<EnsemblePrediction> predict_ensemble_batch(std::span<const EvidencePair> pairs,
                                                       std::span<Voter> voters,
                                                       bool concurrent) {
  if (voters.empty() || voters.size() % 2 == 0) {
    throw ConfigError(fmt::format("an ensemble needs an odd number of voters, got {}",
                                  voters.size()));
  }
  auto run = [&pairs](Voter& voter) {
    try {
      return voter.predict_batch(pairs);
    } catch (const BackendError& e) {
      throw BackendError("voter '" + voter.id() + "': " + e.what(), e.index());
    }
  };

  std::vector<std::vector<VoterPrediction>> per_voter;
  per_voter.reserve(voters.size());
  if (concurrent && voters.size() > 1) {
    std::vector<std::future<std::vector<VoterPrediction>>> jobs;
    for (Voter& voter : voters) {
      jobs.push_back(std::async(std::launch::async, run, std::ref(voter)));
    }
    for (auto& job : jobs) job.wait();
    for (auto& job : jobs) per_voter.push_back(job.get());
  } else {
    for (Voter& voter : voters) per_voter.push_back(run(voter));
  }

  std::vector<EnsemblePrediction> out;
  out.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    std::vector<VoterPrediction> votes;
    votes.reserve(voters.size());
    for (auto& column : per_voter) votes.push_back(std::move(column[i]));
    out.push_back(aggregate_votes(std::move(votes)));
  }
  return out;
}

std::string_view to_string(PVariant variant) {
  return variant == PVariant::kVoteFraction ? "vote_fraction" : "averaged";
}

PVariant parse_p_variant(std::string_view text) {
  std::string lower = to_lower_ascii(text);
  std::replace(lower.begin(), lower.end(), '-', '_');
  if (lower == "vote_fraction" || lower == "majority_vote") return PVariant::kVoteFraction;
  if (lower == "averaged" || lower == "average") return PVariant::kAveraged;
  throw ConfigError("unknown p variant '" + std::string(text) + "'");
}

PredictionRecord to_record(const std::string& id, const EnsemblePrediction& prediction,
                           PVariant variant) {
  return {id, prediction.label,
          variant == PVariant::kVoteFraction ? prediction.p_vote_fraction
                                             : prediction.p_averaged};
}

std::string serialize_predictions(std::span<const PredictionRecord> records) {
  json doc = json::array();
  for (const auto& r : records) {
    doc.push_back({{"id", id_to_json(r.id)},
                   {"label", to_string(r.label)},
                   {"p(Hallucination)", r.p_hallucination}});
  }
  return doc.dump(2);
}

std::vector<PredictionRecord> parse_predictions(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed prediction file: ") + e.what());
  }
  if (!doc.is_array()) throw ParseError("prediction file must be a JSON array");
  std::vector<PredictionRecord> out;
  out.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const json& row = doc[i];
    try {
      PredictionRecord r;
      const json& id = row.at("id");
      r.id = id.is_string() ? id.get<std::string>() : std::to_string(id.get<long long>());
      r.label = parse_label(row.at("label").get<std::string>());
      const json& p = row.contains("p(Hallucination)") ? row.at("p(Hallucination)")
                                                       : row.at("p_hallucination");
      r.p_hallucination = p.get<double>();
      if (!(r.p_hallucination >= 0.0 && r.p_hallucination <= 1.0)) {
        throw ParseError("p(Hallucination) outside [0, 1]");
      }
      out.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw ParseError(fmt::format("prediction {}: {}", i, e.what()));
    } catch (const ParseError& e) {
      throw ParseError(fmt::format("prediction {}: {}", i, e.what()));
    }
  }
  return out;
}

std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path) {
  try {
    return parse_predictions(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

nlohmann::json voter_details_json(std::span<const std::string> ids,
                                  std::span<const EnsemblePrediction> predictions) {
  json doc = json::array();
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    json votes = json::array();
    for (const auto& v : predictions[i].votes) {
      json vote = to_json(v.output);
      vote["voter_id"] = v.voter_id;
      votes.push_back(std::move(vote));
    }
    doc.push_back({{"id", id_to_json(ids[i])},
                   {"label", to_string(predictions[i].label)},
                   {"p_vote_fraction", predictions[i].p_vote_fraction},
                   {"p_averaged", predictions[i].p_averaged},
                   {"votes", std::move(votes)}});
  }
  return doc;
}

}  // namespace shroom
