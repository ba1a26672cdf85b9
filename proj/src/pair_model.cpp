#include "shroom/pair_model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_set>

#include "shroom/errors.hpp"

namespace shroom {

const std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "unigram_precision", "unigram_recall",    "bigram_precision",
    "char_trigram_jaccard", "lcs_ratio",      "length_ratio",
    "number_mismatch",   "novel_content_rate"};

namespace {

using nlohmann::json;

bool is_token_byte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
         (c >= 'A' && c <= 'Z') || c >= 0x80;
}

bool is_number(const std::string& token) {
  return std::all_of(token.begin(), token.end(),
                     [](char c) { return c >= '0' && c <= '9'; });
}

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

std::size_t lcs_length(const std::vector<std::string>& a,
                       const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::set<std::string> char_trigrams(const std::vector<std::string>& tokens) {
  std::string joined;
  for (const auto& t : tokens) {
    if (!joined.empty()) joined += ' ';
    joined += t;
  }
  std::set<std::string> grams;
  if (joined.size() < 3) {
    if (!joined.empty()) grams.insert(joined);
    return grams;
  }
  for (std::size_t i = 0; i + 3 <= joined.size(); ++i) grams.insert(joined.substr(i, 3));
  return grams;
}

FeatureVector feature_vector_from_json(const json& j) {
  FeatureVector out{};
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    out[i] = j.at(std::string(kFeatureNames[i])).get<double>();
  }
  return out;
}

json feature_vector_to_json(const FeatureVector& v) {
  json j = json::object();
  for (std::size_t i = 0; i < kFeatureCount; ++i) j[std::string(kFeatureNames[i])] = v[i];
  return j;
}

constexpr std::array<const char*, 3> kNliRowNames = {"entailment", "neutral",
                                                     "contradiction"};

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_token_byte(c)) {
      current += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : ch;
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

FeatureVector pair_features(const EvidencePair& pair) {
  const auto premise = tokenize(pair.premise);
  const auto hyp = tokenize(pair.hypothesis);
  const std::unordered_set<std::string> premise_set(premise.begin(), premise.end());
  const std::unordered_set<std::string> hyp_set(hyp.begin(), hyp.end());

  std::size_t supported = 0, numbers = 0, unsupported_numbers = 0, content = 0,
              novel_content = 0;
  for (const auto& t : hyp) {
    const bool in_premise = premise_set.contains(t);
    supported += in_premise;
    if (is_number(t)) {
      ++numbers;
      unsupported_numbers += !in_premise;
    }
    if (t.size() >= 4) {
      ++content;
      novel_content += !in_premise;
    }
  }
  std::size_t recalled = 0;
  for (const auto& t : premise) recalled += hyp_set.contains(t);

  double bigram_precision = ratio(supported, hyp.size());
  if (hyp.size() >= 2) {
    std::unordered_set<std::string> premise_bigrams;
    for (std::size_t i = 0; i + 1 < premise.size(); ++i) {
      premise_bigrams.insert(premise[i] + '\x1f' + premise[i + 1]);
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i + 1 < hyp.size(); ++i) {
      hits += premise_bigrams.contains(hyp[i] + '\x1f' + hyp[i + 1]);
    }
    bigram_precision = ratio(hits, hyp.size() - 1);
  }

  const auto grams_p = char_trigrams(premise);
  const auto grams_h = char_trigrams(hyp);
  std::size_t shared = 0;
  for (const auto& g : grams_h) shared += grams_p.contains(g);
  const std::size_t uni = grams_p.size() + grams_h.size() - shared;

  const std::size_t shorter = std::min(premise.size(), hyp.size());
  const std::size_t longer = std::max(premise.size(), hyp.size());

  return {ratio(supported, hyp.size()),
          ratio(recalled, premise.size()),
          bigram_precision,
          ratio(shared, uni),
          ratio(lcs_length(hyp, premise), hyp.size()),
          ratio(shorter, longer),
          ratio(unsupported_numbers, numbers),
          ratio(novel_content, content)};
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

NliMasses softmax3(const std::array<double, 3>& logits) {
  const double m = std::max({logits[0], logits[1], logits[2]});
  std::array<double, 3> e{};
  double total = 0.0;
  for (std::size_t k = 0; k < 3; ++k) total += e[k] = std::exp(logits[k] - m);
  return {e[0] / total, e[1] / total, e[2] / total};
}

double ConsistencyHead::logit(const FeatureVector& x) const {
  double z = bias;
  for (std::size_t i = 0; i < kFeatureCount; ++i) z += weights[i] * x[i];
  return z;
}

std::array<double, 3> NliHead::logits(const FeatureVector& x) const {
  std::array<double, 3> z = bias;
  for (std::size_t k = 0; k < 3; ++k) {
    for (std::size_t i = 0; i < kFeatureCount; ++i) z[k] += weights[k][i] * x[i];
  }
  return z;
}

ConsistencyHead builtin_consistency_head() {
  return {{2.5, 0.5, 1.5, 2.0, 1.0, 0.5, -1.5, -2.0}, -3.0};
}

NliHead builtin_nli_head() {
  NliHead head;
  head.weights[kEntailmentRow] = {2.5, 0.5, 1.5, 2.0, 1.0, 0.5, -1.5, -2.0};
  head.weights[kNeutralRow] = {0.5, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0, 0.0};
  head.weights[kContradictionRow] = {-2.0, -0.5, -1.0, -1.5, -1.0, 0.0, 2.0, 2.0};
  head.bias = {-3.0, 0.0, 0.5};
  return head;
}

nlohmann::json to_json(const ConsistencyHead& head) {
  return json{{"kind", "consistency"},
              {"weights", feature_vector_to_json(head.weights)},
              {"bias", head.bias}};
}

nlohmann::json to_json(const NliHead& head) {
  json rows = json::object();
  for (std::size_t k = 0; k < 3; ++k) {
    rows[kNliRowNames[k]] = {{"weights", feature_vector_to_json(head.weights[k])},
                             {"bias", head.bias[k]}};
  }
  return json{{"kind", "nli"}, {"classes", rows}};
}

ConsistencyHead consistency_head_from_json(const nlohmann::json& j) {
  try {
    if (j.at("kind") != "consistency") throw BackendError("weights are not a consistency head");
    return {feature_vector_from_json(j.at("weights")), j.at("bias").get<double>()};
  } catch (const json::exception& e) {
    throw BackendError(std::string("malformed consistency weights: ") + e.what());
  }
}

NliHead nli_head_from_json(const nlohmann::json& j) {
  try {
    if (j.at("kind") != "nli") throw BackendError("weights are not an NLI head");
    NliHead head;
    for (std::size_t k = 0; k < 3; ++k) {
      const json& row = j.at("classes").at(kNliRowNames[k]);
      head.weights[k] = feature_vector_from_json(row.at("weights"));
      head.bias[k] = row.at("bias").get<double>();
    }
    return head;
  } catch (const json::exception& e) {
    throw BackendError(std::string("malformed NLI weights: ") + e.what());
  }
}

std::vector<double> NativeConsistencyEngine::consistency(
    std::span<const EvidencePair> pairs) {
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const auto& pair : pairs) out.push_back(head_.predict(pair_features(pair)));
  return out;
}

std::vector<NliMasses> NativeNliEngine::classify(std::span<const EvidencePair> pairs) {
  std::vector<NliMasses> out;
  out.reserve(pairs.size());
  for (const auto& pair : pairs) out.push_back(head_.predict(pair_features(pair)));
  return out;
}

}  // namespace shroom
