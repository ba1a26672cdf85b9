#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "shroom/dataset.hpp"
#include "shroom/engine.hpp"

namespace shroom {

// Lexical pair model: a linear head over overlap features between premise and
// hypothesis. It is the in-process engine behind "builtin:" checkpoints and the
// model the native trainer fine-tunes.

inline constexpr std::size_t kFeatureCount = 8;
using FeatureVector = std::array<double, kFeatureCount>;

// Feature order, also used as JSON field names in weight files.
extern const std::array<std::string_view, kFeatureCount> kFeatureNames;

// Lower-cased ASCII alphanumerics and any non-ASCII bytes form tokens; every
// other byte separates them.
std::vector<std::string> tokenize(std::string_view text);

// All features lie in [0, 1].
FeatureVector pair_features(const EvidencePair& pair);

double sigmoid(double z);

// Softmax over [entailment, neutral, contradiction] logits.
NliMasses softmax3(const std::array<double, 3>& logits);

struct ConsistencyHead {
  FeatureVector weights{};
  double bias = 0.0;

  double logit(const FeatureVector& x) const;
  double predict(const FeatureVector& x) const { return sigmoid(logit(x)); }
};

enum NliClassIndex : std::size_t { kEntailmentRow = 0, kNeutralRow = 1, kContradictionRow = 2 };

struct NliHead {
  std::array<FeatureVector, 3> weights{};
  std::array<double, 3> bias{};

  std::array<double, 3> logits(const FeatureVector& x) const;
  NliMasses predict(const FeatureVector& x) const { return softmax3(logits(x)); }
};

// Hand-set priors: consistency rises with lexical support, contradiction with
// unsupported content.
ConsistencyHead builtin_consistency_head();
NliHead builtin_nli_head();

nlohmann::json to_json(const ConsistencyHead& head);
nlohmann::json to_json(const NliHead& head);
ConsistencyHead consistency_head_from_json(const nlohmann::json& j);
NliHead nli_head_from_json(const nlohmann::json& j);

inline constexpr std::string_view kWeightsFile = "weights.json";

class NativeConsistencyEngine final : public Engine {
 public:
  explicit NativeConsistencyEngine(ConsistencyHead head) : head_(head) {}
  std::vector<double> consistency(std::span<const EvidencePair> pairs) override;

 private:
  ConsistencyHead head_;
};

class NativeNliEngine final : public Engine {
 public:
  explicit NativeNliEngine(NliHead head) : head_(head) {}
  std::vector<NliMasses> classify(std::span<const EvidencePair> pairs) override;

 private:
  NliHead head_;
};

}  // namespace shroom
