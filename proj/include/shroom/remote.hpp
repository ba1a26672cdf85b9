#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "shroom/engine.hpp"

namespace shroom {

// JSON-over-HTTP client for an external inference service hosting registry
// checkpoints. Endpoints, all POST:
//   /v1/consistency {checkpoint, max_sequence_length, pairs:[{premise,hypothesis}]}
//                   -> {scores:[s]}
//   /v1/nli         same request -> {scores:[{entailment,neutral,contradiction}]}
//   /v1/generate    {checkpoint, prompts:[...], max_new_tokens:1, temperature:0}
//                   -> {outputs:[{first_token, probability}]}
//   /v1/finetune    {checkpoint, backend, pairs:[{premise,hypothesis,target}],
//                    config, seed} -> {checkpoint}
class RemoteEngine final : public Engine {
 public:
  RemoteEngine(std::string endpoint, std::string checkpoint, int max_sequence_length,
               double timeout_seconds);

  std::vector<double> consistency(std::span<const EvidencePair> pairs) override;
  std::vector<NliMasses> classify(std::span<const EvidencePair> pairs) override;
  std::vector<JudgeAnswer> answer(std::span<const JudgeRequest> requests) override;

  std::size_t preferred_batch_size() const override { return 32; }

 private:
  nlohmann::json pair_request(std::span<const EvidencePair> pairs) const;

  std::string endpoint_;
  std::string checkpoint_;
  int max_sequence_length_;
  double timeout_seconds_;
};

// POSTs `body` to endpoint + path and returns the parsed JSON reply. Transport
// failures, non-2xx statuses and malformed replies raise BackendError.
nlohmann::json post_json(const std::string& endpoint, const std::string& path,
                         const nlohmann::json& body, double timeout_seconds);

}  // namespace shroom
