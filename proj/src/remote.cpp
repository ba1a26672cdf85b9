#include "shroom/remote.hpp"

#include <cmath>

#include <fmt/format.h>
#include <httplib.h>

#include "shroom/errors.hpp"

namespace shroom {
namespace {

using nlohmann::json;

const json& reply_array(const json& reply, const char* key, std::size_t expected) {
  if (!reply.is_object() || !reply.contains(key) || !reply[key].is_array()) {
    throw BackendError(fmt::format("inference reply lacks an array '{}'", key));
  }
  const json& items = reply[key];
  if (items.size() != expected) {
    throw BackendError(fmt::format("inference reply has {} items for {} inputs",
                                   items.size(), expected));
  }
  return items;
}

}  // namespace

nlohmann::json post_json(const std::string& endpoint, const std::string& path,
                         const nlohmann::json& body, double timeout_seconds) {
  if (endpoint.empty()) {
    throw BackendError("no inference endpoint configured for registry checkpoints");
  }
  httplib::Client client(endpoint);
  if (!client.is_valid()) throw BackendError("invalid inference endpoint '" + endpoint + "'");
  const auto seconds = static_cast<time_t>(std::ceil(timeout_seconds));
  client.set_read_timeout(seconds, 0);
  client.set_write_timeout(seconds, 0);
  client.set_connection_timeout(std::min<time_t>(seconds, 10), 0);

  auto result = client.Post(path, body.dump(), "application/json");
  if (!result) {
    throw BackendError(fmt::format("{}{}: {}", endpoint, path, httplib::to_string(result.error())));
  }
  if (result->status < 200 || result->status >= 300) {
    throw BackendError(fmt::format("{}{}: HTTP {}: {}", endpoint, path, result->status,
                                   result->body.substr(0, 200)));
  }
  try {
    return json::parse(result->body);
  } catch (const json::parse_error& e) {
    throw BackendError(fmt::format("{}{}: malformed reply: {}", endpoint, path, e.what()));
  }
}

RemoteEngine::RemoteEngine(std::string endpoint, std::string checkpoint,
                           int max_sequence_length, double timeout_seconds)
    : endpoint_(std::move(endpoint)),
      checkpoint_(std::move(checkpoint)),
      max_sequence_length_(max_sequence_length),
      timeout_seconds_(timeout_seconds) {}

json RemoteEngine::pair_request(std::span<const EvidencePair> pairs) const {
  json items = json::array();
  for (const auto& pair : pairs) {
    items.push_back({{"premise", pair.premise}, {"hypothesis", pair.hypothesis}});
  }
  return {{"checkpoint", checkpoint_},
          {"max_sequence_length", max_sequence_length_},
          {"pairs", std::move(items)}};
}

std::vector<double> RemoteEngine::consistency(std::span<const EvidencePair> pairs) {
  const json reply =
      post_json(endpoint_, "/v1/consistency", pair_request(pairs), timeout_seconds_);
  const json& scores = reply_array(reply, "scores", pairs.size());
  std::vector<double> out;
  out.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!scores[i].is_number()) throw BackendError("consistency score is not a number", i);
    out.push_back(scores[i].get<double>());
  }
  return out;
}

std::vector<NliMasses> RemoteEngine::classify(std::span<const EvidencePair> pairs) {
  const json reply = post_json(endpoint_, "/v1/nli", pair_request(pairs), timeout_seconds_);
  const json& scores = reply_array(reply, "scores", pairs.size());
  std::vector<NliMasses> out;
  out.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    try {
      out.push_back({scores[i].at("entailment").get<double>(),
                     scores[i].at("neutral").get<double>(),
                     scores[i].at("contradiction").get<double>()});
    } catch (const json::exception& e) {
      throw BackendError(std::string("malformed NLI scores: ") + e.what(), i);
    }
  }
  return out;
}

std::vector<JudgeAnswer> RemoteEngine::answer(std::span<const JudgeRequest> requests) {
  json prompts = json::array();
  for (const auto& request : requests) prompts.push_back(request.prompt);
  const json body = {{"checkpoint", checkpoint_},
                     {"prompts", std::move(prompts)},
                     {"max_new_tokens", 1},
                     {"temperature", 0}};
  const json reply = post_json(endpoint_, "/v1/generate", body, timeout_seconds_);
  const json& outputs = reply_array(reply, "outputs", requests.size());
  std::vector<JudgeAnswer> out;
  out.reserve(outputs.size());
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    try {
      out.push_back({outputs[i].at("first_token").get<std::string>(),
                     outputs[i].at("probability").get<double>()});
    } catch (const json::exception& e) {
      throw BackendError(std::string("malformed generation output: ") + e.what(), i);
    }
  }
  return out;
}

}  // namespace shroom
