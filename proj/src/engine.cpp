#include "shroom/engine.hpp"

#include <cmath>

#include <fmt/format.h>

#include "shroom/errors.hpp"
#include "shroom/util.hpp"

namespace shroom {
namespace {

using nlohmann::json;

constexpr double kMassTolerance = 1e-6;

double checked_fraction(const json& entry, const char* key, const std::string& where) {
  const json& value = entry.at(key);
  if (!value.is_number()) throw ConfigError(fmt::format("{}: '{}' must be a number", where, key));
  const double x = value.get<double>();
  if (!(x >= 0.0 && x <= 1.0)) {
    throw ConfigError(fmt::format("{}: '{}' = {} is outside [0, 1]", where, key, x));
  }
  return x;
}

StubTable::Entry parse_entry(const json& entry, const std::string& where) {
  if (!entry.is_object() || !entry.contains("hypothesis") || !entry["hypothesis"].is_string()) {
    throw ConfigError(where + ": entry needs a string 'hypothesis'");
  }
  StubTable::Entry out;
  out.hypothesis = entry["hypothesis"].get<std::string>();
  if (entry.contains("premise")) out.premise = entry["premise"].get<std::string>();
  if (entry.contains("consistency")) out.consistency = checked_fraction(entry, "consistency", where);

  const bool has_nli = entry.contains("entailment") || entry.contains("neutral") ||
                       entry.contains("contradiction");
  if (has_nli) {
    NliMasses m;
    m.entailment = entry.contains("entailment") ? checked_fraction(entry, "entailment", where) : 0.0;
    if (!entry.contains("neutral") && !entry.contains("contradiction")) {
      m.contradiction = 1.0 - m.entailment;
    } else {
      m.neutral = entry.contains("neutral") ? checked_fraction(entry, "neutral", where) : 0.0;
      m.contradiction =
          entry.contains("contradiction") ? checked_fraction(entry, "contradiction", where) : 0.0;
    }
    const double total = m.entailment + m.neutral + m.contradiction;
    if (std::abs(total - 1.0) > kMassTolerance) {
      throw ConfigError(fmt::format("{}: NLI masses sum to {}, not 1", where, total));
    }
    out.nli = m;
  }
  if (entry.contains("first_token")) {
    JudgeAnswer answer;
    answer.first_token = entry["first_token"].get<std::string>();
    answer.probability =
        entry.contains("probability") ? checked_fraction(entry, "probability", where) : 1.0;
    out.judge = answer;
  }
  return out;
}

std::string hash_key(const std::string& key, const EvidencePair& pair, std::string_view salt) {
  std::string material = key;
  material += '\x1f';
  material += pair.premise;
  material += '\x1f';
  material += pair.hypothesis;
  material += '\x1f';
  material += salt;
  return material;
}

double hashed_unit(const std::string& key, const EvidencePair& pair, std::string_view salt) {
  return unit_interval(fingerprint64(hash_key(key, pair, salt)));
}

}  // namespace

std::vector<double> Engine::consistency(std::span<const EvidencePair>) {
  throw BackendError("this engine does not produce consistency scores");
}

std::vector<NliMasses> Engine::classify(std::span<const EvidencePair>) {
  throw BackendError("this engine does not produce NLI class masses");
}

std::vector<JudgeAnswer> Engine::answer(std::span<const JudgeRequest>) {
  throw BackendError("this engine does not generate answers");
}

StubTable StubTable::from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("stub table must be a JSON object of key -> entries");
  StubTable table;
  for (const auto& [key, entries] : doc.items()) {
    if (!entries.is_array()) throw ConfigError("stub table key '" + key + "' must map to an array");
    auto& by_hypothesis = table.entries_[key];
    for (std::size_t i = 0; i < entries.size(); ++i) {
      try {
        Entry entry = parse_entry(entries[i], fmt::format("stub table '{}'[{}]", key, i));
        by_hypothesis[entry.hypothesis].push_back(std::move(entry));
      } catch (const json::exception& e) {
        throw ConfigError(fmt::format("stub table '{}'[{}]: {}", key, i, e.what()));
      }
    }
  }
  return table;
}

StubTable StubTable::load(const std::filesystem::path& path) {
  try {
    return from_json(json::parse(read_file(path)));
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

const StubTable::Entry* StubTable::find(const std::string& key, const EvidencePair& pair) const {
  auto table = entries_.find(key);
  if (table == entries_.end()) return nullptr;
  auto bucket = table->second.find(pair.hypothesis);
  if (bucket == table->second.end()) return nullptr;
  const Entry* fallback = nullptr;
  for (const Entry& entry : bucket->second) {
    if (entry.premise == pair.premise) return &entry;
    if (!entry.premise && !fallback) fallback = &entry;
  }
  return fallback;
}

StubEngine::StubEngine(std::string key, std::shared_ptr<const StubTable> table)
    : key_(std::move(key)),
      table_(table ? std::move(table) : std::make_shared<const StubTable>()) {}

std::vector<double> StubEngine::consistency(std::span<const EvidencePair> pairs) {
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const auto& pair : pairs) {
    const auto* entry = table_->find(key_, pair);
    out.push_back(entry && entry->consistency ? *entry->consistency
                                              : hashed_unit(key_, pair, "consistency"));
  }
  return out;
}

std::vector<NliMasses> StubEngine::classify(std::span<const EvidencePair> pairs) {
  std::vector<NliMasses> out;
  out.reserve(pairs.size());
  for (const auto& pair : pairs) {
    const auto* entry = table_->find(key_, pair);
    if (entry && entry->nli) {
      out.push_back(*entry->nli);
      continue;
    }
    const double e = hashed_unit(key_, pair, "entailment");
    const double r = hashed_unit(key_, pair, "split");
    out.push_back({e, (1.0 - e) * (1.0 - r), (1.0 - e) * r});
  }
  return out;
}

std::vector<JudgeAnswer> StubEngine::answer(std::span<const JudgeRequest> requests) {
  std::vector<JudgeAnswer> out;
  out.reserve(requests.size());
  for (const auto& request : requests) {
    const auto* entry = table_->find(key_, request.pair);
    if (entry && entry->judge) {
      out.push_back(*entry->judge);
      continue;
    }
    const double u = hashed_unit(key_, request.pair, "token");
    const char* token = u < 0.45 ? "Yes" : (u < 0.9 ? "No" : "Unsure");
    out.push_back({token, 0.5 + 0.5 * hashed_unit(key_, request.pair, "probability")});
  }
  return out;
}

}  // namespace shroom
