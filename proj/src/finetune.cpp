#include "shroom/finetune.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "shroom/checkpoint.hpp"
#include "shroom/errors.hpp"
#include "shroom/pair_model.hpp"
#include "shroom/remote.hpp"
#include "shroom/scorers.hpp"
#include "shroom/util.hpp"

namespace shroom {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("training config key '{}': {}", key, e.what()));
  }
}

// Decoupled weight decay Adam; decay is skipped for bias parameters.
class AdamW {
 public:
  AdamW(std::size_t size, std::vector<bool> decay_mask)
      : m_(size, 0.0), v_(size, 0.0), decay_(std::move(decay_mask)) {}

  void step(std::vector<double>& params, const std::vector<double>& grads, double lr,
            double weight_decay) {
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = kBeta1 * m_[i] + (1.0 - kBeta1) * grads[i];
      v_[i] = kBeta2 * v_[i] + (1.0 - kBeta2) * grads[i] * grads[i];
      if (decay_[i]) params[i] -= lr * weight_decay * params[i];
      params[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + kEps);
    }
  }

 private:
  static constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  std::vector<double> m_, v_;
  std::vector<bool> decay_;
  std::size_t t_ = 0;
};

// Backend-specific pieces of one optimisation run over a flat parameter vector.
struct Objective {
  std::vector<double> params;
  std::vector<bool> decay_mask;
  // Adds d(loss)/d(params) for example i to grads and returns its loss.
  std::function<double(const std::vector<double>&, std::size_t, std::vector<double>&)> example;
  // Accuracy on the evaluation features, or nullopt when there are none.
  std::function<std::optional<double>(const std::vector<double>&)> evaluate;
};

struct Schedule {
  int epochs;
  int batch_size;
  double learning_rate;
  double weight_decay;
  double warmup_share;
  int evaluation_steps;  // 0: evaluate at the end only
};

std::string metrics_line(std::size_t step, double epoch, double lr, std::optional<double> loss,
                         std::optional<double> eval_accuracy, const char* event) {
  json line = {{"event", event},
               {"step", step},
               {"epoch", epoch},
               {"learning_rate", lr},
               {"train_loss", loss ? json(*loss) : json(nullptr)},
               {"eval_accuracy", eval_accuracy ? json(*eval_accuracy) : json(nullptr)}};
  return line.dump() + "\n";
}

// Mini-batch AdamW with linear warm-up/decay. Returns the optimizer step
// count; appends JSON lines to `log`.
std::size_t optimise(Objective& objective, std::size_t n, const Schedule& schedule,
                     std::uint64_t seed, std::string& log) {
  const auto batch = static_cast<std::size_t>(schedule.batch_size);
  const std::size_t per_epoch = (n + batch - 1) / batch;
  const std::size_t total = per_epoch * static_cast<std::size_t>(schedule.epochs);
  const std::size_t warmup = warmup_steps(total, schedule.warmup_share);

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  AdamW optimizer(objective.params.size(), objective.decay_mask);
  std::vector<double> grads(objective.params.size());

  std::size_t step = 0;
  double window_loss = 0.0;
  std::size_t window_examples = 0;
  double lr = 0.0;
  for (int epoch = 0; epoch < schedule.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t end = std::min(n, start + batch);
      std::fill(grads.begin(), grads.end(), 0.0);
      for (std::size_t k = start; k < end; ++k) {
        window_loss += objective.example(objective.params, order[k], grads);
      }
      const double scale = 1.0 / static_cast<double>(end - start);
      for (double& g : grads) g *= scale;
      window_examples += end - start;

      lr = scheduled_learning_rate(step, warmup, total, schedule.learning_rate);
      optimizer.step(objective.params, grads, lr, schedule.weight_decay);
      ++step;

      if (schedule.evaluation_steps > 0 &&
          step % static_cast<std::size_t>(schedule.evaluation_steps) == 0 && step != total) {
        log += metrics_line(step, static_cast<double>(step) / static_cast<double>(per_epoch), lr,
                            window_loss / static_cast<double>(window_examples),
                            objective.evaluate(objective.params), "evaluation");
        window_loss = 0.0;
        window_examples = 0;
      }
    }
  }
  log += metrics_line(step, static_cast<double>(schedule.epochs), lr,
                      window_examples ? std::optional(window_loss / window_examples) : std::nullopt,
                      objective.evaluate(objective.params), "end");
  return step;
}

double bce(double s, double y) {
  constexpr double kFloor = 1e-12;
  return -(y * std::log(std::max(s, kFloor)) + (1.0 - y) * std::log(std::max(1.0 - s, kFloor)));
}

double consistency_target(const TrainingPair& pair) {
  if (const auto* b = std::get_if<BinaryTarget>(&pair.target)) {
    return *b == BinaryTarget::kNotHallucination ? 1.0 : 0.0;
  }
  if (const auto* r = std::get_if<double>(&pair.target)) return *r;
  throw InputError("NLI class target given to the consistency trainer");
}

std::size_t nli_target(const TrainingPair& pair) {
  const auto* c = std::get_if<NliClass>(&pair.target);
  if (!c) throw InputError("consistency target given to the NLI trainer");
  switch (*c) {
    case NliClass::kEntailment: return kEntailmentRow;
    case NliClass::kNeutral: return kNeutralRow;
    case NliClass::kContradiction: return kContradictionRow;
  }
  return kNeutralRow;
}

struct EvalFeatures {
  std::vector<FeatureVector> features;
  std::vector<Label> gold;
};

EvalFeatures eval_features(std::span<const AnnotatedSample> eval_set) {
  EvalFeatures out;
  for (const auto& s : eval_set) {
    try {
      out.features.push_back(pair_features(select_evidence_pair(s.sample)));
      out.gold.push_back(s.gold_label);
    } catch (const UnscorableSampleError&) {
    }
  }
  return out;
}

std::vector<FeatureVector> training_features(std::span<const TrainingPair> pairs) {
  std::vector<FeatureVector> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(pair_features({p.premise, p.hypothesis}));
  return out;
}

template <typename Predict>
std::optional<double> feature_accuracy(const EvalFeatures& eval, Predict predict_label) {
  if (eval.features.empty()) return std::nullopt;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < eval.features.size(); ++i) {
    hits += predict_label(eval.features[i]) == eval.gold[i];
  }
  return static_cast<double>(hits) / static_cast<double>(eval.features.size());
}

ConsistencyHead unpack_consistency(const std::vector<double>& p) {
  ConsistencyHead head;
  std::copy_n(p.begin(), kFeatureCount, head.weights.begin());
  head.bias = p[kFeatureCount];
  return head;
}

std::vector<double> pack(const ConsistencyHead& head) {
  std::vector<double> p(head.weights.begin(), head.weights.end());
  p.push_back(head.bias);
  return p;
}

NliHead unpack_nli(const std::vector<double>& p) {
  NliHead head;
  for (std::size_t k = 0; k < 3; ++k) {
    std::copy_n(p.begin() + static_cast<std::ptrdiff_t>(k * kFeatureCount), kFeatureCount,
                head.weights[k].begin());
    head.bias[k] = p[3 * kFeatureCount + k];
  }
  return head;
}

std::vector<double> pack(const NliHead& head) {
  std::vector<double> p;
  for (const auto& row : head.weights) p.insert(p.end(), row.begin(), row.end());
  p.insert(p.end(), head.bias.begin(), head.bias.end());
  return p;
}

json pairs_json(std::span<const TrainingPair> pairs) {
  json out = json::array();
  for (const auto& p : pairs) {
    json target;
    if (const auto* b = std::get_if<BinaryTarget>(&p.target)) {
      target = static_cast<int>(*b);
    } else if (const auto* r = std::get_if<double>(&p.target)) {
      target = *r;
    } else {
      target = to_string(std::get<NliClass>(p.target));
    }
    out.push_back({{"premise", p.premise}, {"hypothesis", p.hypothesis}, {"target", target}});
  }
  return out;
}

struct RunSpec {
  Backend backend;
  std::string name;  // run-id prefix
  json config;
  Schedule schedule;
};

json load_weights(const fs::path& dir) {
  try {
    return json::parse(read_file(dir / kWeightsFile));
  } catch (const json::parse_error& e) {
    throw BackendError((dir / kWeightsFile).string() + ": " + e.what());
  } catch (const InputError& e) {
    throw BackendError(e.what());
  }
}

json base_weights(Backend backend, const ResolvedCheckpoint& base) {
  if (!base.directory.empty()) return load_weights(base.directory);
  if (backend == Backend::kConsistency && base.id == "builtin:consistency") {
    return to_json(builtin_consistency_head());
  }
  if (backend == Backend::kNli && base.id == "builtin:nli") return to_json(builtin_nli_head());
  throw BackendError("builtin checkpoint '" + base.id + "' does not fit the " +
                     std::string(to_string(backend)) + " trainer");
}

Objective consistency_objective(const json& weights, std::span<const TrainingPair> pairs,
                                const EvalFeatures& eval, LabelMode mode,
                                RegressionLoss float_loss) {
  auto features = std::make_shared<std::vector<FeatureVector>>(training_features(pairs));
  auto targets = std::make_shared<std::vector<double>>();
  for (const auto& p : pairs) targets->push_back(consistency_target(p));
  const bool squared = mode == LabelMode::kFloat && float_loss == RegressionLoss::kMse;

  Objective o;
  o.params = pack(consistency_head_from_json(weights));
  o.decay_mask.assign(o.params.size(), true);
  o.decay_mask.back() = false;
  o.example = [features, targets, squared](const std::vector<double>& params, std::size_t i,
                                           std::vector<double>& grads) {
    const FeatureVector& x = (*features)[i];
    const double y = (*targets)[i];
    const double s = unpack_consistency(params).predict(x);
    const double dz = squared ? 2.0 * (s - y) * s * (1.0 - s) : s - y;
    for (std::size_t f = 0; f < kFeatureCount; ++f) grads[f] += dz * x[f];
    grads[kFeatureCount] += dz;
    return squared ? (s - y) * (s - y) : bce(s, y);
  };
  o.evaluate = [&eval](const std::vector<double>& params) {
    const ConsistencyHead head = unpack_consistency(params);
    return feature_accuracy(eval, [&](const FeatureVector& x) {
      return decide_consistency(head.predict(x), kConsistencyThreshold).label;
    });
  };
  return o;
}

Objective nli_objective(const json& weights, std::span<const TrainingPair> pairs,
                        const EvalFeatures& eval) {
  auto features = std::make_shared<std::vector<FeatureVector>>(training_features(pairs));
  auto targets = std::make_shared<std::vector<std::size_t>>();
  for (const auto& p : pairs) targets->push_back(nli_target(p));

  Objective o;
  o.params = pack(nli_head_from_json(weights));
  o.decay_mask.assign(o.params.size(), true);
  for (std::size_t k = 0; k < 3; ++k) o.decay_mask[3 * kFeatureCount + k] = false;
  o.example = [features, targets](const std::vector<double>& params, std::size_t i,
                                  std::vector<double>& grads) {
    const FeatureVector& x = (*features)[i];
    const std::size_t y = (*targets)[i];
    const NliMasses m = unpack_nli(params).predict(x);
    const std::array<double, 3> probs = {m.entailment, m.neutral, m.contradiction};
    for (std::size_t k = 0; k < 3; ++k) {
      const double dz = probs[k] - (k == y ? 1.0 : 0.0);
      for (std::size_t f = 0; f < kFeatureCount; ++f) grads[k * kFeatureCount + f] += dz * x[f];
      grads[3 * kFeatureCount + k] += dz;
    }
    return -std::log(std::max(probs[y], 1e-12));
  };
  o.evaluate = [&eval](const std::vector<double>& params) {
    const NliHead head = unpack_nli(params);
    return feature_accuracy(eval, [&](const FeatureVector& x) {
      return decide_nli(head.predict(x), kNliThreshold).label;
    });
  };
  return o;
}

std::optional<double> checkpoint_accuracy(const fs::path& dir, Backend backend,
                                          std::span<const AnnotatedSample> eval_set,
                                          const EngineContext& context) {
  std::vector<EvidencePair> pairs;
  std::vector<Label> gold;
  for (const auto& s : eval_set) {
    try {
      pairs.push_back(select_evidence_pair(s.sample));
      gold.push_back(s.gold_label);
    } catch (const UnscorableSampleError&) {
    }
  }
  if (pairs.empty()) return std::nullopt;
  ScorerConfig cfg = ScorerConfig::defaults(backend);
  cfg.checkpoint_ref = dir.string();
  Scorer scorer(cfg, context);
  const auto outputs = scorer.score_batch(pairs);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < outputs.size(); ++i) hits += outputs[i].label == gold[i];
  return static_cast<double>(hits) / static_cast<double>(outputs.size());
}

void persist(const fs::path& path, const std::string& content) {
  try {
    write_file(path, content);
  } catch (const Error& e) {
    throw BackendError(std::string("checkpoint persistence failed: ") + e.what());
  }
}

template <typename MakeObjective>
TrainResult run_training(const RunSpec& spec, std::span<const TrainingPair> pairs,
                         std::span<const AnnotatedSample> eval_set,
                         const TrainingOptions& options, MakeObjective make_objective) {
  if (pairs.empty()) throw InputError("empty training set");
  if (options.base_checkpoint.empty()) throw ConfigError("no base checkpoint to fine-tune");

  const ResolvedCheckpoint base = resolve_checkpoint(options.base_checkpoint, options.context);
  if (base.kind == EngineKind::kStub && !options.dry_run) {
    throw BackendError("stub checkpoint '" + options.base_checkpoint +
                       "' cannot be trained; use a dry run");
  }
  if (base.manifest && base.manifest->backend != to_string(spec.backend)) {
    throw BackendError("base checkpoint '" + options.base_checkpoint + "' is a " +
                       base.manifest->backend + " model");
  }

  CheckpointManifest manifest;
  manifest.backend = std::string(to_string(spec.backend));
  manifest.engine = base.kind;
  manifest.base_checkpoint = options.base_checkpoint;
  manifest.config = spec.config;
  manifest.seed = options.seed;
  manifest.train_fingerprint = fingerprint(pairs);
  manifest.train_size = pairs.size();
  manifest.dry_run = options.dry_run;

  const json identity = {{"backend", manifest.backend},
                         {"config", spec.config},
                         {"seed", options.seed},
                         {"base", options.base_checkpoint},
                         {"data", manifest.train_fingerprint},
                         {"dry_run", options.dry_run}};
  manifest.run_id = spec.name + "-" + sha256_hex(identity.dump()).substr(0, 12);
  const fs::path dir = options.runs_dir / manifest.run_id;
  spdlog::info("training {} on {} pairs -> {}", manifest.run_id, pairs.size(), dir.string());

  std::string log;
  switch (base.kind) {
    case EngineKind::kStub:
      log += metrics_line(0, 0.0, 0.0, std::nullopt, std::nullopt, "end");
      break;
    case EngineKind::kNative: {
      const json weights = base_weights(spec.backend, base);
      if (options.dry_run) {
        persist(dir / kWeightsFile, weights.dump(2) + "\n");
        log += metrics_line(0, 0.0, 0.0, std::nullopt, std::nullopt, "end");
        break;
      }
      const EvalFeatures eval = eval_features(eval_set);
      Objective objective = make_objective(weights, eval);
      manifest.optimizer_steps = optimise(objective, pairs.size(), spec.schedule, options.seed, log);
      const json trained = spec.backend == Backend::kConsistency
                               ? to_json(unpack_consistency(objective.params))
                               : to_json(unpack_nli(objective.params));
      persist(dir / kWeightsFile, trained.dump(2) + "\n");
      break;
    }
    case EngineKind::kRemote: {
      manifest.remote_checkpoint = base.id;
      if (options.dry_run) {
        log += metrics_line(0, 0.0, 0.0, std::nullopt, std::nullopt, "end");
        break;
      }
      if (options.context.endpoint.empty()) {
        throw BackendError("no inference endpoint configured for '" + base.id + "'");
      }
      const json reply = post_json(options.context.endpoint, "/v1/finetune",
                                   {{"checkpoint", base.id},
                                    {"backend", manifest.backend},
                                    {"pairs", pairs_json(pairs)},
                                    {"config", spec.config},
                                    {"seed", options.seed}},
                                   options.context.timeout_seconds);
      if (!reply.contains("checkpoint") || !reply["checkpoint"].is_string()) {
        throw BackendError("fine-tuning reply has no checkpoint identifier");
      }
      manifest.remote_checkpoint = reply["checkpoint"].get<std::string>();
      const std::size_t per_epoch =
          (pairs.size() + static_cast<std::size_t>(spec.schedule.batch_size) - 1) /
          static_cast<std::size_t>(spec.schedule.batch_size);
      manifest.optimizer_steps =
          reply.value("optimizer_steps", per_epoch * static_cast<std::size_t>(spec.schedule.epochs));
      break;
    }
  }

  // The manifest must exist before the checkpoint can be scored.
  manifest.timestamp = utc_timestamp();
  write_manifest(dir, manifest);
  manifest.trial_accuracy = checkpoint_accuracy(dir, spec.backend, eval_set, options.context);
  write_manifest(dir, manifest);
  persist(dir / kMetricsFile, log);

  return {manifest.run_id, dir, manifest.trial_accuracy, manifest.optimizer_steps};
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

}  // namespace

std::string_view to_string(LabelMode mode) {
  return mode == LabelMode::kBinary ? "binary" : "float";
}

LabelMode parse_label_mode(std::string_view text) {
  const std::string lower = to_lower_ascii(text);
  if (lower == "binary") return LabelMode::kBinary;
  if (lower == "float") return LabelMode::kFloat;
  throw ConfigError("unknown label mode '" + std::string(text) + "' (expected binary or float)");
}

std::string_view to_string(NliClass cls) {
  switch (cls) {
    case NliClass::kEntailment: return "entailment";
    case NliClass::kNeutral: return "neutral";
    case NliClass::kContradiction: return "contradiction";
  }
  return "?";
}

void HalTrainingConfig::validate() const {
  require(epochs >= 1, "epochs must be at least 1");
  require(evaluation_steps >= 1, "evaluation_steps must be at least 1");
  require(warmup_fraction >= 0.0 && warmup_fraction < 1.0, "warmup_fraction must lie in [0, 1)");
  require(learning_rate > 0.0, "learning_rate must be positive");
  require(weight_decay >= 0.0, "weight_decay must not be negative");
  require(batch_size >= 1, "batch_size must be at least 1");
}

void NLITrainingConfig::validate() const {
  require(epochs >= 1, "epochs must be at least 1");
  require(warmup_ratio >= 0.0 && warmup_ratio < 1.0, "warmup_ratio must lie in [0, 1)");
  require(learning_rate > 0.0, "learning_rate must be positive");
  require(weight_decay >= 0.0, "weight_decay must not be negative");
  require(batch_size >= 1, "batch_size must be at least 1");
}

nlohmann::json to_json(const HalTrainingConfig& c) {
  return json{{"epochs", c.epochs},
              {"evaluation_steps", c.evaluation_steps},
              {"warmup_fraction", c.warmup_fraction},
              {"label_mode", to_string(c.label_mode)},
              {"learning_rate", c.learning_rate},
              {"weight_decay", c.weight_decay},
              {"batch_size", c.batch_size},
              {"float_loss", c.float_loss == RegressionLoss::kMse ? "mse" : "bce"}};
}

nlohmann::json to_json(const NLITrainingConfig& c) {
  return json{{"epochs", c.epochs},
              {"learning_rate", c.learning_rate},
              {"warmup_ratio", c.warmup_ratio},
              {"weight_decay", c.weight_decay},
              {"batch_size", c.batch_size}};
}

HalTrainingConfig hal_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("training config must be a JSON object");
  HalTrainingConfig c;
  c.epochs = get_or(j, "epochs", c.epochs);
  c.evaluation_steps = get_or(j, "evaluation_steps", c.evaluation_steps);
  c.warmup_fraction = get_or(j, "warmup_fraction", c.warmup_fraction);
  c.label_mode = parse_label_mode(get_or<std::string>(j, "label_mode", "binary"));
  c.learning_rate = get_or(j, "learning_rate", c.learning_rate);
  c.weight_decay = get_or(j, "weight_decay", c.weight_decay);
  c.batch_size = get_or(j, "batch_size", c.batch_size);
  const std::string loss = to_lower_ascii(get_or<std::string>(j, "float_loss", "mse"));
  if (loss == "mse") {
    c.float_loss = RegressionLoss::kMse;
  } else if (loss == "bce") {
    c.float_loss = RegressionLoss::kBce;
  } else {
    throw ConfigError("unknown float_loss '" + loss + "' (expected mse or bce)");
  }
  return c;
}

NLITrainingConfig nli_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("training config must be a JSON object");
  NLITrainingConfig c;
  c.epochs = get_or(j, "epochs", c.epochs);
  c.learning_rate = get_or(j, "learning_rate", c.learning_rate);
  c.warmup_ratio = get_or(j, "warmup_ratio", c.warmup_ratio);
  c.weight_decay = get_or(j, "weight_decay", c.weight_decay);
  c.batch_size = get_or(j, "batch_size", c.batch_size);
  return c;
}

PairSet build_hal_pairs(std::span<const AnnotatedSample> samples, LabelMode mode) {
  PairSet out;
  for (const auto& s : samples) {
    EvidencePair pair;
    try {
      pair = select_evidence_pair(s.sample);
    } catch (const UnscorableSampleError&) {
      ++out.skipped;
      continue;
    }
    TrainingPair tp{std::move(pair.premise), std::move(pair.hypothesis), {}};
    if (mode == LabelMode::kBinary) {
      tp.target = s.gold_label == Label::kHallucination ? BinaryTarget::kHallucination
                                                        : BinaryTarget::kNotHallucination;
    } else {
      tp.target = 1.0 - s.gold_p_hallucination;
    }
    out.pairs.push_back(std::move(tp));
  }
  if (out.skipped) spdlog::warn("skipped {} samples without a usable premise", out.skipped);
  return out;
}

PairSet build_nli_pairs(std::span<const AnnotatedSample> samples) {
  PairSet out;
  for (const auto& s : samples) {
    EvidencePair pair;
    try {
      pair = select_evidence_pair(s.sample);
    } catch (const UnscorableSampleError&) {
      ++out.skipped;
      continue;
    }
    out.pairs.push_back({std::move(pair.premise), std::move(pair.hypothesis),
                         s.gold_label == Label::kHallucination ? NliClass::kContradiction
                                                               : NliClass::kEntailment});
  }
  if (out.skipped) spdlog::warn("skipped {} samples without a usable premise", out.skipped);
  return out;
}

std::string fingerprint(std::span<const TrainingPair> pairs) {
  return sha256_hex(pairs_json(pairs).dump());
}

std::size_t warmup_steps(std::size_t total_steps, double share) {
  // The epsilon absorbs representation error such as 0.1 * 320 = 32.000000000000004.
  const double raw = share * static_cast<double>(total_steps) - 1e-9;
  return std::min(total_steps, static_cast<std::size_t>(std::max(0.0, std::ceil(raw))));
}

double scheduled_learning_rate(std::size_t step, std::size_t warmup, std::size_t total_steps,
                               double peak) {
  if (step < warmup) return peak * static_cast<double>(step) / static_cast<double>(warmup);
  if (step >= total_steps) return 0.0;
  const double remaining = static_cast<double>(total_steps - step);
  return peak * remaining / static_cast<double>(std::max<std::size_t>(1, total_steps - warmup));
}

TrainResult train_consistency(std::span<const TrainingPair> pairs, const HalTrainingConfig& cfg,
                              std::span<const AnnotatedSample> eval_set,
                              const TrainingOptions& options) {
  cfg.validate();
  const RunSpec spec{Backend::kConsistency,
                     cfg.label_mode == LabelMode::kBinary ? "hal-binary" : "hal-float",
                     to_json(cfg),
                     {cfg.epochs, cfg.batch_size, cfg.learning_rate, cfg.weight_decay,
                      cfg.warmup_fraction, cfg.evaluation_steps}};
  return run_training(spec, pairs, eval_set, options,
                      [&](const json& weights, const EvalFeatures& eval) {
                        return consistency_objective(weights, pairs, eval, cfg.label_mode,
                                                     cfg.float_loss);
                      });
}

TrainResult train_nli(std::span<const TrainingPair> pairs, const NLITrainingConfig& cfg,
                      std::span<const AnnotatedSample> eval_set, const TrainingOptions& options) {
  cfg.validate();
  const RunSpec spec{Backend::kNli,
                     "nli",
                     to_json(cfg),
                     {cfg.epochs, cfg.batch_size, cfg.learning_rate, cfg.weight_decay,
                      cfg.warmup_ratio, 0}};
  return run_training(spec, pairs, eval_set, options,
                      [&](const json& weights, const EvalFeatures& eval) {
                        return nli_objective(weights, pairs, eval);
                      });
}

const SweepRow* SweepTable::best() const {
  if (rows.empty() || !rows.front().trial_accuracy) return nullptr;
  return &rows.front();
}

SweepTable sweep_nli(std::span<const NLITrainingConfig> grid, std::span<const TrainingPair> train,
                     std::span<const AnnotatedSample> trial, const TrainingOptions& options) {
  if (grid.empty()) throw ConfigError("empty sweep grid");
  if (trial.empty()) throw InputError("the sweep needs a non-empty trial split");
  std::vector<SweepRow> scored, failed;
  for (const auto& cfg : grid) {
    SweepRow row{cfg, std::nullopt, {}, {}};
    try {
      const TrainResult result = train_nli(train, cfg, trial, options);
      row.trial_accuracy = result.trial_accuracy;
      row.checkpoint_dir = result.checkpoint_dir;
    } catch (const Error& e) {
      spdlog::warn("sweep row failed: {}", e.what());
      row.error = e.what();
    }
    (row.trial_accuracy ? scored : failed).push_back(std::move(row));
  }
  std::stable_sort(scored.begin(), scored.end(), [](const SweepRow& a, const SweepRow& b) {
    return *a.trial_accuracy > *b.trial_accuracy;
  });
  SweepTable table;
  table.rows = std::move(scored);
  table.rows.insert(table.rows.end(), std::make_move_iterator(failed.begin()),
                    std::make_move_iterator(failed.end()));
  return table;
}

nlohmann::json to_json(const SweepTable& table) {
  json rows = json::array();
  for (const auto& r : table.rows) {
    rows.push_back({{"config", to_json(r.config)},
                    {"trial_accuracy", r.trial_accuracy ? json(*r.trial_accuracy) : json(nullptr)},
                    {"error", r.error.empty() ? json(nullptr) : json(r.error)},
                    {"checkpoint", r.checkpoint_dir.string()}});
  }
  const SweepRow* best = table.best();
  return json{{"rows", rows}, {"best", best ? to_json(best->config) : json(nullptr)}};
}

std::string render_markdown(const SweepTable& table) {
  std::string out =
      "| epochs | learning rate | warm-up ratio | weight decay | trial accuracy |\n"
      "|---:|---:|---:|---:|---|\n";
  for (const auto& r : table.rows) {
    const std::string acc = r.trial_accuracy ? fmt::format("{:.4f}", *r.trial_accuracy)
                                             : "error: " + r.error;
    out += fmt::format("| {} | {:g} | {:g} | {:g} | {} |\n", r.config.epochs, r.config.learning_rate,
                       r.config.warmup_ratio, r.config.weight_decay, acc);
  }
  return out;
}

}  // namespace shroom
