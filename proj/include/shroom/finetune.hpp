#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "shroom/dataset.hpp"
#include "shroom/engine.hpp"

namespace shroom {

enum class LabelMode { kBinary, kFloat };
enum class RegressionLoss { kMse, kBce };

std::string_view to_string(LabelMode mode);
LabelMode parse_label_mode(std::string_view text);

// Hallucination-detector fine-tuning. epochs, evaluation_steps and the warm-up
// share are the published values; learning rate, weight decay and batch size
// follow the usual cross-encoder defaults.
struct HalTrainingConfig {
  int epochs = 5;
  int evaluation_steps = 10000;
  double warmup_fraction = 0.10;
  LabelMode label_mode = LabelMode::kBinary;
  double learning_rate = 2e-5;
  double weight_decay = 0.01;
  int batch_size = 16;
  // Objective for float labels; binary labels always use cross-entropy.
  RegressionLoss float_loss = RegressionLoss::kMse;

  void validate() const;
  bool operator==(const HalTrainingConfig&) const = default;
};

struct NLITrainingConfig {
  int epochs = 5;
  double learning_rate = 2e-5;
  double warmup_ratio = 0.06;
  double weight_decay = 0.01;
  int batch_size = 16;

  void validate() const;
  bool operator==(const NLITrainingConfig&) const = default;
};

nlohmann::json to_json(const HalTrainingConfig& cfg);
nlohmann::json to_json(const NLITrainingConfig& cfg);
// Missing keys keep their defaults; wrong types raise ConfigError.
HalTrainingConfig hal_config_from_json(const nlohmann::json& j);
NLITrainingConfig nli_config_from_json(const nlohmann::json& j);

enum class BinaryTarget : int { kHallucination = 0, kNotHallucination = 1 };
enum class NliClass { kEntailment, kNeutral, kContradiction };

std::string_view to_string(NliClass cls);

struct TrainingPair {
  std::string premise;
  std::string hypothesis;
  std::variant<BinaryTarget, double, NliClass> target;

  bool operator==(const TrainingPair&) const = default;
};

struct PairSet {
  std::vector<TrainingPair> pairs;
  // Samples dropped because no premise could be selected.
  std::size_t skipped = 0;
};

// BINARY: 0 for Hallucination, 1 for Not Hallucination. FLOAT: 1 - gold p.
PairSet build_hal_pairs(std::span<const AnnotatedSample> samples, LabelMode mode);

// Hallucination -> contradiction, Not Hallucination -> entailment.
PairSet build_nli_pairs(std::span<const AnnotatedSample> samples);

// SHA-256 over the pairs' texts and targets.
std::string fingerprint(std::span<const TrainingPair> pairs);

struct TrainingOptions {
  std::filesystem::path runs_dir = "runs";
  std::string base_checkpoint;
  std::uint64_t seed = 42;
  // Zero optimizer steps: the result scores exactly like the base checkpoint.
  bool dry_run = false;
  EngineContext context;
};

struct TrainResult {
  std::string run_id;
  std::filesystem::path checkpoint_dir;
  std::optional<double> trial_accuracy;
  std::size_t optimizer_steps = 0;
};

// Warm-up length: ceil(share * total_steps).
std::size_t warmup_steps(std::size_t total_steps, double share);

// Linear warm-up to `peak`, then linear decay to zero at `total_steps`.
double scheduled_learning_rate(std::size_t step, std::size_t warmup, std::size_t total_steps,
                               double peak);

// Runs land in runs_dir/<run-id>/ with manifest.json and metrics.jsonl, plus
// weights.json for native runs. The run id hashes backend, config, seed, base
// checkpoint and data, so reruns overwrite the same directory. `eval_set`
// only feeds the periodic and final accuracy reports.
TrainResult train_consistency(std::span<const TrainingPair> pairs, const HalTrainingConfig& cfg,
                              std::span<const AnnotatedSample> eval_set,
                              const TrainingOptions& options);

TrainResult train_nli(std::span<const TrainingPair> pairs, const NLITrainingConfig& cfg,
                      std::span<const AnnotatedSample> eval_set, const TrainingOptions& options);

struct SweepRow {
  NLITrainingConfig config;
  std::optional<double> trial_accuracy;
  std::string error;
  std::filesystem::path checkpoint_dir;
};

struct SweepTable {
  // Sorted by trial accuracy, best first; failed rows last in grid order.
  std::vector<SweepRow> rows;

  const SweepRow* best() const;
};

SweepTable sweep_nli(std::span<const NLITrainingConfig> grid, std::span<const TrainingPair> train,
                     std::span<const AnnotatedSample> trial, const TrainingOptions& options);

nlohmann::json to_json(const SweepTable& table);
std::string render_markdown(const SweepTable& table);

}  // namespace shroom
