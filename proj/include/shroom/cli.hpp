#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "shroom/finetune.hpp"
#include "shroom/scorers.hpp"
#include "shroom/types.hpp"

namespace shroom {

// Scorer roles known to the pipeline. The three ensemble voters are
// "pretrained", "finetuned" (label from "finetuned-binary", p from
// "finetuned-float") and "nli"; "judge" is the prompted baseline.
inline constexpr const char* kScorerRoles[] = {"pretrained", "finetuned-binary",
                                               "finetuned-float", "nli", "judge"};

struct RunConfig {
  std::filesystem::path config_path;
  Track track = Track::kModelAware;
  std::map<std::string, std::filesystem::path> data_paths;
  std::map<std::string, ScorerConfig> scorers;  // by role
  HalTrainingConfig hal_training;
  NLITrainingConfig nli_training;
  std::string hal_base_checkpoint{kDefaultConsistencyCheckpoint};
  std::string nli_base_checkpoint{kDefaultNliCheckpoint};
  std::filesystem::path output_dir = "shroom-out";
  std::uint64_t seed = 42;
  std::string endpoint;
  std::filesystem::path stub_table;
  std::string train_split = "validation";
  std::string eval_split = "trial";
  std::string predict_split = "test";

  // Throws ConfigError when a data file is missing or output_dir cannot be
  // created.
  void validate() const;

  std::filesystem::path split_path(const std::string& split) const;
  std::filesystem::path checkpoint_index() const { return output_dir / "checkpoints.json"; }
  std::filesystem::path runs_dir() const { return output_dir / "runs"; }
};

// Relative paths inside the document resolve against `base_dir`.
RunConfig run_config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

// Entry point of the shroomkit binary; returns the process exit code:
// 0 success, 2 input error, 3 alignment error, 4 backend/checkpoint error.
int run_cli(int argc, char** argv);

}  // namespace shroom
