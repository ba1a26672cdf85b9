#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "shroom/engine.hpp"

namespace shroom {

enum class Backend;

enum class EngineKind { kStub, kNative, kRemote };

std::string_view to_string(EngineKind kind);
EngineKind parse_engine_kind(std::string_view text);

inline constexpr std::string_view kManifestFile = "manifest.json";
inline constexpr std::string_view kMetricsFile = "metrics.jsonl";

// Contents of runs/<run-id>/manifest.json.
struct CheckpointManifest {
  std::string run_id;
  std::string backend;  // "consistency" | "nli"
  EngineKind engine = EngineKind::kNative;
  std::string base_checkpoint;
  // Identifier returned by the inference service, for remote runs.
  std::string remote_checkpoint;
  nlohmann::json config;
  std::uint64_t seed = 0;
  std::string train_fingerprint;
  std::size_t train_size = 0;
  std::size_t optimizer_steps = 0;
  bool dry_run = false;
  std::optional<double> trial_accuracy;
  std::string timestamp;
};

nlohmann::json to_json(const CheckpointManifest& manifest);
CheckpointManifest manifest_from_json(const nlohmann::json& j);
CheckpointManifest read_manifest(const std::filesystem::path& run_dir);
void write_manifest(const std::filesystem::path& run_dir, const CheckpointManifest& manifest);

// What a checkpoint reference points at.
struct ResolvedCheckpoint {
  EngineKind kind = EngineKind::kRemote;
  // Stub table key, "builtin:<name>", or the registry identifier.
  std::string id;
  // Run directory for checkpoints produced by the trainer.
  std::filesystem::path directory;
  std::optional<CheckpointManifest> manifest;
};

// Resolution order: "@name" through the checkpoint index, then an existing
// local directory (a run directory with a manifest), then "stub:<key>" and
// "builtin:<name>", and finally a registry identifier served remotely.
ResolvedCheckpoint resolve_checkpoint(const std::string& ref, const EngineContext& context);

std::unique_ptr<Engine> make_engine(Backend backend, const ResolvedCheckpoint& checkpoint,
                                    int max_sequence_length, const EngineContext& context);

// Reads / updates the "@name" index, a JSON object name -> checkpoint ref.
nlohmann::json read_checkpoint_index(const std::filesystem::path& index_path);
void record_checkpoint(const std::filesystem::path& index_path, const std::string& name,
                       const std::string& ref);

}  // namespace shroom
