#include "shroom/checkpoint.hpp"

#include <fmt/format.h>

#include "shroom/errors.hpp"
#include "shroom/pair_model.hpp"
#include "shroom/remote.hpp"
#include "shroom/scorers.hpp"
#include "shroom/util.hpp"

namespace shroom {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr std::string_view kStubPrefix = "stub:";
constexpr std::string_view kBuiltinPrefix = "builtin:";
constexpr int kMaxIndexHops = 8;

json load_json(const fs::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw BackendError(path.string() + ": " + e.what());
  } catch (const InputError& e) {
    throw BackendError(e.what());
  }
}

ResolvedCheckpoint resolve_run_directory(const fs::path& dir, const EngineContext& context) {
  if (!fs::exists(dir / kManifestFile)) {
    throw BackendError("checkpoint directory '" + dir.string() + "' has no " +
                       std::string(kManifestFile));
  }
  CheckpointManifest manifest = read_manifest(dir);
  ResolvedCheckpoint out;
  out.kind = manifest.engine;
  out.directory = dir;
  switch (manifest.engine) {
    case EngineKind::kNative:
      out.id = dir.string();
      break;
    case EngineKind::kRemote:
      out.id = manifest.remote_checkpoint.empty() ? manifest.base_checkpoint
                                                  : manifest.remote_checkpoint;
      break;
    case EngineKind::kStub: {
      // Stub runs are never trained, so they score exactly like their base.
      const ResolvedCheckpoint base = resolve_checkpoint(manifest.base_checkpoint, context);
      if (base.kind != EngineKind::kStub) {
        throw BackendError("stub run '" + dir.string() + "' has a non-stub base");
      }
      out.id = base.id;
      break;
    }
  }
  out.manifest = std::move(manifest);
  return out;
}

}  // namespace

std::string_view to_string(EngineKind kind) {
  switch (kind) {
    case EngineKind::kStub: return "stub";
    case EngineKind::kNative: return "native";
    case EngineKind::kRemote: return "remote";
  }
  return "?";
}

EngineKind parse_engine_kind(std::string_view text) {
  if (text == "stub") return EngineKind::kStub;
  if (text == "native") return EngineKind::kNative;
  if (text == "remote") return EngineKind::kRemote;
  throw BackendError("unknown engine kind '" + std::string(text) + "'");
}

nlohmann::json to_json(const CheckpointManifest& m) {
  return json{{"run_id", m.run_id},
              {"backend", m.backend},
              {"engine", to_string(m.engine)},
              {"base_checkpoint", m.base_checkpoint},
              {"remote_checkpoint", m.remote_checkpoint},
              {"config", m.config},
              {"seed", m.seed},
              {"train_fingerprint", m.train_fingerprint},
              {"train_size", m.train_size},
              {"optimizer_steps", m.optimizer_steps},
              {"dry_run", m.dry_run},
              {"trial_accuracy", m.trial_accuracy ? json(*m.trial_accuracy) : json(nullptr)},
              {"timestamp", m.timestamp}};
}

CheckpointManifest manifest_from_json(const nlohmann::json& j) {
  try {
    CheckpointManifest m;
    m.run_id = j.value("run_id", "");
    m.backend = j.at("backend").get<std::string>();
    m.engine = parse_engine_kind(j.at("engine").get<std::string>());
    m.base_checkpoint = j.value("base_checkpoint", "");
    m.remote_checkpoint = j.value("remote_checkpoint", "");
    m.config = j.value("config", json::object());
    m.seed = j.value("seed", std::uint64_t{0});
    m.train_fingerprint = j.value("train_fingerprint", "");
    m.train_size = j.value("train_size", std::size_t{0});
    m.optimizer_steps = j.value("optimizer_steps", std::size_t{0});
    m.dry_run = j.value("dry_run", false);
    if (j.contains("trial_accuracy") && j["trial_accuracy"].is_number()) {
      m.trial_accuracy = j["trial_accuracy"].get<double>();
    }
    m.timestamp = j.value("timestamp", "");
    return m;
  } catch (const json::exception& e) {
    throw BackendError(std::string("malformed manifest: ") + e.what());
  }
}

CheckpointManifest read_manifest(const fs::path& run_dir) {
  return manifest_from_json(load_json(run_dir / kManifestFile));
}

void write_manifest(const fs::path& run_dir, const CheckpointManifest& manifest) {
  try {
    write_file(run_dir / kManifestFile, to_json(manifest).dump(2) + "\n");
  } catch (const Error& e) {
    throw BackendError(std::string("checkpoint persistence failed: ") + e.what());
  }
}

ResolvedCheckpoint resolve_checkpoint(const std::string& ref, const EngineContext& context) {
  std::string current = ref;
  for (int hop = 0; hop < kMaxIndexHops && current.starts_with('@'); ++hop) {
    const json index = read_checkpoint_index(context.checkpoint_index);
    const std::string name = current.substr(1);
    if (!index.contains(name)) {
      throw BackendError("checkpoint '" + current + "' is not in the index '" +
                         context.checkpoint_index.string() + "'; run finetune first");
    }
    current = index[name].get<std::string>();
  }
  if (current.empty()) throw BackendError("empty checkpoint reference");
  if (current.starts_with('@')) throw BackendError("checkpoint index loop at '" + ref + "'");

  std::error_code ec;
  if (fs::is_directory(current, ec)) return resolve_run_directory(current, context);

  ResolvedCheckpoint out;
  out.id = current;
  if (current.starts_with(kStubPrefix)) {
    out.kind = EngineKind::kStub;
    out.id = current.substr(kStubPrefix.size());
  } else if (current.starts_with(kBuiltinPrefix)) {
    out.kind = EngineKind::kNative;
  } else {
    out.kind = EngineKind::kRemote;
  }
  return out;
}

std::unique_ptr<Engine> make_engine(Backend backend, const ResolvedCheckpoint& checkpoint,
                                    int max_sequence_length, const EngineContext& context) {
  switch (checkpoint.kind) {
    case EngineKind::kStub:
      return std::make_unique<StubEngine>(checkpoint.id, context.stub_table);
    case EngineKind::kRemote:
      return std::make_unique<RemoteEngine>(context.endpoint, checkpoint.id,
                                            max_sequence_length, context.timeout_seconds);
    case EngineKind::kNative:
      break;
  }

  if (backend == Backend::kPromptJudge) {
    throw BackendError("no native engine exists for the prompt judge");
  }
  json weights;
  if (checkpoint.directory.empty()) {
    if (checkpoint.id == "builtin:consistency") {
      weights = to_json(builtin_consistency_head());
    } else if (checkpoint.id == "builtin:nli") {
      weights = to_json(builtin_nli_head());
    } else {
      throw BackendError("unknown builtin checkpoint '" + checkpoint.id + "'");
    }
  } else {
    weights = load_json(checkpoint.directory / kWeightsFile);
  }
  if (backend == Backend::kConsistency) {
    return std::make_unique<NativeConsistencyEngine>(consistency_head_from_json(weights));
  }
  return std::make_unique<NativeNliEngine>(nli_head_from_json(weights));
}

nlohmann::json read_checkpoint_index(const fs::path& index_path) {
  if (index_path.empty() || !fs::exists(index_path)) return json::object();
  json index = load_json(index_path);
  if (!index.is_object()) throw BackendError(index_path.string() + " is not a JSON object");
  return index;
}

void record_checkpoint(const fs::path& index_path, const std::string& name,
                       const std::string& ref) {
  json index = read_checkpoint_index(index_path);
  index[name] = ref;
  try {
    write_file(index_path, index.dump(2) + "\n");
  } catch (const Error& e) {
    throw BackendError(std::string("cannot update checkpoint index: ") + e.what());
  }
}

}  // namespace shroom
