#include "shroom/cli.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <iostream>
#include <set>

#include "shroom/checkpoint.hpp"
#include "shroom/dataset.hpp"
#include "shroom/ensemble.hpp"
#include "shroom/errors.hpp"
#include "shroom/evaluation.hpp"
#include "shroom/plot.hpp"
#include "shroom/util.hpp"

namespace shroom {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr int kExitInput = 2;
constexpr int kExitAlignment = 3;
constexpr int kExitBackend = 4;

template <typename T>
T field(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("config key '{}': {}", key, e.what()));
  }
}

fs::path resolve_path(const fs::path& base_dir, const fs::path& p) {
  return p.is_absolute() ? p : (base_dir / p).lexically_normal();
}

ScorerConfig default_scorer(const std::string& role) {
  if (role == "pretrained") return ScorerConfig::defaults(Backend::kConsistency);
  if (role == "finetuned-binary" || role == "finetuned-float") {
    ScorerConfig cfg = ScorerConfig::defaults(Backend::kConsistency);
    cfg.checkpoint_ref = role == "finetuned-binary" ? "@hal-binary" : "@hal-float";
    return cfg;
  }
  if (role == "nli") {
    ScorerConfig cfg = ScorerConfig::defaults(Backend::kNli);
    cfg.checkpoint_ref = "@nli";
    return cfg;
  }
  if (role == "judge") return ScorerConfig::defaults(Backend::kPromptJudge);
  throw ConfigError("unknown scorer role '" + role + "'");
}

ScorerConfig scorer_from_json(const json& entry, std::uint64_t run_seed, const fs::path& base_dir) {
  const std::string role = field<std::string>(entry, "role", "");
  if (role.empty()) throw ConfigError("scorer entry without a role");
  ScorerConfig cfg = default_scorer(role);
  if (entry.contains("backend")) {
    const Backend backend = parse_backend(field<std::string>(entry, "backend", ""));
    if (backend != cfg.backend) {
      // A different backend brings its own threshold and checkpoint defaults.
      const std::string ref = cfg.checkpoint_ref;
      cfg = ScorerConfig::defaults(backend);
      if (ref.starts_with('@')) cfg.checkpoint_ref = ref;
    }
  }
  std::string ref = field<std::string>(entry, "checkpoint", cfg.checkpoint_ref);
  // Local run directories are written relative to the config file.
  if (ref.starts_with("./") || ref.starts_with("../")) ref = resolve_path(base_dir, ref).string();
  cfg.checkpoint_ref = ref;
  cfg.threshold = field(entry, "threshold", cfg.threshold);
  cfg.max_sequence_length = field(entry, "max_sequence_length", cfg.max_sequence_length);
  cfg.seed = field(entry, "seed", run_seed);
  cfg.validate();
  return cfg;
}

std::shared_ptr<const StubTable> load_stub_table(const fs::path& path) {
  if (path.empty()) return std::make_shared<StubTable>();
  try {
    return std::make_shared<StubTable>(StubTable::load(path));
  } catch (const BackendError& e) {
    throw ConfigError(e.what());
  }
}

EngineContext make_context(const RunConfig& cfg) {
  EngineContext ctx;
  ctx.stub_table = load_stub_table(cfg.stub_table);
  ctx.endpoint = cfg.endpoint;
  ctx.checkpoint_index = cfg.checkpoint_index();
  return ctx;
}

std::vector<EvidencePair> evidence_pairs(std::span<const Sample> samples) {
  std::vector<EvidencePair> pairs;
  pairs.reserve(samples.size());
  for (const auto& s : samples) {
    try {
      pairs.push_back(select_evidence_pair(s));
    } catch (const UnscorableSampleError& e) {
      throw UnscorableSampleError("sample " + s.id + ": " + e.what());
    }
  }
  return pairs;
}

json read_config_document(const fs::path& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  if (!doc.is_object()) throw ConfigError(path.string() + ": expected a JSON object");
  return doc;
}

RunConfig finish_config(const json& doc, const fs::path& path) {
  RunConfig cfg = run_config_from_json(doc, fs::absolute(path).parent_path());
  cfg.config_path = path;
  cfg.validate();
  return cfg;
}

// Shared options; every subcommand accepts them.
struct CommonOptions {
  std::string config;
  std::string output_dir;
  std::optional<std::uint64_t> seed;
  std::string endpoint;
  std::string stub_table;
  std::string track;
  bool verbose = false;
  bool quiet = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("-c,--config", config, "Run configuration (JSON)")->required();
    cmd->add_option("--output-dir", output_dir, "Overrides output_dir");
    cmd->add_option("--seed", seed, "Overrides seed");
    cmd->add_option("--endpoint", endpoint, "Inference service URL for registry checkpoints");
    cmd->add_option("--stub-table", stub_table, "Lookup table for stub: checkpoints");
    cmd->add_option("--track", track, "model-aware or model-agnostic");
    cmd->add_flag("-v,--verbose", verbose, "Debug logging");
    cmd->add_flag("-q,--quiet", quiet, "Warnings and errors only");
  }

  RunConfig load() const {
    const fs::path path = config;
    json doc = read_config_document(path);
    // Flag values are relative to the working directory, not the config file.
    if (!output_dir.empty()) doc["output_dir"] = fs::absolute(output_dir).string();
    if (!stub_table.empty()) doc["stub_table"] = fs::absolute(stub_table).string();
    if (seed) doc["seed"] = *seed;
    if (!endpoint.empty()) doc["endpoint"] = endpoint;
    if (!track.empty()) doc["track"] = track;
    return finish_config(doc, path);
  }
};

void configure_logging(const CommonOptions& opts) {
  auto logger = spdlog::get("shroomkit");
  if (!logger) logger = spdlog::stderr_color_mt("shroomkit");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(opts.verbose ? spdlog::level::debug
                    : opts.quiet ? spdlog::level::warn
                                 : spdlog::level::info);
}

// ---------------------------------------------------------------- eda

BarChart count_chart(std::string title, std::string x_label, std::vector<std::string> categories,
                     std::vector<BarChart::Series> series) {
  return {std::move(title), std::move(x_label), "samples", std::move(categories),
          std::move(series)};
}

std::vector<fs::path> eda_charts(const DatasetStats& stats, bool annotated, const fs::path& stem,
                                 const std::string& caption) {
  std::vector<fs::path> written;
  auto emit = [&](const BarChart& chart, const std::string& kind) {
    const auto files = write_chart(chart, stem.string() + "_" + kind);
    written.insert(written.end(), files.begin(), files.end());
  };

  BarChart tasks = count_chart("Samples per task, " + caption, "task", {}, {{"samples", {}}});
  for (Task t : {Task::kDM, Task::kMT, Task::kPG}) {
    tasks.categories.emplace_back(to_string(t));
    const auto it = stats.per_task_counts.find(t);
    tasks.series[0].values.push_back(it == stats.per_task_counts.end() ? 0.0 : it->second);
  }
  emit(tasks, "task_distribution");
  if (!annotated) return written;

  BarChart labels = count_chart("Gold labels, " + caption, "label", {}, {{"samples", {}}});
  for (Label l : {Label::kHallucination, Label::kNotHallucination}) {
    labels.categories.emplace_back(to_string(l));
    const auto it = stats.per_label_counts.find(l);
    labels.series[0].values.push_back(it == stats.per_label_counts.end() ? 0.0 : it->second);
  }
  emit(labels, "label_distribution");

  BarChart p = count_chart("p(Hallucination), " + caption, "p(Hallucination)", {},
                           {{"samples", {}}});
  BarChart by_label = count_chart("p(Hallucination) by gold label, " + caption,
                                  "p(Hallucination)", {},
                                  {{std::string(to_string(Label::kHallucination)), {}},
                                   {std::string(to_string(Label::kNotHallucination)), {}}});
  for (const auto& [fraction, count] : stats.p_hallucination_histogram) {
    p.categories.push_back(format_fraction(fraction));
    p.series[0].values.push_back(static_cast<double>(count));
    by_label.categories.push_back(format_fraction(fraction));
    for (std::size_t k = 0; k < 2; ++k) {
      const Label l = k == 0 ? Label::kHallucination : Label::kNotHallucination;
      const auto it = stats.p_per_label_breakdown.find({l, fraction});
      by_label.series[k].values.push_back(it == stats.p_per_label_breakdown.end() ? 0.0
                                                                                  : it->second);
    }
  }
  emit(p, "p_hallucination");
  emit(by_label, "p_by_label");
  return written;
}

void cmd_eda(const RunConfig& cfg, std::vector<std::string> splits, fs::path out_dir) {
  if (splits.empty()) {
    for (const auto& [name, path] : cfg.data_paths) splits.push_back(name);
  }
  if (splits.empty()) throw ConfigError("no data splits configured");
  if (out_dir.empty()) out_dir = cfg.output_dir / "eda";
  const std::string track = track_slug(cfg.track);
  for (const auto& split : splits) {
    const fs::path path = cfg.split_path(split);
    const std::string text = read_file(path);
    const bool annotated = has_annotations(text);
    DatasetStats stats;
    if (annotated) {
      stats = compute_stats(load_annotated(path));
    } else {
      stats = compute_stats(load_samples(path));
    }
    const fs::path stem = out_dir / (split + "_" + track);
    write_file(stem.string() + "_stats.json", to_json(stats).dump(2) + "\n");
    eda_charts(stats, annotated, stem, fmt::format("{} ({})", split, to_string(cfg.track)));
    std::cout << fmt::format("{}: {} samples -> {}_stats.json\n", split, stats.size,
                             stem.string());
  }
}

// ---------------------------------------------------------------- finetune

void cmd_finetune(const RunConfig& cfg, const std::string& which, bool dry_run) {
  const std::string what = to_lower_ascii(which);
  const bool all = what == "all";
  if (!all && what != "binary" && what != "float" && what != "nli") {
    throw ConfigError("--which must be binary, float, nli or all");
  }
  const auto train = load_annotated(cfg.split_path(cfg.train_split));
  std::vector<AnnotatedSample> eval;
  if (cfg.data_paths.contains(cfg.eval_split)) eval = load_annotated(cfg.split_path(cfg.eval_split));

  TrainingOptions options;
  options.runs_dir = cfg.runs_dir();
  options.seed = cfg.seed;
  options.dry_run = dry_run;
  options.context = make_context(cfg);

  auto report = [&](const std::string& name, const TrainResult& r) {
    record_checkpoint(cfg.checkpoint_index(), name, fs::absolute(r.checkpoint_dir).string());
    std::cout << fmt::format("{}\t{}\t{}\t{}\n", name, r.run_id, r.checkpoint_dir.string(),
                             r.trial_accuracy ? fmt::format("{:.4f}", *r.trial_accuracy) : "-");
  };

  for (LabelMode mode : {LabelMode::kBinary, LabelMode::kFloat}) {
    if (!all && what != to_string(mode)) continue;
    HalTrainingConfig hal = cfg.hal_training;
    hal.label_mode = mode;
    const std::string name = mode == LabelMode::kBinary ? "hal-binary" : "hal-float";
    options.base_checkpoint = dry_run ? "stub:finetuned-" + std::string(to_string(mode))
                                      : cfg.hal_base_checkpoint;
    const PairSet pairs = build_hal_pairs(train, mode);
    report(name, train_consistency(pairs.pairs, hal, eval, options));
  }
  if (all || what == "nli") {
    options.base_checkpoint = dry_run ? "stub:nli" : cfg.nli_base_checkpoint;
    const PairSet pairs = build_nli_pairs(train);
    report("nli", train_nli(pairs.pairs, cfg.nli_training, eval, options));
  }
}

// ---------------------------------------------------------------- predict

std::map<std::string, ScorerConfig> effective_scorers(const RunConfig& cfg, bool dry_run) {
  auto scorers = cfg.scorers;
  if (dry_run) {
    for (auto& [role, sc] : scorers) sc.checkpoint_ref = "stub:" + role;
  }
  return scorers;
}

const std::set<std::string> kMethods = {"pretrained", "finetuned-hal", "nli", "baseline",
                                        "ensemble"};

void cmd_predict(const RunConfig& cfg, const std::string& method_arg, const std::string& variant_arg,
                 std::string split, fs::path out, bool dry_run, bool sequential) {
  const std::string method = to_lower_ascii(method_arg);
  if (!kMethods.contains(method)) {
    throw ConfigError("unknown method '" + method_arg +
                      "' (pretrained, finetuned-hal, nli, baseline, ensemble)");
  }
  const PVariant variant = parse_p_variant(variant_arg);
  if (split.empty()) split = cfg.predict_split;
  if (out.empty()) {
    std::string name = split + "_" + method;
    if (method == "ensemble") name += "_" + std::string(to_string(variant));
    out = cfg.output_dir / "predictions" / (name + ".json");
  }

  const auto samples = load_samples(cfg.split_path(split));
  const auto pairs = evidence_pairs(samples);
  std::vector<PredictionRecord> records;
  records.reserve(samples.size());

  if (!samples.empty()) {
    const EngineContext ctx = make_context(cfg);
    const auto scorers = effective_scorers(cfg, dry_run);
    auto scorer = [&](const std::string& role) {
      return std::make_unique<Scorer>(scorers.at(role), ctx);
    };
    auto single = [&](std::vector<ScorerOutput> outputs) {
      for (std::size_t i = 0; i < outputs.size(); ++i) {
        records.push_back({samples[i].id, outputs[i].label, outputs[i].p_hallucination});
      }
    };

    if (method == "pretrained") {
      single(scorer("pretrained")->score_batch(pairs));
    } else if (method == "nli") {
      single(scorer("nli")->score_batch(pairs));
    } else if (method == "baseline") {
      single(scorer("judge")->score_batch(pairs));
    } else if (method == "finetuned-hal") {
      Voter voter("finetuned-consistency", scorer("finetuned-binary"), scorer("finetuned-float"));
      std::vector<ScorerOutput> outputs;
      for (auto& v : voter.predict_batch(pairs)) outputs.push_back(std::move(v.output));
      single(std::move(outputs));
    } else {
      std::vector<Voter> voters;
      voters.emplace_back("pretrained-consistency", scorer("pretrained"));
      voters.emplace_back("finetuned-consistency", scorer("finetuned-binary"),
                          scorer("finetuned-float"));
      voters.emplace_back("finetuned-nli", scorer("nli"));
      const auto predictions = predict_ensemble_batch(pairs, voters, !sequential);
      std::vector<std::string> ids;
      for (std::size_t i = 0; i < samples.size(); ++i) {
        records.push_back(to_record(samples[i].id, predictions[i], variant));
        ids.push_back(samples[i].id);
      }
      fs::path sidecar = out;
      sidecar.replace_extension(".voters.json");
      write_file(sidecar, voter_details_json(ids, predictions).dump(2) + "\n");
    }
  }

  write_file(out, serialize_predictions(records));
  std::cout << fmt::format("{} predictions -> {}\n", records.size(), out.string());
}

// ---------------------------------------------------------------- evaluate

void cmd_evaluate(const RunConfig& cfg, const std::vector<std::string>& prediction_args,
                  fs::path gold_path, std::string split, bool per_task, const std::string& bins,
                  fs::path out_dir) {
  if (prediction_args.empty()) throw ConfigError("at least one --predictions file is required");
  if (gold_path.empty()) {
    if (split.empty()) split = cfg.predict_split;
    gold_path = cfg.split_path(split);
  } else if (split.empty()) {
    split = gold_path.stem().string();
  }
  if (out_dir.empty()) out_dir = cfg.output_dir / "reports" / split;

  const auto gold = load_annotated(gold_path);
  const Histogram histogram = make_bins(parse_bin_mode(bins));
  EvaluationReport report;
  report.split = split;
  report.track = std::string(to_string(cfg.track));
  std::set<std::string> seen;
  for (const auto& arg : prediction_args) {
    const auto eq = arg.find('=');
    const std::string name = eq == std::string::npos ? fs::path(arg).stem().string()
                                                     : arg.substr(0, eq);
    const fs::path path = eq == std::string::npos ? fs::path(arg) : fs::path(arg.substr(eq + 1));
    if (!seen.insert(name).second) throw ConfigError("duplicate method name '" + name + "'");
    report.methods.push_back(evaluate_method(name, load_predictions(path), gold, histogram));
  }
  for (auto format : {ReportFormat::kJson, ReportFormat::kMarkdown, ReportFormat::kPlots}) {
    render_report(report, format, out_dir, per_task);
  }
  std::cout << render_markdown(report, per_task);
  std::cout << fmt::format("report -> {}\n", (out_dir / "report.json").string());
}

// ---------------------------------------------------------------- sweep

std::vector<NLITrainingConfig> load_grid(const fs::path& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  std::vector<NLITrainingConfig> grid;
  if (doc.is_array()) {
    for (const auto& row : doc) grid.push_back(nli_config_from_json(row));
    return grid;
  }
  if (!doc.is_object()) throw ConfigError(path.string() + ": expected an array or an object");
  // Object of value lists: the cartesian product, last key varying fastest.
  std::vector<json> rows = {json::object()};
  for (const auto& [key, values] : doc.items()) {
    const json list = values.is_array() ? values : json::array({values});
    if (list.empty()) throw ConfigError("grid key '" + key + "' has no values");
    std::vector<json> next;
    for (const auto& row : rows) {
      for (const auto& v : list) {
        json r = row;
        r[key] = v;
        next.push_back(std::move(r));
      }
    }
    rows = std::move(next);
  }
  for (const auto& row : rows) grid.push_back(nli_config_from_json(row));
  return grid;
}

void cmd_sweep(const RunConfig& cfg, const fs::path& grid_path, bool dry_run, fs::path out_dir) {
  const auto grid = load_grid(grid_path);
  const auto train = load_annotated(cfg.split_path(cfg.train_split));
  const auto trial = load_annotated(cfg.split_path(cfg.eval_split));
  if (out_dir.empty()) out_dir = cfg.output_dir / "sweep";

  TrainingOptions options;
  options.runs_dir = cfg.runs_dir();
  options.seed = cfg.seed;
  options.dry_run = dry_run;
  options.context = make_context(cfg);
  options.base_checkpoint = dry_run ? "stub:nli" : cfg.nli_base_checkpoint;

  const PairSet pairs = build_nli_pairs(train);
  const SweepTable table = sweep_nli(grid, pairs.pairs, trial, options);
  write_file(out_dir / "sweep.json", to_json(table).dump(2) + "\n");
  const std::string md = render_markdown(table);
  write_file(out_dir / "sweep.md", md);
  std::cout << md;
  if (!table.best()) throw BackendError("no sweep configuration completed");
}

}  // namespace

void RunConfig::validate() const {
  for (const auto& [split, path] : data_paths) {
    if (!fs::is_regular_file(path)) {
      throw ConfigError(fmt::format("data split '{}': no such file {}", split, path.string()));
    }
  }
  std::error_code ec;
  fs::create_directories(output_dir, ec);
  if (ec || !fs::is_directory(output_dir)) {
    throw ConfigError("cannot create output_dir " + output_dir.string() + ": " + ec.message());
  }
  if (!stub_table.empty() && !fs::is_regular_file(stub_table)) {
    throw ConfigError("stub_table: no such file " + stub_table.string());
  }
  for (const auto& [role, sc] : scorers) sc.validate();
  hal_training.validate();
  nli_training.validate();
}

fs::path RunConfig::split_path(const std::string& split) const {
  const auto it = data_paths.find(split);
  if (it == data_paths.end()) throw ConfigError("no data path configured for split '" + split + "'");
  return it->second;
}

RunConfig run_config_from_json(const json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) throw ConfigError("run config must be a JSON object");
  RunConfig cfg;
  cfg.track = parse_track(field<std::string>(doc, "track", "model-aware"));
  cfg.seed = field(doc, "seed", cfg.seed);
  cfg.output_dir = resolve_path(base_dir, field<std::string>(doc, "output_dir", "shroom-out"));
  cfg.endpoint = field<std::string>(doc, "endpoint", "");
  const std::string stubs = field<std::string>(doc, "stub_table", "");
  if (!stubs.empty()) cfg.stub_table = resolve_path(base_dir, stubs);

  const json data = field(doc, "data", json::object());
  if (!data.is_object()) throw ConfigError("'data' must map split names to files");
  for (const auto& [split, path] : data.items()) {
    if (!path.is_string()) throw ConfigError("data path for '" + split + "' must be a string");
    cfg.data_paths[split] = resolve_path(base_dir, path.get<std::string>());
  }

  const json splits = field(doc, "splits", json::object());
  cfg.train_split = field(splits, "train", cfg.train_split);
  cfg.eval_split = field(splits, "eval", cfg.eval_split);
  cfg.predict_split = field(splits, "predict", cfg.predict_split);

  for (const char* role : kScorerRoles) {
    cfg.scorers[role] = default_scorer(role);
    cfg.scorers[role].seed = cfg.seed;
  }
  const json scorers = field(doc, "scorers", json::array());
  if (!scorers.is_array()) throw ConfigError("'scorers' must be a list");
  std::set<std::string> roles;
  for (const auto& entry : scorers) {
    if (!entry.is_object()) throw ConfigError("scorer entries must be objects");
    const std::string role = field<std::string>(entry, "role", "");
    if (!roles.insert(role).second) throw ConfigError("scorer role '" + role + "' given twice");
    cfg.scorers[role] = scorer_from_json(entry, cfg.seed, base_dir);
  }

  const json training = field(doc, "training", json::object());
  const json hal = field(training, "hal", json::object());
  const json nli = field(training, "nli", json::object());
  cfg.hal_training = hal_config_from_json(hal);
  cfg.nli_training = nli_config_from_json(nli);
  cfg.hal_base_checkpoint = field(hal, "base_checkpoint", cfg.hal_base_checkpoint);
  cfg.nli_base_checkpoint = field(nli, "base_checkpoint", cfg.nli_base_checkpoint);
  return cfg;
}

RunConfig load_run_config(const fs::path& path) {
  return finish_config(read_config_document(path), path);
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Hallucination detection pipeline: EDA, fine-tuning, prediction, evaluation"};
  app.name("shroomkit");
  app.require_subcommand(1, 1);

  CommonOptions common;

  auto* eda = app.add_subcommand("eda", "Dataset statistics and distribution plots");
  std::vector<std::string> eda_splits;
  std::string eda_out;
  eda->add_option("--split", eda_splits, "Split to analyse (repeatable; default: all)");
  eda->add_option("--out-dir", eda_out, "Default: <output_dir>/eda");

  auto* finetune = app.add_subcommand("finetune", "Fine-tune the consistency and NLI scorers");
  std::string which = "all";
  bool dry_run = false;
  finetune->add_option("--which", which, "binary, float, nli or all")
      ->check(CLI::IsMember({"binary", "float", "nli", "all"}, CLI::ignore_case));

  auto* predict = app.add_subcommand("predict", "Write a prediction file for one method");
  std::string method = "ensemble";
  std::string p_variant = "averaged";
  std::string predict_split;
  std::string predict_out;
  bool sequential = false;
  predict->add_option("--method", method, "pretrained, finetuned-hal, nli, baseline, ensemble");
  predict->add_option("--p-variant", p_variant, "vote-fraction or averaged (ensemble only)");
  predict->add_option("--split", predict_split, "Default: the configured predict split");
  predict->add_option("--out", predict_out, "Default: <output_dir>/predictions/...");
  predict->add_flag("--sequential", sequential, "Score voters one after another");

  auto* evaluate = app.add_subcommand("evaluate", "Score prediction files against gold labels");
  std::vector<std::string> predictions;
  std::string gold;
  std::string eval_split;
  bool per_task = false;
  std::string bins = "annotator";
  std::string report_dir;
  evaluate->add_option("--predictions", predictions, "name=path (repeatable)")->required();
  evaluate->add_option("--gold", gold, "Annotated gold file");
  evaluate->add_option("--split", eval_split, "Configured split to use as gold");
  evaluate->add_flag("--per-task", per_task, "Per-task and per-model breakdown");
  evaluate->add_option("--bins", bins, "annotator or uniform10");
  evaluate->add_option("--out-dir", report_dir, "Default: <output_dir>/reports/<split>");

  auto* sweep = app.add_subcommand("sweep", "NLI hyper-parameter sweep scored on the trial split");
  std::string grid;
  std::string sweep_out;
  sweep->add_option("--grid", grid, "JSON list of configs, or an object of value lists")
      ->required();
  sweep->add_option("--out-dir", sweep_out, "Default: <output_dir>/sweep");

  for (auto* cmd : {eda, finetune, predict, evaluate, sweep}) common.attach(cmd);
  for (auto* cmd : {finetune, predict, sweep}) {
    cmd->add_flag("--dry-run", dry_run, "Stub scorers and zero training steps");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitInput;
  }

  try {
    configure_logging(common);
    const RunConfig cfg = common.load();
    if (*eda) {
      cmd_eda(cfg, eda_splits, eda_out);
    } else if (*finetune) {
      cmd_finetune(cfg, which, dry_run);
    } else if (*predict) {
      cmd_predict(cfg, method, p_variant, predict_split, predict_out, dry_run, sequential);
    } else if (*evaluate) {
      cmd_evaluate(cfg, predictions, gold, eval_split, per_task, bins, report_dir);
    } else {
      cmd_sweep(cfg, grid, dry_run, sweep_out);
    }
    return 0;
  } catch (const AlignmentError& e) {
    spdlog::error("{}", e.what());
    return kExitAlignment;
  } catch (const BackendError& e) {
    if (e.index()) {
      spdlog::error("item {}: {}", *e.index(), e.what());
    } else {
      spdlog::error("{}", e.what());
    }
    return kExitBackend;
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return kExitInput;
  } catch (const std::exception& e) {
    spdlog::error("internal error: {}", e.what());
    return 1;
  }
}

}  // namespace shroom
