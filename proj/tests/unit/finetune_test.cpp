#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "shroom/checkpoint.hpp"
#include "shroom/errors.hpp"
#include "shroom/finetune.hpp"
#include "shroom/pair_model.hpp"
#include "shroom/scorers.hpp"
#include "shroom/util.hpp"

namespace shroom {
namespace {

using nlohmann::json;
using testing::synthetic_annotated;
using testing::TempDir;

constexpr Label H = Label::kHallucination;

TEST(Schedule, WarmupSteps) {
  EXPECT_EQ(warmup_steps(315, 0.10), 32u);
  EXPECT_EQ(warmup_steps(320, 0.10), 32u);
  EXPECT_EQ(warmup_steps(100, 0.06), 6u);
  EXPECT_EQ(warmup_steps(10, 0.0), 0u);
  EXPECT_EQ(warmup_steps(0, 0.1), 0u);
}

TEST(Schedule, LinearWarmupThenDecay) {
  const double peak = 2e-5;
  EXPECT_EQ(scheduled_learning_rate(0, 10, 100, peak), 0.0);
  EXPECT_DOUBLE_EQ(scheduled_learning_rate(5, 10, 100, peak), peak / 2);
  EXPECT_DOUBLE_EQ(scheduled_learning_rate(10, 10, 100, peak), peak);
  EXPECT_DOUBLE_EQ(scheduled_learning_rate(55, 10, 100, peak), peak / 2);
  EXPECT_EQ(scheduled_learning_rate(100, 10, 100, peak), 0.0);
  EXPECT_DOUBLE_EQ(scheduled_learning_rate(0, 0, 100, peak), peak);
  double previous = 0.0;
  for (std::size_t s = 0; s <= 10; ++s) {
    const double lr = scheduled_learning_rate(s, 10, 100, peak);
    EXPECT_GE(lr, previous);
    previous = lr;
  }
  for (std::size_t s = 11; s <= 100; ++s) {
    const double lr = scheduled_learning_rate(s, 10, 100, peak);
    EXPECT_LE(lr, previous);
    previous = lr;
  }
}

TEST(Config, PublishedDefaults) {
  const HalTrainingConfig hal;
  EXPECT_EQ(hal.epochs, 5);
  EXPECT_EQ(hal.evaluation_steps, 10000);
  EXPECT_EQ(hal.warmup_fraction, 0.10);
  const NLITrainingConfig nli;
  EXPECT_EQ(nli.learning_rate, 2e-5);
  EXPECT_EQ(nli.epochs, 5);
  EXPECT_EQ(nli.warmup_ratio, 0.06);
  EXPECT_EQ(nli.weight_decay, 0.01);
}

TEST(Config, Validation) {
  HalTrainingConfig hal;
  hal.epochs = 0;
  EXPECT_THROW(hal.validate(), ConfigError);
  hal = {};
  hal.warmup_fraction = 1.0;
  EXPECT_THROW(hal.validate(), ConfigError);
  NLITrainingConfig nli;
  nli.learning_rate = 0;
  EXPECT_THROW(nli.validate(), ConfigError);
  nli = {};
  nli.batch_size = 0;
  EXPECT_THROW(nli.validate(), ConfigError);
}

TEST(Config, JsonRoundTrip) {
  HalTrainingConfig hal;
  hal.label_mode = LabelMode::kFloat;
  hal.float_loss = RegressionLoss::kBce;
  hal.epochs = 3;
  EXPECT_EQ(hal_config_from_json(to_json(hal)), hal);
  NLITrainingConfig nli;
  nli.epochs = 10;
  nli.learning_rate = 2e-6;
  EXPECT_EQ(nli_config_from_json(to_json(nli)), nli);
  EXPECT_EQ(hal_config_from_json(json::object()), HalTrainingConfig{});
  EXPECT_THROW(hal_config_from_json(json{{"float_loss", "huber"}}), ConfigError);
  EXPECT_THROW(hal_config_from_json(json{{"epochs", "five"}}), ConfigError);
  EXPECT_THROW(parse_label_mode("soft"), ConfigError);
}

TEST(Pairs, HalTargets) {
  const auto samples = synthetic_annotated(50, 1);
  const PairSet binary = build_hal_pairs(samples, LabelMode::kBinary);
  const PairSet floats = build_hal_pairs(samples, LabelMode::kFloat);
  ASSERT_EQ(binary.pairs.size(), 50u);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    EXPECT_EQ(std::get<BinaryTarget>(binary.pairs[i].target),
              s.gold_label == H ? BinaryTarget::kHallucination : BinaryTarget::kNotHallucination);
    EXPECT_EQ(std::get<double>(floats.pairs[i].target), 1.0 - s.gold_p_hallucination);
    EXPECT_EQ(binary.pairs[i].premise, select_evidence_pair(s.sample).premise);
  }
}

TEST(Pairs, NliTargetsAndSkips) {
  auto samples = synthetic_annotated(20, 2);
  samples[4].sample.src.clear();
  samples[4].sample.tgt.clear();
  const PairSet set = build_nli_pairs(samples);
  EXPECT_EQ(set.skipped, 1u);
  EXPECT_EQ(set.pairs.size(), 19u);
  for (std::size_t i = 0, j = 0; i < samples.size(); ++i) {
    if (i == 4) continue;
    EXPECT_EQ(std::get<NliClass>(set.pairs[j++].target),
              samples[i].gold_label == H ? NliClass::kContradiction : NliClass::kEntailment);
  }
  EXPECT_EQ(build_hal_pairs(samples, LabelMode::kBinary).skipped, 1u);
}

TEST(Pairs, FingerprintTracksContent) {
  const auto samples = synthetic_annotated(20, 3);
  auto a = build_hal_pairs(samples, LabelMode::kBinary).pairs;
  const std::string fp = fingerprint(a);
  EXPECT_EQ(fingerprint(a), fp);
  a[0].hypothesis += "!";
  EXPECT_NE(fingerprint(a), fp);
}

// A native run directory whose head starts from zero weights.
std::filesystem::path zero_run(const std::filesystem::path& root, Backend backend) {
  const auto dir = root / (backend == Backend::kNli ? "zero-nli" : "zero-consistency");
  CheckpointManifest m;
  m.run_id = dir.filename().string();
  m.backend = std::string(to_string(backend));
  m.engine = EngineKind::kNative;
  write_manifest(dir, m);
  const json weights =
      backend == Backend::kNli ? to_json(NliHead{}) : to_json(ConsistencyHead{});
  write_file(dir / kWeightsFile, weights.dump());
  return dir;
}

double accuracy_of(const std::filesystem::path& dir, Backend backend,
                   const std::vector<AnnotatedSample>& samples) {
  ScorerConfig cfg = ScorerConfig::defaults(backend);
  cfg.checkpoint_ref = dir.string();
  Scorer scorer(cfg, EngineContext{});
  std::size_t hits = 0;
  for (const auto& s : samples) {
    hits += scorer.score(select_evidence_pair(s.sample)).label == s.gold_label;
  }
  return static_cast<double>(hits) / static_cast<double>(samples.size());
}

TEST(Training, ConsistencyLearnsFromZero) {
  TempDir dir;
  const auto train = synthetic_annotated(400, 10);
  const auto eval = synthetic_annotated(200, 11);
  TrainingOptions options;
  options.runs_dir = dir / "runs";
  options.base_checkpoint = zero_run(dir.path(), Backend::kConsistency).string();
  HalTrainingConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.epochs = 20;
  cfg.warmup_fraction = 0.1;
  const auto pairs = build_hal_pairs(train, LabelMode::kBinary).pairs;
  const TrainResult r = train_consistency(pairs, cfg, eval, options);
  EXPECT_EQ(r.optimizer_steps, 20u * 25u);
  ASSERT_TRUE(r.trial_accuracy.has_value());
  EXPECT_GT(*r.trial_accuracy, 0.75);
  EXPECT_DOUBLE_EQ(*r.trial_accuracy, accuracy_of(r.checkpoint_dir, Backend::kConsistency, eval));
  EXPECT_TRUE(std::filesystem::exists(r.checkpoint_dir / kWeightsFile));
  const CheckpointManifest m = read_manifest(r.checkpoint_dir);
  EXPECT_EQ(m.run_id, r.run_id);
  EXPECT_EQ(m.optimizer_steps, r.optimizer_steps);
  EXPECT_EQ(m.config, to_json(cfg));
  EXPECT_EQ(m.train_size, pairs.size());
  EXPECT_EQ(r.run_id.rfind("hal-binary-", 0), 0u);
}

TEST(Training, NliLearnsFromZero) {
  TempDir dir;
  const auto train = synthetic_annotated(400, 12);
  const auto eval = synthetic_annotated(200, 13);
  TrainingOptions options;
  options.runs_dir = dir / "runs";
  options.base_checkpoint = zero_run(dir.path(), Backend::kNli).string();
  NLITrainingConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.epochs = 20;
  const TrainResult r = train_nli(build_nli_pairs(train).pairs, cfg, eval, options);
  ASSERT_TRUE(r.trial_accuracy.has_value());
  EXPECT_GT(*r.trial_accuracy, 0.75);
  EXPECT_EQ(r.run_id.rfind("nli-", 0), 0u);
}

TEST(Training, FloatLabelsWithBothLosses) {
  TempDir dir;
  const auto train = synthetic_annotated(100, 14);
  TrainingOptions options;
  options.runs_dir = dir / "runs";
  options.base_checkpoint = "builtin:consistency";
  HalTrainingConfig cfg;
  cfg.label_mode = LabelMode::kFloat;
  const auto pairs = build_hal_pairs(train, LabelMode::kFloat).pairs;
  const TrainResult mse = train_consistency(pairs, cfg, {}, options);
  cfg.float_loss = RegressionLoss::kBce;
  const TrainResult bce = train_consistency(pairs, cfg, {}, options);
  EXPECT_NE(mse.run_id, bce.run_id);
  EXPECT_FALSE(mse.trial_accuracy.has_value());
  EXPECT_EQ(mse.run_id.rfind("hal-float-", 0), 0u);
}

TEST(Training, DeterministicForFixedSeed) {
  TempDir a, b;
  const auto train = synthetic_annotated(120, 15);
  const auto eval = synthetic_annotated(30, 16);
  const auto pairs = build_hal_pairs(train, LabelMode::kBinary).pairs;
  HalTrainingConfig cfg;
  cfg.learning_rate = 0.01;
  cfg.evaluation_steps = 7;
  TrainingOptions options;
  options.base_checkpoint = "builtin:consistency";
  options.runs_dir = a / "runs";
  const TrainResult ra = train_consistency(pairs, cfg, eval, options);
  options.runs_dir = b / "runs";
  const TrainResult rb = train_consistency(pairs, cfg, eval, options);
  EXPECT_EQ(ra.run_id, rb.run_id);
  EXPECT_EQ(read_file(ra.checkpoint_dir / kWeightsFile), read_file(rb.checkpoint_dir / kWeightsFile));
  EXPECT_EQ(read_file(ra.checkpoint_dir / kMetricsFile), read_file(rb.checkpoint_dir / kMetricsFile));

  options.seed = 7;
  const TrainResult rc = train_consistency(pairs, cfg, eval, options);
  EXPECT_NE(rc.run_id, rb.run_id);
  EXPECT_NE(read_file(rc.checkpoint_dir / kWeightsFile), read_file(rb.checkpoint_dir / kWeightsFile));
}

TEST(Training, EvaluationCadence) {
  TempDir dir;
  const auto train = synthetic_annotated(160, 17);  // 10 steps per epoch
  const auto eval = synthetic_annotated(20, 18);
  HalTrainingConfig cfg;
  cfg.epochs = 1;
  cfg.evaluation_steps = 3;
  TrainingOptions options;
  options.runs_dir = dir / "runs";
  options.base_checkpoint = "builtin:consistency";
  const auto r =
      train_consistency(build_hal_pairs(train, LabelMode::kBinary).pairs, cfg, eval, options);
  const std::string log = read_file(r.checkpoint_dir / kMetricsFile);
  std::vector<json> lines;
  std::size_t start = 0;
  while (start < log.size()) {
    const std::size_t end = log.find('\n', start);
    lines.push_back(json::parse(log.substr(start, end - start)));
    start = end + 1;
  }
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[0]["step"], 3);
  EXPECT_EQ(lines[2]["step"], 9);
  EXPECT_EQ(lines[3]["event"], "end");
  EXPECT_EQ(lines[3]["step"], 10);

  // The published evaluation interval exceeds the run length: end only.
  cfg.evaluation_steps = 10000;
  const auto r2 =
      train_consistency(build_hal_pairs(train, LabelMode::kBinary).pairs, cfg, eval, options);
  const std::string log2 = read_file(r2.checkpoint_dir / kMetricsFile);
  EXPECT_EQ(std::count(log2.begin(), log2.end(), '\n'), 1);
}

TEST(Training, DryRunKeepsBaseBehaviour) {
  TempDir dir;
  const auto train = synthetic_annotated(60, 19);
  const auto eval = synthetic_annotated(40, 20);
  TrainingOptions options;
  options.runs_dir = dir / "runs";
  options.base_checkpoint = "builtin:nli";
  options.dry_run = true;
  const TrainResult r = train_nli(build_nli_pairs(train).pairs, {}, eval, options);
  EXPECT_EQ(r.optimizer_steps, 0u);
  ScorerConfig base = ScorerConfig::defaults(Backend::kNli);
  base.checkpoint_ref = "builtin:nli";
  ScorerConfig tuned = base;
  tuned.checkpoint_ref = r.checkpoint_dir.string();
  Scorer a(base, EngineContext{}), b(tuned, EngineContext{});
  for (const auto& s : eval) {
    const EvidencePair pair = select_evidence_pair(s.sample);
    EXPECT_EQ(a.score(pair), b.score(pair));
  }
  EXPECT_TRUE(read_manifest(r.checkpoint_dir).dry_run);
}

TEST(Training, StubBases) {
  TempDir dir;
  const auto train = synthetic_annotated(30, 21);
  TrainingOptions options;
  options.runs_dir = dir / "runs";
  options.base_checkpoint = "stub:finetuned-binary";
  options.context.stub_table = std::make_shared<StubTable>();
  const auto pairs = build_hal_pairs(train, LabelMode::kBinary).pairs;
  EXPECT_THROW(train_consistency(pairs, {}, {}, options), BackendError);

  options.dry_run = true;
  const TrainResult r = train_consistency(pairs, {}, train, options);
  EXPECT_EQ(read_manifest(r.checkpoint_dir).engine, EngineKind::kStub);
  ScorerConfig stub = ScorerConfig::defaults(Backend::kConsistency);
  stub.checkpoint_ref = "stub:finetuned-binary";
  ScorerConfig run = stub;
  run.checkpoint_ref = r.checkpoint_dir.string();
  const EvidencePair pair = select_evidence_pair(train[0].sample);
  EXPECT_EQ(Scorer(stub, options.context).score(pair), Scorer(run, options.context).score(pair));
}

TEST(Training, InputErrors) {
  TempDir dir;
  TrainingOptions options;
  options.runs_dir = dir / "runs";
  options.base_checkpoint = "builtin:consistency";
  EXPECT_THROW(train_consistency({}, {}, {}, options), InputError);
  const auto pairs = build_nli_pairs(synthetic_annotated(10, 22)).pairs;
  // NLI pairs carry the wrong kind of target for the consistency trainer.
  EXPECT_THROW(train_consistency(pairs, {}, {}, options), InputError);
  options.base_checkpoint = "builtin:consistency";
  EXPECT_THROW(train_nli(pairs, {}, {}, options), BackendError);
  options.base_checkpoint = zero_run(dir.path(), Backend::kConsistency).string();
  EXPECT_THROW(train_nli(pairs, {}, {}, options), BackendError);
}

TEST(Sweep, SortedWithFailuresLast) {
  TempDir dir;
  const auto train = synthetic_annotated(120, 23);
  const auto trial = synthetic_annotated(40, 24);
  TrainingOptions options;
  options.runs_dir = dir / "runs";
  options.base_checkpoint = zero_run(dir.path(), Backend::kNli).string();
  std::vector<NLITrainingConfig> grid(4);
  grid[0].learning_rate = 1e-6;
  grid[1].epochs = 0;  // invalid
  grid[2].learning_rate = 0.05;
  grid[2].epochs = 10;
  grid[3].learning_rate = 0.01;
  const SweepTable table = sweep_nli(grid, build_nli_pairs(train).pairs, trial, options);
  ASSERT_EQ(table.rows.size(), 4u);
  EXPECT_FALSE(table.rows[3].error.empty());
  EXPECT_EQ(table.rows[3].config.epochs, 0);
  for (std::size_t i = 0; i + 1 < 3; ++i) {
    EXPECT_GE(*table.rows[i].trial_accuracy, *table.rows[i + 1].trial_accuracy);
  }
  ASSERT_NE(table.best(), nullptr);
  EXPECT_EQ(table.best(), &table.rows[0]);
  const std::string md = render_markdown(table);
  EXPECT_NE(md.find("error:"), std::string::npos);
  const json j = to_json(table);
  EXPECT_EQ(j["rows"].size(), 4u);
  EXPECT_TRUE(j["rows"][3]["trial_accuracy"].is_null());

  const std::vector<NLITrainingConfig> one(1);
  EXPECT_EQ(sweep_nli(one, build_nli_pairs(train).pairs, trial, options).rows.size(), 1u);
  EXPECT_THROW(sweep_nli({}, build_nli_pairs(train).pairs, trial, options), ConfigError);
}

}  // namespace
}  // namespace shroom
