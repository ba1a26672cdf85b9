#include <gtest/gtest.h>

#include <algorithm>

#include "fixtures.hpp"
#include "shroom/dataset.hpp"
#include "shroom/errors.hpp"
#include "shroom/util.hpp"

namespace shroom {
namespace {

using testing::data_dir;
using testing::synthetic_annotated;
using testing::TempDir;

constexpr Label H = Label::kHallucination;
constexpr Label N = Label::kNotHallucination;

TEST(DeriveGold, MajorityAndFraction) {
  const std::vector<Label> three_h = {H, H, H, N, N};
  EXPECT_EQ(derive_gold(three_h).label, H);
  EXPECT_DOUBLE_EQ(derive_gold(three_h).p_hallucination, 0.6);

  const std::vector<Label> none = {N, N, N, N, N};
  EXPECT_EQ(derive_gold(none).label, N);
  EXPECT_EQ(derive_gold(none).p_hallucination, 0.0);
}

TEST(DeriveGold, RejectsTiesAndEmpty) {
  const std::vector<Label> tie = {H, H, N, N};
  EXPECT_THROW(derive_gold(tie), AnnotationError);
  EXPECT_THROW(derive_gold({}), AnnotationError);
}

TEST(DeriveGold, PermutationInvariant) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Label> labels(5);
    for (auto& l : labels) l = rng() & 1 ? H : N;
    const GoldAnnotation expected = derive_gold(labels);
    for (int k = 0; k < 5; ++k) {
      std::shuffle(labels.begin(), labels.end(), rng);
      const GoldAnnotation g = derive_gold(labels);
      EXPECT_EQ(g.label, expected.label);
      EXPECT_EQ(g.p_hallucination, expected.p_hallucination);
    }
  }
}

TEST(ParseSamples, SharedTaskRecord) {
  const auto samples = parse_samples(
      R"js([{"hyp":"h","tgt":"t","src":"s","ref":"either","task":"MT","model":""}])js");
  ASSERT_EQ(samples.size(), 1u);
  EXPECT_EQ(samples[0].ref, Ref::kEither);
  EXPECT_EQ(samples[0].task, Task::kMT);
  EXPECT_EQ(samples[0].model, "");
  EXPECT_EQ(samples[0].id, "0");
}

TEST(ParseSamples, EmptyArray) { EXPECT_TRUE(parse_samples("[]").empty()); }

TEST(ParseSamples, CaseInsensitiveEnums) {
  const auto samples =
      parse_samples(R"js([{"hyp":"h","tgt":"t","src":"s","ref":"TGT","task":"pg","model":"m"}])js");
  EXPECT_EQ(samples[0].ref, Ref::kTgt);
  EXPECT_EQ(samples[0].task, Task::kPG);
}

TEST(ParseSamples, ErrorsNameIndexAndKey) {
  try {
    parse_samples(R"js([{"hyp":"h","tgt":"t","src":"s","ref":"tgt","task":"MT"},
                      {"hyp":"h","tgt":"t","src":"s","ref":"tgt","task":"QA"}])js");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("record 1"), std::string::npos) << e.what();
  }
  try {
    parse_samples(R"js([{"tgt":"t","src":"s","ref":"tgt","task":"MT"}])js");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("record 0"), std::string::npos) << what;
    EXPECT_NE(what.find("hyp"), std::string::npos) << what;
  }
}

TEST(ParseSamples, RefInvariants) {
  EXPECT_THROW(parse_samples(R"js([{"hyp":"h","tgt":"","src":"s","ref":"tgt","task":"MT"}])js"),
               ParseError);
  EXPECT_THROW(parse_samples(R"js([{"hyp":"h","tgt":"t","src":"","ref":"either","task":"MT"}])js"),
               ParseError);
  EXPECT_THROW(parse_samples(R"js([{"hyp":"","tgt":"t","src":"s","ref":"tgt","task":"MT"}])js"),
               ParseError);
  // Model-aware paraphrase records may omit the target.
  EXPECT_NO_THROW(parse_samples(
      R"js([{"hyp":"h","tgt":"","src":"s","ref":"either","task":"PG","model":"m"}])js"));
}

TEST(ParseAnnotated, ChecksGoldAgainstVotes) {
  const std::string ok = R"js([{"hyp":"h","tgt":"t","src":"s","ref":"tgt","task":"MT","model":"",
      "labels":["Hallucination","Hallucination","Hallucination","Not Hallucination","Not Hallucination"],
      "label":"Hallucination","p(Hallucination)":0.6}])js";
  const auto parsed = parse_annotated(ok);
  EXPECT_EQ(parsed[0].gold_label, H);
  EXPECT_DOUBLE_EQ(parsed[0].gold_p_hallucination, 0.6);

  std::string bad_label = ok;
  bad_label.replace(bad_label.find("\"label\":\"Hallucination\""), 23,
                    "\"label\":\"Not Hallucination\"");
  EXPECT_THROW(parse_annotated(bad_label), ParseError);

  std::string bad_p = ok;
  bad_p.replace(bad_p.find("0.6"), 3, "0.8");
  EXPECT_THROW(parse_annotated(bad_p), ParseError);

  EXPECT_THROW(parse_annotated(R"js([{"hyp":"h","tgt":"t","src":"s","ref":"tgt","task":"MT"}])js"),
               ParseError);
}

TEST(ParseAnnotated, EvenVoteCountIsAnError) {
  EXPECT_THROW(parse_annotated(R"js([{"hyp":"h","tgt":"t","src":"s","ref":"tgt","task":"MT",
      "labels":["Hallucination","Not Hallucination"],"label":"Hallucination",
      "p(Hallucination)":0.5}])js"),
               InputError);
}

TEST(RoundTrip, SharedTaskExamples) {
  const auto text = read_file(data_dir() / "shared_task_examples.json");
  const auto samples = parse_samples(text);
  ASSERT_EQ(samples.size(), 8u);
  EXPECT_EQ(parse_samples(serialize_samples(samples)), samples);
}

TEST(RoundTrip, AnnotatedSynthetic) {
  const auto samples = synthetic_annotated(200, 11);
  EXPECT_EQ(parse_annotated(serialize_annotated(samples)), samples);
  EXPECT_TRUE(has_annotations(serialize_annotated(samples)));
  EXPECT_FALSE(has_annotations(serialize_samples(strip_annotations(samples))));
}

TEST(RoundTrip, StringAndIntegerIds) {
  const auto samples = parse_samples(
      R"js([{"id":"val-7","hyp":"h","tgt":"t","src":"s","ref":"tgt","task":"MT"},
          {"id":12,"hyp":"h","tgt":"t","src":"s","ref":"tgt","task":"MT"}])js");
  EXPECT_EQ(samples[0].id, "val-7");
  EXPECT_EQ(samples[1].id, "12");
  EXPECT_EQ(id_to_json("12"), nlohmann::json(12));
  EXPECT_EQ(id_to_json("012"), nlohmann::json("012"));
  EXPECT_EQ(parse_samples(serialize_samples(samples)), samples);
}

TEST(LoadSamples, PathInErrors) {
  TempDir dir;
  write_file(dir / "bad.json", "[{]");
  try {
    load_samples(dir / "bad.json");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.json"), std::string::npos);
  }
  EXPECT_THROW(load_samples(dir / "missing.json"), InputError);
}

TEST(EvidencePair, TargetPreferred) {
  const auto samples = parse_samples(read_file(data_dir() / "shared_task_examples.json"));
  const EvidencePair pair = select_evidence_pair(samples[0]);
  EXPECT_EQ(pair.premise, "Don't worry. It's only temporary.");
  EXPECT_EQ(pair.hypothesis, "Don't worry, it's only temporary.");
  EXPECT_EQ(pair.provenance, Provenance::kTgt);
}

TEST(EvidencePair, EmptyTargetFallsBackToSource) {
  const auto samples = parse_samples(read_file(data_dir() / "shared_task_examples.json"));
  const EvidencePair pair = select_evidence_pair(samples[7]);
  EXPECT_EQ(pair.provenance, Provenance::kSrc);
  EXPECT_EQ(pair.premise, samples[7].src);
  EXPECT_EQ(pair.hypothesis, samples[7].hyp);
}

TEST(EvidencePair, NothingToCompareAgainst) {
  Sample s;
  s.hyp = "h";
  s.ref = Ref::kSrc;
  EXPECT_THROW(select_evidence_pair(s), UnscorableSampleError);
}

TEST(EvidencePair, NeverEmpty) {
  for (const auto& a : synthetic_annotated(300, 5)) {
    const EvidencePair p = select_evidence_pair(a.sample);
    EXPECT_FALSE(p.premise.empty());
    EXPECT_FALSE(p.hypothesis.empty());
  }
}

TEST(Stats, EmptyInput) {
  const DatasetStats stats = compute_stats(std::span<const Sample>{});
  EXPECT_EQ(stats.size, 0u);
  EXPECT_TRUE(stats.per_task_counts.empty());
  EXPECT_TRUE(stats.p_hallucination_histogram.empty());
}

TEST(Stats, UnanimousNotHallucination) {
  auto samples = synthetic_annotated(5, 3);
  for (auto& a : samples) {
    a.annotator_labels.assign(5, N);
    a.gold_label = N;
    a.gold_p_hallucination = 0.0;
  }
  const DatasetStats stats = compute_stats(samples);
  EXPECT_EQ(stats.per_label_counts, (std::map<Label, std::size_t>{{N, 5}}));
  EXPECT_EQ(stats.p_hallucination_histogram, (std::map<double, std::size_t>{{0.0, 5}}));
}

TEST(Stats, CountsSumToSize) {
  const auto samples = synthetic_annotated(1000, 21);
  const DatasetStats stats = compute_stats(samples);
  auto sum = [](const auto& m) {
    std::size_t total = 0;
    for (const auto& [k, v] : m) total += v;
    return total;
  };
  EXPECT_EQ(sum(stats.per_task_counts), 1000u);
  EXPECT_EQ(sum(stats.per_label_counts), 1000u);
  EXPECT_EQ(sum(stats.p_hallucination_histogram), 1000u);
  EXPECT_EQ(sum(stats.p_per_label_breakdown), 1000u);
  for (const auto& [key, count] : stats.p_per_label_breakdown) {
    if (key.first == H) EXPECT_GT(key.second, 0.5);
  }
}

TEST(Stats, GoldCoupling) {
  for (const auto& a : synthetic_annotated(500, 8)) {
    EXPECT_EQ(a.gold_label == H, a.gold_p_hallucination > 0.5);
  }
}

TEST(FormatFraction, ShortestForm) {
  EXPECT_EQ(format_fraction(0.0), "0.0");
  EXPECT_EQ(format_fraction(0.6), "0.6");
  EXPECT_EQ(format_fraction(1.0), "1.0");
  EXPECT_EQ(format_fraction(0.2 + 0.4), "0.6000000000000001");
}

TEST(Types, ParseAndPrint) {
  EXPECT_EQ(parse_label("not hallucination"), N);
  EXPECT_EQ(to_string(H), "Hallucination");
  EXPECT_EQ(parse_track("Model-Agnostic"), Track::kModelAgnostic);
  EXPECT_EQ(track_slug(Track::kModelAware), "model_aware");
  EXPECT_THROW(parse_task("QA"), ParseError);
  EXPECT_THROW(parse_ref("both"), ParseError);
}

TEST(Util, Sha256KnownVector) {
  EXPECT_EQ(sha256_hex("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(fingerprint64("abc"), 0xba7816bf8f01cfeaULL);
  EXPECT_LT(unit_interval(~0ULL), 1.0);
  EXPECT_EQ(unit_interval(0), 0.0);
}

}  // namespace
}  // namespace shroom
