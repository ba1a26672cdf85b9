#include "fixtures.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>

#include <fmt/format.h>

namespace shroom::testing {
namespace fs = std::filesystem;

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  std::random_device rd;
  path_ = fs::temp_directory_path() /
          fmt::format("shroom-test-{}-{}-{}", ::getpid(), counter++, rd());
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

std::vector<AnnotatedSample> synthetic_annotated(std::size_t n, std::uint64_t seed,
                                                 bool model_aware) {
  static const std::vector<std::string> kWords = {
      "river", "stone", "market", "window", "garden", "letter", "winter", "doctor",
      "silver", "bridge", "forest", "candle", "harbor", "engine", "pocket", "ladder"};
  static const std::vector<std::string> kModels = {"model-a", "model-b", "model-c"};
  std::mt19937_64 rng(seed);
  auto pick = [&](std::size_t k) { return std::uniform_int_distribution<std::size_t>(0, k - 1)(rng); };
  auto sentence = [&](std::size_t len) {
    std::string s;
    for (std::size_t i = 0; i < len; ++i) s += (i ? " " : "") + kWords[pick(kWords.size())];
    return s;
  };

  std::vector<AnnotatedSample> out;
  for (std::size_t i = 0; i < n; ++i) {
    AnnotatedSample a;
    Sample& s = a.sample;
    s.id = std::to_string(i);
    s.task = static_cast<Task>(pick(3));
    s.model = model_aware ? kModels[pick(kModels.size())] : "";
    s.src = sentence(6);
    s.tgt = sentence(6);
    const bool hallucinated = pick(2) == 0;
    // Supported hypotheses copy most of tgt; hallucinated ones are fresh text.
    s.hyp = hallucinated ? sentence(5) : s.tgt.substr(0, s.tgt.rfind(' '));
    s.ref = Ref::kEither;
    if (s.task == Task::kPG && model_aware && pick(3) == 0) {
      s.tgt.clear();
      s.ref = Ref::kSrc;
    }
    // Annotators agree with the construction most of the time.
    const std::size_t agree = 3 + pick(3);
    for (std::size_t k = 0; k < 5; ++k) {
      const bool h = k < agree ? hallucinated : !hallucinated;
      a.annotator_labels.push_back(h ? Label::kHallucination : Label::kNotHallucination);
    }
    std::shuffle(a.annotator_labels.begin(), a.annotator_labels.end(), rng);
    const GoldAnnotation gold = derive_gold(a.annotator_labels);
    a.gold_label = gold.label;
    a.gold_p_hallucination = gold.p_hallucination;
    out.push_back(std::move(a));
  }
  return out;
}

fs::path data_dir() { return SHROOM_TEST_DATA_DIR; }

}  // namespace shroom::testing
