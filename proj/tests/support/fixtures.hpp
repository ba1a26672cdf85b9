#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "shroom/dataset.hpp"

namespace shroom::testing {

// Removed recursively on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Random five-annotator samples with consistent gold fields. Texts share
// vocabulary so lexical overlap carries some signal about the label.
std::vector<AnnotatedSample> synthetic_annotated(std::size_t n, std::uint64_t seed,
                                                 bool model_aware = true);

std::filesystem::path data_dir();

}  // namespace shroom::testing
