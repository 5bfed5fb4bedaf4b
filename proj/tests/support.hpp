#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "uwfqa/labels.hpp"

namespace uwfqa::testutil {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "uwfqa") {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            (tag + "-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::vector<ArtifactLabelVector> random_labels(std::mt19937_64& gen, std::size_t n,
                                                      double p = 0.5) {
  std::bernoulli_distribution coin(p);
  std::vector<ArtifactLabelVector> out(n);
  for (auto& v : out) {
    for (std::size_t c = 0; c < kNumArtifacts; ++c) v.set(c, coin(gen));
  }
  return out;
}

}  // namespace uwfqa::testutil
