#pragma once

#include <memory>
#include <mutex>

#include "uwfqa/nn/checkpoint.hpp"
#include "uwfqa/service.hpp"

namespace uwfqa::nn {

/// Serves a loaded checkpoint. The network stays in eval mode and is shared
/// by all request threads.
class CheckpointPredictor : public service::Predictor {
 public:
  explicit CheckpointPredictor(ModelCheckpoint checkpoint);
  static std::shared_ptr<CheckpointPredictor> load(const std::filesystem::path& path);

  LogitVector predict(const FloatImage& image) override;
  std::string version() const override { return version_; }

 private:
  ModelCheckpoint checkpoint_;
  std::string version_;
};

}  // namespace uwfqa::nn
