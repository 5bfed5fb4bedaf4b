#include "uwfqa/nn/predictor.hpp"

namespace uwfqa::nn {

CheckpointPredictor::CheckpointPredictor(ModelCheckpoint checkpoint)
    : checkpoint_(std::move(checkpoint)), version_(checkpoint_.model_version()) {
  checkpoint_.model->eval_mode();
}

std::shared_ptr<CheckpointPredictor> CheckpointPredictor::load(const std::filesystem::path& path) {
  return std::make_shared<CheckpointPredictor>(load_checkpoint(path));
}

LogitVector CheckpointPredictor::predict(const FloatImage& image) {
  return predict_logits(*checkpoint_.model, std::span(&image, 1), 1).front();
}

}  // namespace uwfqa::nn
