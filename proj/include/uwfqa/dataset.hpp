#pragma once

#include <span>
#include <string>
#include <vector>

#include "uwfqa/labels.hpp"
#include "uwfqa/manifest.hpp"
#include "uwfqa/preprocess.hpp"
#include "uwfqa/raster.hpp"

namespace uwfqa {

/// Preprocessed images held in memory with their labels.
struct LabeledImages {
  std::vector<std::string> ids;
  std::vector<FloatImage> images;
  std::vector<ArtifactLabelVector> labels;

  std::size_t size() const { return images.size(); }
  bool empty() const { return images.empty(); }
  void push_back(std::string id, FloatImage image, ArtifactLabelVector label);
  LabeledImages subset(std::span<const std::size_t> indices) const;
  static LabeledImages concat(const LabeledImages& a, const LabeledImages& b);
};

/// Reads and preprocesses the given records. Throws IoError/ShapeError with
/// the record id in the message.
LabeledImages load_labeled_images(const DatasetManifest& manifest,
                                  std::span<const ImageRecord> records,
                                  const PreprocessConfig& cfg = {});

}  // namespace uwfqa
