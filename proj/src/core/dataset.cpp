#include "uwfqa/dataset.hpp"

#include "uwfqa/errors.hpp"
#include "uwfqa/image_io.hpp"

namespace uwfqa {

void LabeledImages::push_back(std::string id, FloatImage image, ArtifactLabelVector label) {
  ids.push_back(std::move(id));
  images.push_back(std::move(image));
  labels.push_back(label);
}

LabeledImages LabeledImages::subset(std::span<const std::size_t> indices) const {
  LabeledImages out;
  for (std::size_t i : indices) out.push_back(ids.at(i), images.at(i), labels.at(i));
  return out;
}

LabeledImages LabeledImages::concat(const LabeledImages& a, const LabeledImages& b) {
  LabeledImages out = a;
  for (std::size_t i = 0; i < b.size(); ++i) out.push_back(b.ids[i], b.images[i], b.labels[i]);
  return out;
}

LabeledImages load_labeled_images(const DatasetManifest& manifest,
                                  std::span<const ImageRecord> records,
                                  const PreprocessConfig& cfg) {
  LabeledImages out;
  for (const auto& r : records) {
    try {
      out.push_back(r.id, preprocess(read_image(manifest.resolve(r)), cfg), r.labels);
    } catch (const ShapeError& e) {
      throw ShapeError("record '" + r.id + "': " + e.what());
    }
  }
  return out;
}

}  // namespace uwfqa
