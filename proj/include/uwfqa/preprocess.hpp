#pragma once

#include "uwfqa/raster.hpp"

namespace uwfqa {

struct PreprocessConfig {
  int target_side = 224;
  int source_side = 4000;  // informational; any square side is accepted
};

/// Resamples a float raster to `out_h` x `out_w` with a triangle (bilinear)
/// kernel widened by the scale factor when shrinking, so downscaling
/// averages every source pixel instead of point-sampling.
FloatImage resize_bilinear(const FloatImage& src, int out_h, int out_w);

/// Square 8-bit RGB -> target_side^2 x 3 floats in [-1, 1] (pixel/127.5 - 1).
/// Throws ShapeError for non-square input or a channel count other than 3.
FloatImage preprocess(const RgbImage& raw, const PreprocessConfig& cfg = {});

}  // namespace uwfqa
