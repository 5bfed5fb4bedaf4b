#pragma once

#include <cstdint>

#include "uwfqa/raster.hpp"

namespace uwfqa {

struct AugmentConfig {
  double rotation_deg = 15.0;    // angle drawn from [-r, r]
  double translate_frac = 0.10;  // shift drawn from [-t, t] * side, per axis
  double scale_min = 0.9;
  double scale_max = 1.1;
  double hflip_prob = 0.5;
  float fill_value = -1.0f;

  /// Identity transform: no rotation, shift, scaling or flipping.
  static AugmentConfig identity();

  /// Throws ArgumentError on non-finite or inconsistent ranges.
  void validate() const;
};

/// Every augmentation draw is a pure function of this key.
struct RngKey {
  std::uint64_t seed = 0;
  std::uint64_t epoch = 0;
  std::uint64_t record_index = 0;
};

struct AffineDraw {
  double angle_deg = 0.0;
  double scale = 1.0;
  double shift_x = 0.0;  // pixels
  double shift_y = 0.0;
  bool flip = false;
};

class Augmenter {
 public:
  explicit Augmenter(AugmentConfig cfg);

  const AugmentConfig& config() const { return cfg_; }

  AffineDraw draw(RngKey key, int side) const;

  /// Horizontal flip (when drawn) followed by rotation/scale/shift about the
  /// image center. Exposed pixels take fill_value; output stays in [-1, 1].
  FloatImage apply(const FloatImage& image, RngKey key) const;

 private:
  AugmentConfig cfg_;
};

FloatImage hflip(const FloatImage& image);
FloatImage warp_affine(const FloatImage& image, const AffineDraw& draw, float fill_value);

}  // namespace uwfqa
