#include "uwfqa/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "uwfqa/errors.hpp"
#include "uwfqa/rng.hpp"

namespace uwfqa {

AugmentConfig AugmentConfig::identity() {
  AugmentConfig cfg;
  cfg.rotation_deg = 0.0;
  cfg.translate_frac = 0.0;
  cfg.scale_min = 1.0;
  cfg.scale_max = 1.0;
  cfg.hflip_prob = 0.0;
  return cfg;
}

void AugmentConfig::validate() const {
  const auto finite = [](double v) { return std::isfinite(v); };
  if (!finite(rotation_deg) || rotation_deg < 0.0 || rotation_deg > 180.0) {
    throw ArgumentError("rotation_deg must be in [0, 180]");
  }
  if (!finite(translate_frac) || translate_frac < 0.0 || translate_frac > 1.0) {
    throw ArgumentError("translate_frac must be in [0, 1]");
  }
  if (!finite(scale_min) || !finite(scale_max) || scale_min <= 0.0 || scale_max < scale_min) {
    throw ArgumentError("scale range must satisfy 0 < scale_min <= scale_max");
  }
  if (!finite(hflip_prob) || hflip_prob < 0.0 || hflip_prob > 1.0) {
    throw ArgumentError("hflip_prob must be in [0, 1]");
  }
  if (!std::isfinite(fill_value) || fill_value < -1.0f || fill_value > 1.0f) {
    throw ArgumentError("fill_value must be in [-1, 1]");
  }
}

Augmenter::Augmenter(AugmentConfig cfg) : cfg_(cfg) { cfg_.validate(); }

AffineDraw Augmenter::draw(RngKey key, int side) const {
  Rng rng(derive_seed({key.seed, key.epoch, key.record_index}));
  AffineDraw d;
  d.flip = rng.uniform() < cfg_.hflip_prob;
  d.angle_deg = rng.uniform(-cfg_.rotation_deg, cfg_.rotation_deg);
  d.scale = rng.uniform(cfg_.scale_min, cfg_.scale_max);
  d.shift_x = rng.uniform(-cfg_.translate_frac, cfg_.translate_frac) * side;
  d.shift_y = rng.uniform(-cfg_.translate_frac, cfg_.translate_frac) * side;
  return d;
}

FloatImage Augmenter::apply(const FloatImage& image, RngKey key) const {
  const AffineDraw d = draw(key, image.width);
  FloatImage out = d.flip ? hflip(image) : image;
  return warp_affine(out, AffineDraw{d.angle_deg, d.scale, d.shift_x, d.shift_y, false},
                     cfg_.fill_value);
}

FloatImage hflip(const FloatImage& image) {
  FloatImage out(image.height, image.width, image.channels);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      for (int c = 0; c < image.channels; ++c) {
        out.at(y, x, c) = image.at(y, image.width - 1 - x, c);
      }
    }
  }
  return out;
}

FloatImage warp_affine(const FloatImage& image, const AffineDraw& d, float fill_value) {
  FloatImage src = d.flip ? hflip(image) : image;
  if (d.angle_deg == 0.0 && d.scale == 1.0 && d.shift_x == 0.0 && d.shift_y == 0.0) {
    return src;
  }

  const int h = src.height;
  const int w = src.width;
  const int ch = src.channels;
  const double cx = w / 2.0;
  const double cy = h / 2.0;
  const double theta = d.angle_deg * std::numbers::pi / 180.0;
  const double cos_t = std::cos(theta);
  const double sin_t = std::sin(theta);

  FloatImage out(h, w, ch, fill_value);
  const auto sample = [&](int y, int x, int c) {
    return (x < 0 || y < 0 || x >= w || y >= h) ? fill_value : src.at(y, x, c);
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      // Inverse map of: out = center + scale * R(theta) (in - center) + shift.
      const double dx = (x + 0.5 - cx - d.shift_x) / d.scale;
      const double dy = (y + 0.5 - cy - d.shift_y) / d.scale;
      const double u = cos_t * dx + sin_t * dy + cx - 0.5;
      const double v = -sin_t * dx + cos_t * dy + cy - 0.5;
      if (u <= -1.0 || v <= -1.0 || u >= w || v >= h) continue;
      const int x0 = static_cast<int>(std::floor(u));
      const int y0 = static_cast<int>(std::floor(v));
      const double fx = u - x0;
      const double fy = v - y0;
      for (int c = 0; c < ch; ++c) {
        const double top = (1.0 - fx) * sample(y0, x0, c) + fx * sample(y0, x0 + 1, c);
        const double bottom = (1.0 - fx) * sample(y0 + 1, x0, c) + fx * sample(y0 + 1, x0 + 1, c);
        const double value = (1.0 - fy) * top + fy * bottom;
        out.at(y, x, c) = std::clamp(static_cast<float>(value), -1.0f, 1.0f);
      }
    }
  }
  return out;
}

}  // namespace uwfqa
