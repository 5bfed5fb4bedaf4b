#include "uwfqa/preprocess.hpp"

#include <algorithm>
#include <cmath>

#include "uwfqa/errors.hpp"

namespace uwfqa {
namespace {

struct Taps {
  int first = 0;
  std::vector<double> weights;
};

// Triangle kernel resampling coefficients for one axis (same construction as
// PIL's antialiased bilinear filter).
std::vector<Taps> axis_taps(int in_size, int out_size) {
  const double scale = static_cast<double>(in_size) / out_size;
  const double support = std::max(scale, 1.0);  // kernel radius in source pixels
  std::vector<Taps> taps(out_size);
  for (int i = 0; i < out_size; ++i) {
    const double center = (i + 0.5) * scale;
    const int lo = std::max(0, static_cast<int>(std::floor(center - support)));
    const int hi = std::min(in_size, static_cast<int>(std::ceil(center + support)));
    Taps& t = taps[i];
    t.first = lo;
    double total = 0.0;
    std::vector<double> w;
    for (int j = lo; j < hi; ++j) {
      const double d = std::abs((j + 0.5 - center) / support);
      const double v = d < 1.0 ? 1.0 - d : 0.0;
      w.push_back(v);
      total += v;
    }
    t.weights.resize(w.size());
    for (std::size_t k = 0; k < w.size(); ++k) {
      t.weights[k] = total > 0 ? w[k] / total : 0.0;
    }
  }
  return taps;
}

}  // namespace

FloatImage resize_bilinear(const FloatImage& src, int out_h, int out_w) {
  if (out_h <= 0 || out_w <= 0) throw ShapeError("resize target must be positive");
  const int ch = src.channels;
  if (src.height == out_h && src.width == out_w) return src;

  // Horizontal pass into an out_w-wide intermediate, then vertical.
  const auto htaps = axis_taps(src.width, out_w);
  FloatImage tmp(src.height, out_w, ch);
  for (int y = 0; y < src.height; ++y) {
    for (int x = 0; x < out_w; ++x) {
      const auto& t = htaps[x];
      for (int c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (std::size_t k = 0; k < t.weights.size(); ++k) {
          acc += t.weights[k] * src.at(y, t.first + static_cast<int>(k), c);
        }
        tmp.at(y, x, c) = static_cast<float>(acc);
      }
    }
  }

  const auto vtaps = axis_taps(src.height, out_h);
  FloatImage out(out_h, out_w, ch);
  for (int y = 0; y < out_h; ++y) {
    const auto& t = vtaps[y];
    for (int x = 0; x < out_w; ++x) {
      for (int c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (std::size_t k = 0; k < t.weights.size(); ++k) {
          acc += t.weights[k] * tmp.at(t.first + static_cast<int>(k), x, c);
        }
        out.at(y, x, c) = static_cast<float>(acc);
      }
    }
  }
  return out;
}

FloatImage preprocess(const RgbImage& raw, const PreprocessConfig& cfg) {
  if (raw.channels != 3) {
    throw ShapeError("expected 3 channels, got " + std::to_string(raw.channels));
  }
  if (!raw.square() || raw.height <= 0) {
    throw ShapeError("expected a square image, got " + std::to_string(raw.height) + "x" +
                     std::to_string(raw.width));
  }
  if (cfg.target_side <= 0) throw ShapeError("target_side must be positive");

  FloatImage pixels(raw.height, raw.width, 3);
  std::transform(raw.data.begin(), raw.data.end(), pixels.data.begin(),
                 [](std::uint8_t v) { return static_cast<float>(v); });
  FloatImage out = resize_bilinear(pixels, cfg.target_side, cfg.target_side);
  for (float& v : out.data) v = std::clamp(v / 127.5f - 1.0f, -1.0f, 1.0f);
  return out;
}

}  // namespace uwfqa
