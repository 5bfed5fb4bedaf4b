#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace uwfqa {

/// Interleaved (HWC) pixel buffer.
template <typename T>
struct Raster {
  int height = 0;
  int width = 0;
  int channels = 3;
  std::vector<T> data;

  Raster() = default;
  Raster(int h, int w, int c, T fill = T{})
      : height(h), width(w), channels(c),
        data(static_cast<std::size_t>(h) * w * c, fill) {}

  std::size_t offset(int y, int x, int c = 0) const {
    return (static_cast<std::size_t>(y) * width + x) * channels + c;
  }
  T& at(int y, int x, int c) { return data[offset(y, x, c)]; }
  const T& at(int y, int x, int c) const { return data[offset(y, x, c)]; }

  bool square() const { return height == width; }
  bool empty() const { return data.empty(); }
  std::span<const std::byte> bytes() const { return std::as_bytes(std::span(data)); }

  friend bool operator==(const Raster&, const Raster&) = default;
};

/// 8-bit RGB photograph.
using RgbImage = Raster<std::uint8_t>;

/// Network-ready image with values in [-1, 1].
using FloatImage = Raster<float>;

}  // namespace uwfqa
