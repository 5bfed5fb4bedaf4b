#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "uwfqa/raster.hpp"

namespace uwfqa {

/// Decodes any raster container OpenCV understands into 8-bit RGB.
/// Throws IoError when the bytes are not a decodable image.
RgbImage decode_image(std::span<const std::uint8_t> encoded);
RgbImage read_image(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_png(const RgbImage& image);
void write_png(const RgbImage& image, const std::filesystem::path& path);

}  // namespace uwfqa
