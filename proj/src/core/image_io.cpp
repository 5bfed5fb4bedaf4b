#include "uwfqa/image_io.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include <cstring>
#include <fstream>

#include "uwfqa/errors.hpp"

namespace uwfqa {
namespace {

RgbImage from_mat(const cv::Mat& decoded) {
  cv::Mat bgr;
  switch (decoded.channels()) {
    case 1:
      cv::merge(std::vector<cv::Mat>{decoded, decoded, decoded}, bgr);
      break;
    case 3:
      bgr = decoded;
      break;
    case 4: {
      std::vector<cv::Mat> planes;
      cv::split(decoded, planes);
      planes.pop_back();
      cv::merge(planes, bgr);
      break;
    }
    default:
      throw IoError("unsupported channel count " + std::to_string(decoded.channels()));
  }
  if (bgr.depth() != CV_8U) {
    cv::Mat tmp;
    bgr.convertTo(tmp, CV_8U, bgr.depth() == CV_16U ? 1.0 / 257.0 : 1.0);
    bgr = tmp;
  }
  RgbImage out(bgr.rows, bgr.cols, 3);
  for (int y = 0; y < bgr.rows; ++y) {
    const auto* row = bgr.ptr<std::uint8_t>(y);
    for (int x = 0; x < bgr.cols; ++x) {
      out.at(y, x, 0) = row[3 * x + 2];
      out.at(y, x, 1) = row[3 * x + 1];
      out.at(y, x, 2) = row[3 * x + 0];
    }
  }
  return out;
}

cv::Mat to_bgr_mat(const RgbImage& image) {
  if (image.channels != 3) throw ShapeError("expected a 3-channel image");
  cv::Mat bgr(image.height, image.width, CV_8UC3);
  for (int y = 0; y < image.height; ++y) {
    auto* row = bgr.ptr<std::uint8_t>(y);
    for (int x = 0; x < image.width; ++x) {
      row[3 * x + 0] = image.at(y, x, 2);
      row[3 * x + 1] = image.at(y, x, 1);
      row[3 * x + 2] = image.at(y, x, 0);
    }
  }
  return bgr;
}

}  // namespace

RgbImage decode_image(std::span<const std::uint8_t> encoded) {
  if (encoded.empty()) throw IoError("empty image payload");
  const cv::Mat buf(1, static_cast<int>(encoded.size()), CV_8UC1,
                    const_cast<std::uint8_t*>(encoded.data()));
  cv::Mat decoded;
  try {
    decoded = cv::imdecode(buf, cv::IMREAD_UNCHANGED);
  } catch (const cv::Exception& e) {
    throw IoError(std::string("image decode failed: ") + e.what());
  }
  if (decoded.empty()) throw IoError("payload is not a decodable image");
  return from_mat(decoded);
}

RgbImage read_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return decode_image(bytes);
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_png(const RgbImage& image) {
  std::vector<std::uint8_t> out;
  if (!cv::imencode(".png", to_bgr_mat(image), out)) throw IoError("PNG encoding failed");
  return out;
}

void write_png(const RgbImage& image, const std::filesystem::path& path) {
  const auto bytes = encode_png(image);
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("cannot write " + path.string());
}

}  // namespace uwfqa
