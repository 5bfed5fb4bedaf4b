#include <gtest/gtest.h>

#include <cmath>

#include "uwfqa/augment.hpp"
#include "uwfqa/digest.hpp"
#include "uwfqa/errors.hpp"
#include "uwfqa/preprocess.hpp"

using namespace uwfqa;

namespace {

RgbImage constant_image(int side, std::uint8_t v) { return RgbImage(side, side, 3, v); }

// Direct 2-D evaluation of the antialiased triangle filter for one output
// pixel; no separability, no precomputed tables.
double reference_pixel(const RgbImage& src, int out_side, int oy, int ox, int c) {
  const double scale = static_cast<double>(src.height) / out_side;
  const double cy = (oy + 0.5) * scale;
  const double cx = (ox + 0.5) * scale;
  const int y0 = std::max(0, static_cast<int>(std::floor(cy - scale)));
  const int y1 = std::min(src.height, static_cast<int>(std::ceil(cy + scale)) + 1);
  const int x0 = std::max(0, static_cast<int>(std::floor(cx - scale)));
  const int x1 = std::min(src.width, static_cast<int>(std::ceil(cx + scale)) + 1);
  double acc = 0.0;
  double norm = 0.0;
  for (int y = y0; y < y1; ++y) {
    const double wy = std::max(0.0, 1.0 - std::abs((y + 0.5 - cy) / scale));
    for (int x = x0; x < x1; ++x) {
      const double wx = std::max(0.0, 1.0 - std::abs((x + 0.5 - cx) / scale));
      acc += wy * wx * src.at(y, x, c);
      norm += wy * wx;
    }
  }
  return acc / norm / 127.5 - 1.0;
}

FloatImage gradient_image(int side) {
  FloatImage img(side, side, 3);
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      for (int c = 0; c < 3; ++c) {
        img.at(y, x, c) = std::sin(0.1f * x + 0.2f * c) * std::cos(0.07f * y);
      }
    }
  }
  return img;
}

std::string checksum(const FloatImage& img) { return sha256_hex(img.bytes()); }

}  // namespace

TEST(Preprocess, ConstantEndpoints) {
  for (auto [value, expected] : {std::pair{0, -1.0f}, std::pair{255, 1.0f}}) {
    const auto out = preprocess(constant_image(500, static_cast<std::uint8_t>(value)));
    ASSERT_EQ(out.height, 224);
    ASSERT_EQ(out.width, 224);
    ASSERT_EQ(out.channels, 3);
    for (float v : out.data) ASSERT_EQ(v, expected);
  }
}

TEST(Preprocess, RejectsNonSquareAndWrongChannels) {
  EXPECT_THROW(preprocess(RgbImage(100, 120, 3)), ShapeError);
  EXPECT_THROW(preprocess(RgbImage(100, 100, 1)), ShapeError);
}

TEST(Preprocess, SplitImageMatchesDirectFilter) {
  const int side = 4000;
  RgbImage src(side, side, 3, 0);
  for (int y = 0; y < side; ++y) {
    for (int x = side / 2; x < side; ++x) {
      for (int c = 0; c < 3; ++c) src.at(y, x, c) = 255;
    }
  }
  const auto out = preprocess(src);
  ASSERT_EQ(out.height, 224);
  EXPECT_NEAR(out.at(100, 0, 0), -1.0, 1e-6);
  EXPECT_NEAR(out.at(100, 100, 1), -1.0, 1e-6);
  EXPECT_NEAR(out.at(100, 123, 1), 1.0, 1e-6);
  EXPECT_NEAR(out.at(100, 223, 2), 1.0, 1e-6);
  // The midline columns form the transition band.
  EXPECT_GT(out.at(100, 111, 0), -1.0);
  EXPECT_LT(out.at(100, 112, 0), 1.0);
  for (int oy : {0, 111, 223}) {
    for (int ox = 0; ox < 224; ++ox) {
      ASSERT_NEAR(out.at(oy, ox, 0), reference_pixel(src, 224, oy, ox, 0), 1e-5)
          << "at (" << oy << ", " << ox << ")";
    }
  }
}

TEST(Preprocess, OddShrinkMatchesDirectFilterOnNoise) {
  RgbImage src(37, 37, 3);
  std::uint32_t s = 12345;
  for (auto& v : src.data) {
    s = s * 1664525u + 1013904223u;
    v = static_cast<std::uint8_t>(s >> 24);
  }
  const auto down = preprocess(src, {16, 37});
  for (int oy = 0; oy < 16; ++oy) {
    for (int ox = 0; ox < 16; ++ox) {
      ASSERT_NEAR(down.at(oy, ox, 2), reference_pixel(src, 16, oy, ox, 2), 1e-5);
    }
  }
}

TEST(Augment, IdentityConfigIsExact) {
  const auto img = gradient_image(224);
  AugmentConfig cfg = AugmentConfig::identity();
  EXPECT_EQ(cfg.hflip_prob, 0.0);
  const Augmenter aug(cfg);
  for (std::uint64_t i = 0; i < 5; ++i) EXPECT_EQ(aug.apply(img, {1, 2, i}), img);
}

TEST(Augment, FlipIsAnInvolution) {
  AugmentConfig cfg = AugmentConfig::identity();
  cfg.hflip_prob = 1.0;
  const Augmenter aug(cfg);
  const auto img = gradient_image(224);
  const auto once = aug.apply(img, {3, 0, 9});
  EXPECT_NE(once, img);
  EXPECT_EQ(once.at(5, 0, 1), img.at(5, 223, 1));
  EXPECT_EQ(aug.apply(once, {77, 4, 1}), img);
}

TEST(Augment, DeterministicPerKey) {
  const Augmenter aug(AugmentConfig{});
  const auto img = gradient_image(224);
  const auto a = checksum(aug.apply(img, {42, 3, 17}));
  EXPECT_EQ(a, checksum(aug.apply(img, {42, 3, 17})));
  EXPECT_NE(a, checksum(aug.apply(img, {42, 4, 17})));
  EXPECT_NE(a, checksum(aug.apply(img, {42, 3, 18})));
}

TEST(Augment, DrawsStayInRange) {
  const AugmentConfig cfg;
  const Augmenter aug(cfg);
  int flips = 0;
  for (std::uint64_t i = 0; i < 2000; ++i) {
    const auto d = aug.draw({5, i / 100, i % 100}, 224);
    ASSERT_LE(std::abs(d.angle_deg), cfg.rotation_deg);
    ASSERT_GE(d.scale, cfg.scale_min);
    ASSERT_LE(d.scale, cfg.scale_max);
    ASSERT_LE(std::abs(d.shift_x), cfg.translate_frac * 224);
    ASSERT_LE(std::abs(d.shift_y), cfg.translate_frac * 224);
    flips += d.flip;
  }
  EXPECT_NEAR(flips / 2000.0, 0.5, 0.05);
}

TEST(Augment, OutputStaysInRangeAndFillsWithBlack) {
  const Augmenter aug(AugmentConfig{});
  FloatImage img(224, 224, 3, 1.0f);
  for (std::uint64_t i = 0; i < 20; ++i) {
    const auto out = aug.apply(img, {8, 0, i});
    for (float v : out.data) {
      ASSERT_GE(v, -1.0f);
      ASSERT_LE(v, 1.0f);
    }
  }
  AffineDraw shift;
  shift.shift_x = 50;
  const auto moved = warp_affine(img, shift, -1.0f);
  EXPECT_EQ(moved.at(100, 10, 0), -1.0f);
  EXPECT_EQ(moved.at(100, 200, 0), 1.0f);
}

TEST(Augment, RejectsBadConfig) {
  AugmentConfig cfg;
  cfg.scale_min = 1.2;
  EXPECT_THROW(Augmenter{cfg}, ArgumentError);
  cfg = AugmentConfig{};
  cfg.hflip_prob = 1.5;
  EXPECT_THROW(Augmenter{cfg}, ArgumentError);
}
