#include <random>

#include <gtest/gtest.h>

#include "lipkit/image.hpp"
#include "lipkit/roi.hpp"
#include "support/oracles.hpp"

using namespace lipkit;

namespace {

Image noise(std::size_t h, std::size_t w, std::size_t c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Image img(h, w, c);
  for (auto& v : img.pixels()) v = static_cast<std::uint8_t>(rng() & 0xFF);
  return img;
}

CropPlan plan_for(double side, Point2 center, std::size_t out) {
  CropPlan p;
  p.segment_id = "t";
  p.side = side;
  p.centers = {center};
  p.filled = {false};
  p.output_size = out;
  return p;
}

}  // namespace

TEST(CropFrame, CenteredIdentityScale) {
  const auto img = noise(224, 224, 3, 1);
  const auto out = crop_frame(img, plan_for(112, {112, 112}, 112), 0);
  EXPECT_EQ(out, oracle::window(img, 56, 56, 112));
}

TEST(CropFrame, CornerIsZeroPadded) {
  auto img = Image(64, 64, 1, 200);
  const auto out = crop_frame(img, plan_for(20, {0, 0}, 20), 0);
  ASSERT_EQ(out.height(), 20u);
  for (std::size_t y = 0; y < 20; ++y)
    for (std::size_t x = 0; x < 20; ++x)
      EXPECT_EQ(out.at(y, x, 0), (y >= 10 && x >= 10) ? 200 : 0) << y << "," << x;
}

TEST(CropFrame, FullImageDownsampleMatchesBoxFilter) {
  const auto img = noise(224, 224, 3, 2);
  const auto out = crop_frame(img, plan_for(224, {112, 112}, 112), 0);
  EXPECT_EQ(out, oracle::box_downsample_2x(img));
}

TEST(CropFrame, SideAndCenterRounding) {
  // side 20.4 -> 20, center 30.5 -> 31 (half away from zero): window [21, 41).
  const auto img = noise(64, 64, 1, 3);
  auto p = plan_for(20.4, {30.5, 30.5}, 20);
  const auto w = source_window(p, 0);
  EXPECT_EQ(w.side, 20u);
  EXPECT_EQ(w.x0, 21);
  EXPECT_EQ(w.y0, 21);
  EXPECT_EQ(crop_frame(img, p, 0), oracle::window(img, 21, 21, 20));
  // Odd side: [c - floor(L/2), c - floor(L/2) + L).
  p.side = 21;
  EXPECT_EQ(source_window(p, 0).x0, 21);
}

TEST(CropFrame, OutOfRangeFrameIndex) {
  const auto img = noise(16, 16, 1, 4);
  EXPECT_THROW(crop_frame(img, plan_for(8, {8, 8}, 8), 1), IndexError);
  EXPECT_THROW(crop_frame(Image{}, plan_for(8, {8, 8}, 8), 0), ShapeError);
}

TEST(CropFrameProperties, AlwaysOutputSize) {
  std::mt19937_64 rng(9);
  const auto img = noise(48, 64, 3, 5);
  std::uniform_real_distribution<double> pos(-200.0, 260.0), side(0.2, 300.0);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t out = 8 + rng() % 40;
    const auto crop = crop_frame(img, plan_for(side(rng), {pos(rng), pos(rng)}, out), 0);
    EXPECT_EQ(crop.height(), out);
    EXPECT_EQ(crop.width(), out);
    EXPECT_EQ(crop.channels(), 3u);
  }
}

TEST(ResizeBilinear, UpsampleStaysWithinNeighbourRange) {
  Image img(2, 2, 1);
  img.at(0, 0, 0) = 0;
  img.at(0, 1, 0) = 100;
  img.at(1, 0, 0) = 100;
  img.at(1, 1, 0) = 200;
  const auto up = resize_bilinear(img, 4, 4);
  EXPECT_EQ(up.at(0, 0, 0), 0);
  EXPECT_EQ(up.at(3, 3, 0), 200);
  // Output (1, 1) samples the source at (0.25, 0.25).
  EXPECT_EQ(up.at(1, 1, 0), 50);
}

TEST(ResizeBilinear, FloatPixels) {
  BasicImage<float> img(4, 4, 1, 0.5f);
  const auto out = resize_bilinear(img, 2, 2);
  for (float v : out.pixels()) EXPECT_FLOAT_EQ(v, 0.5f);
}
