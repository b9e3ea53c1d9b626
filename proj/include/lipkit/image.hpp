#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "lipkit/error.hpp"

namespace lipkit {

template <class T>
struct pixel_traits;

template <>
struct pixel_traits<std::uint8_t> {
  static constexpr double max_value = 255.0;
  static std::uint8_t from_double(double v) noexcept {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, max_value)));
  }
};

template <>
struct pixel_traits<float> {
  static constexpr double max_value = 1.0;
  static float from_double(double v) noexcept {
    return static_cast<float>(std::clamp(v, 0.0, max_value));
  }
};

/// Interleaved (row-major, HWC) image with 1 or 3 channels.
template <class T>
class BasicImage {
public:
  using value_type = T;

  BasicImage() = default;
  BasicImage(std::size_t height, std::size_t width, std::size_t channels, T fill = T{})
      : height_(height), width_(width), channels_(channels),
        data_(height * width * channels, fill) {}

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t channels() const noexcept { return channels_; }
  bool empty() const noexcept { return data_.empty(); }

  T& at(std::size_t y, std::size_t x, std::size_t c) noexcept {
    return data_[(y * width_ + x) * channels_ + c];
  }
  const T& at(std::size_t y, std::size_t x, std::size_t c) const noexcept {
    return data_[(y * width_ + x) * channels_ + c];
  }

  std::span<T> pixels() noexcept { return data_; }
  std::span<const T> pixels() const noexcept { return data_; }

  bool same_shape(const BasicImage& o) const noexcept {
    return height_ == o.height_ && width_ == o.width_ && channels_ == o.channels_;
  }

  friend bool operator==(const BasicImage&, const BasicImage&) = default;

private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::size_t channels_ = 0;
  std::vector<T> data_;
};

using Image = BasicImage<std::uint8_t>;

/// Copies the `side`x`side` window whose top-left corner is (x0, y0).
/// Pixels outside the source are zero.
template <class T>
BasicImage<T> crop_padded(const BasicImage<T>& src, std::int64_t x0, std::int64_t y0,
                          std::size_t side) {
  BasicImage<T> out(side, side, src.channels());
  const auto h = static_cast<std::int64_t>(src.height());
  const auto w = static_cast<std::int64_t>(src.width());
  const auto s = static_cast<std::int64_t>(side);
  const std::int64_t ys = std::max<std::int64_t>(0, -y0), ye = std::min(s, h - y0);
  const std::int64_t xs = std::max<std::int64_t>(0, -x0), xe = std::min(s, w - x0);
  for (std::int64_t y = ys; y < ye; ++y)
    for (std::int64_t x = xs; x < xe; ++x)
      for (std::size_t c = 0; c < src.channels(); ++c)
        out.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x), c) =
            src.at(static_cast<std::size_t>(y0 + y), static_cast<std::size_t>(x0 + x), c);
  return out;
}

namespace detail {

struct Tap {
  std::size_t lo, hi;
  double frac;
};

// Half-pixel-center mapping, source coordinate clamped to the edge.
inline std::vector<Tap> bilinear_taps(std::size_t in, std::size_t out) {
  std::vector<Tap> taps(out);
  const double ratio = static_cast<double>(in) / static_cast<double>(out);
  for (std::size_t i = 0; i < out; ++i) {
    double s = (static_cast<double>(i) + 0.5) * ratio - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(in - 1));
    const auto lo = static_cast<std::size_t>(std::floor(s));
    taps[i] = {lo, std::min(lo + 1, in - 1), s - static_cast<double>(lo)};
  }
  return taps;
}

}  // namespace detail

template <class T>
BasicImage<T> resize_bilinear(const BasicImage<T>& src, std::size_t out_h, std::size_t out_w) {
  if (src.empty()) throw ShapeError("resize_bilinear: empty source image");
  if (out_h == 0 || out_w == 0) throw ShapeError("resize_bilinear: empty target size");
  if (src.height() == out_h && src.width() == out_w) return src;
  const auto ty = detail::bilinear_taps(src.height(), out_h);
  const auto tx = detail::bilinear_taps(src.width(), out_w);
  BasicImage<T> out(out_h, out_w, src.channels());
  for (std::size_t y = 0; y < out_h; ++y) {
    const auto& a = ty[y];
    for (std::size_t x = 0; x < out_w; ++x) {
      const auto& b = tx[x];
      for (std::size_t c = 0; c < src.channels(); ++c) {
        const double top = (1.0 - b.frac) * src.at(a.lo, b.lo, c) + b.frac * src.at(a.lo, b.hi, c);
        const double bot = (1.0 - b.frac) * src.at(a.hi, b.lo, c) + b.frac * src.at(a.hi, b.hi, c);
        out.at(y, x, c) = pixel_traits<T>::from_double((1.0 - a.frac) * top + a.frac * bot);
      }
    }
  }
  return out;
}

}  // namespace lipkit
