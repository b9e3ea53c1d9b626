#pragma once

// Training-time clip transforms: speed perturbation by frame resampling and
// seeded per-clip augmentation (rotation, horizontal flip, grayscale and
// brightness/contrast/saturation jitter).
//
// A clip's random draw depends only on (seed, clip_id), so clips can be
// processed in any order or in parallel and still reproduce exactly.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lipkit/error.hpp"
#include "lipkit/format.hpp"
#include "lipkit/image.hpp"

namespace lipkit {

class PerturbRate {
public:
  explicit PerturbRate(double rate) : rate_(rate) {
    if (!(rate > 0.0) || !std::isfinite(rate))
      throw ParameterError("perturbation rate must be a positive finite number");
  }
  double value() const noexcept { return rate_; }

private:
  double rate_;
};

inline std::vector<PerturbRate> default_perturb_rates() {
  return {PerturbRate(0.9), PerturbRate(1.0), PerturbRate(1.1)};
}

/// Output frame j reads source frame min(floor(j * rate), T - 1); the output
/// has round(T / rate) frames.
inline std::vector<std::size_t> resample_indices(std::size_t total_frames, PerturbRate rate) {
  if (total_frames == 0) throw ParameterError("resample_indices: total_frames must be >= 1");
  const double r = rate.value();
  const auto n = static_cast<std::size_t>(std::llround(static_cast<double>(total_frames) / r));
  std::vector<std::size_t> out(n);
  for (std::size_t j = 0; j < n; ++j) {
    // 1e-9 absorbs products like 29 * 0.01 landing just under an integer.
    const double src = std::floor(static_cast<double>(j) * r + 1e-9);
    out[j] = std::min(static_cast<std::size_t>(src), total_frames - 1);
  }
  return out;
}

/// Name of a perturbed copy, e.g. `S217_001@0.9`.
inline std::string perturbed_clip_id(std::string_view segment_id, PerturbRate rate) {
  return std::string(segment_id) + "@" + format_decimal(rate.value());
}

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct AugmentSpec {
  Range rotate_degrees{-10.0, 10.0};
  double hflip_prob = 0.5;
  double grayscale_prob = 0.2;
  Range brightness{0.8, 1.2};
  Range contrast{0.8, 1.2};
  Range saturation{0.8, 1.2};
  std::uint64_t seed = 0;

  /// Throws ParameterError on out-of-range probabilities or factor ranges.
  void validate() const {
    auto prob = [](double p, const char* name) {
      if (!(p >= 0.0 && p <= 1.0))
        throw ParameterError(std::string(name) + " must lie in [0, 1]");
    };
    auto factor = [](const Range& r, const char* name) {
      if (!(r.lo > 0.0 && r.hi >= r.lo))
        throw ParameterError(std::string(name) + " range must be positive with lo <= hi");
    };
    prob(hflip_prob, "hflip_prob");
    prob(grayscale_prob, "grayscale_prob");
    if (!(rotate_degrees.hi >= rotate_degrees.lo))
      throw ParameterError("rotate_degrees range must have lo <= hi");
    factor(brightness, "brightness");
    factor(contrast, "contrast");
    factor(saturation, "saturation");
  }
};

/// A fully resolved transform; applied identically to every frame of a clip.
struct ClipTransform {
  double angle_degrees = 0.0;
  bool hflip = false;
  bool grayscale = false;
  double brightness = 1.0;
  double contrast = 1.0;
  double saturation = 1.0;

  friend bool operator==(const ClipTransform&, const ClipTransform&) = default;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

// mt19937_64 output is fixed by the standard; the std distributions are not,
// so uniforms are built from raw bits.
class ClipRng {
public:
  ClipRng(std::uint64_t seed, std::string_view clip_id)
      : engine_(splitmix64(seed ^ splitmix64(fnv1a64(clip_id)))) {}

  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(const Range& r) { return r.lo + (r.hi - r.lo) * uniform01(); }
  bool bernoulli(double p) { return uniform01() < p; }

private:
  std::mt19937_64 engine_;
};

}  // namespace detail

inline ClipTransform sample_augment(const AugmentSpec& spec, std::string_view clip_id) {
  spec.validate();
  detail::ClipRng rng(spec.seed, clip_id);
  ClipTransform t;
  // Fixed draw order; every field consumes exactly one draw.
  t.angle_degrees = rng.uniform(spec.rotate_degrees);
  t.hflip = rng.bernoulli(spec.hflip_prob);
  t.grayscale = rng.bernoulli(spec.grayscale_prob);
  t.brightness = rng.uniform(spec.brightness);
  t.contrast = rng.uniform(spec.contrast);
  t.saturation = rng.uniform(spec.saturation);
  return t;
}

template <class T>
BasicImage<T> hflip(const BasicImage<T>& src) {
  BasicImage<T> out(src.height(), src.width(), src.channels());
  const std::size_t w = src.width();
  for (std::size_t y = 0; y < src.height(); ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t c = 0; c < src.channels(); ++c)
        out.at(y, w - 1 - x, c) = src.at(y, x, c);
  return out;
}

namespace detail {

template <class T>
double luma(const BasicImage<T>& img, std::size_t y, std::size_t x) {
  if (img.channels() < 3) return img.at(y, x, 0);
  return 0.299 * img.at(y, x, 0) + 0.587 * img.at(y, x, 1) + 0.114 * img.at(y, x, 2);
}

}  // namespace detail

/// ITU-R 601 luma written back to every channel; single-channel input is
/// returned unchanged.
template <class T>
BasicImage<T> to_grayscale(const BasicImage<T>& src) {
  if (src.channels() < 3) return src;
  BasicImage<T> out(src.height(), src.width(), src.channels());
  for (std::size_t y = 0; y < src.height(); ++y)
    for (std::size_t x = 0; x < src.width(); ++x) {
      const T v = pixel_traits<T>::from_double(detail::luma(src, y, x));
      for (std::size_t c = 0; c < src.channels(); ++c) out.at(y, x, c) = v;
    }
  return out;
}

template <class T>
BasicImage<T> adjust_brightness(const BasicImage<T>& src, double factor) {
  BasicImage<T> out = src;
  for (auto& v : out.pixels()) v = pixel_traits<T>::from_double(v * factor);
  return out;
}

/// Blends toward the mean luma of the frame.
template <class T>
BasicImage<T> adjust_contrast(const BasicImage<T>& src, double factor) {
  double mean = 0.0;
  for (std::size_t y = 0; y < src.height(); ++y)
    for (std::size_t x = 0; x < src.width(); ++x) mean += detail::luma(src, y, x);
  mean /= static_cast<double>(src.height() * src.width());
  BasicImage<T> out = src;
  for (auto& v : out.pixels()) v = pixel_traits<T>::from_double(mean + (v - mean) * factor);
  return out;
}

/// Blends toward the per-pixel luma; no-op on single-channel frames.
template <class T>
BasicImage<T> adjust_saturation(const BasicImage<T>& src, double factor) {
  if (src.channels() < 3) return src;
  BasicImage<T> out(src.height(), src.width(), src.channels());
  for (std::size_t y = 0; y < src.height(); ++y)
    for (std::size_t x = 0; x < src.width(); ++x) {
      const double g = detail::luma(src, y, x);
      for (std::size_t c = 0; c < src.channels(); ++c)
        out.at(y, x, c) = pixel_traits<T>::from_double(g + (src.at(y, x, c) - g) * factor);
    }
  return out;
}

/// Rotates counter-clockwise about the frame center; bilinear sampling,
/// zero outside the source.
template <class T>
BasicImage<T> rotate(const BasicImage<T>& src, double degrees) {
  if (degrees == 0.0) return src;
  const double rad = degrees * std::numbers::pi / 180.0;
  const double cs = std::cos(rad), sn = std::sin(rad);
  const double cx = (static_cast<double>(src.width()) - 1.0) / 2.0;
  const double cy = (static_cast<double>(src.height()) - 1.0) / 2.0;
  const auto w = static_cast<std::int64_t>(src.width());
  const auto h = static_cast<std::int64_t>(src.height());
  auto sample = [&](std::int64_t y, std::int64_t x, std::size_t c) -> double {
    if (x < 0 || y < 0 || x >= w || y >= h) return 0.0;
    return src.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x), c);
  };
  BasicImage<T> out(src.height(), src.width(), src.channels());
  for (std::size_t y = 0; y < src.height(); ++y)
    for (std::size_t x = 0; x < src.width(); ++x) {
      // Inverse map: output pixel -> source position.
      const double dx = static_cast<double>(x) - cx, dy = static_cast<double>(y) - cy;
      const double sx = cs * dx - sn * dy + cx;
      const double sy = sn * dx + cs * dy + cy;
      const double fx = std::floor(sx), fy = std::floor(sy);
      const double ax = sx - fx, ay = sy - fy;
      const auto x0 = static_cast<std::int64_t>(fx), y0 = static_cast<std::int64_t>(fy);
      for (std::size_t c = 0; c < src.channels(); ++c) {
        const double top = (1 - ax) * sample(y0, x0, c) + ax * sample(y0, x0 + 1, c);
        const double bot = (1 - ax) * sample(y0 + 1, x0, c) + ax * sample(y0 + 1, x0 + 1, c);
        out.at(y, x, c) = pixel_traits<T>::from_double((1 - ay) * top + ay * bot);
      }
    }
  return out;
}

/// Applies rotation, flip, brightness, contrast, saturation, then grayscale.
template <class T>
BasicImage<T> apply_transform(const BasicImage<T>& frame, const ClipTransform& t) {
  BasicImage<T> out = rotate(frame, t.angle_degrees);
  if (t.hflip) out = hflip(out);
  if (t.brightness != 1.0) out = adjust_brightness(out, t.brightness);
  if (t.contrast != 1.0) out = adjust_contrast(out, t.contrast);
  if (t.saturation != 1.0) out = adjust_saturation(out, t.saturation);
  if (t.grayscale) out = to_grayscale(out);
  return out;
}

template <class T>
std::vector<BasicImage<T>> apply_augment(const std::vector<BasicImage<T>>& clip,
                                         const ClipTransform& t) {
  if (clip.empty()) throw ShapeError("apply_augment: empty clip");
  for (const auto& f : clip) {
    if (f.empty() || !f.same_shape(clip.front()))
      throw ShapeError("apply_augment: all frames must share one non-empty shape");
  }
  std::vector<BasicImage<T>> out;
  out.reserve(clip.size());
  for (const auto& f : clip) out.push_back(apply_transform(f, t));
  return out;
}

}  // namespace lipkit
