#pragma once

// Face-size-normalized lip ROI geometry.
//
// The square side is the mean over face-detected frames of (W + H) / 8,
// multiplied by a scale factor. Each frame is centered on the lip-box
// midpoint; frames without a lip detection borrow the center of the
// temporally nearest detected frame (ties go to the earlier frame).
// Segments whose face or lip detection rate does not exceed 50% are dropped.

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "lipkit/annotations.hpp"
#include "lipkit/error.hpp"
#include "lipkit/format.hpp"
#include "lipkit/image.hpp"

namespace lipkit {

class ScaleFactor {
public:
  explicit ScaleFactor(double value) : value_(value) {
    if (!(value > 0.0) || !std::isfinite(value))
      throw ParameterError("scale factor must be a positive finite number");
  }
  double value() const noexcept { return value_; }
  friend bool operator==(const ScaleFactor&, const ScaleFactor&) = default;

private:
  double value_;
};

/// The six multi-scale factors used for context-varying lip crops.
inline std::vector<ScaleFactor> default_scales() {
  return {ScaleFactor(0.6), ScaleFactor(0.8), ScaleFactor(1.0),
          ScaleFactor(1.25), ScaleFactor(1.5), ScaleFactor(1.75)};
}

inline constexpr std::size_t kDefaultOutputSize = 112;

/// Which frames contribute to the mean face size.
enum class FaceAveraging {
  face_detected,   // every frame with a face box
  joint_detected,  // only frames with both a face and a lip box
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point2&, const Point2&) = default;
};

struct CropPlan {
  std::string segment_id;
  ScaleFactor scale{1.0};
  double side = 0.0;
  std::vector<Point2> centers;  // one per frame 0..T-1
  std::vector<bool> filled;     // true where the center was gap-filled
  std::size_t output_size = kDefaultOutputSize;
  std::string interp = "bilinear";

  friend bool operator==(const CropPlan&, const CropPlan&) = default;
};

enum class DiscardReason { face_rate_low, lip_rate_low };

inline const char* to_string(DiscardReason r) {
  return r == DiscardReason::face_rate_low ? "face_rate_low" : "lip_rate_low";
}

struct Discarded {
  DiscardReason reason;
};

using SegmentDisposition = std::variant<CropPlan, Discarded>;

inline double crop_size(const SpeakerSegment& segment, ScaleFactor scale,
                        FaceAveraging averaging = FaceAveraging::face_detected) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& f : segment.frames) {
    if (!f.face) continue;
    if (averaging == FaceAveraging::joint_detected && !f.lip) continue;
    sum += static_cast<double>(f.face->width() + f.face->height()) / 8.0;
    ++n;
  }
  if (n == 0)
    throw NoFaceDetections("segment '" + segment.segment_id + "': no face detections");
  return sum / static_cast<double>(n) * scale.value();
}

struct LipCenters {
  std::vector<Point2> centers;
  std::vector<bool> filled;
};

inline Point2 lip_midpoint(const BBox& lip) {
  return {static_cast<double>(lip.left_x + lip.right_x) / 2.0,
          static_cast<double>(lip.top_y + lip.bottom_y) / 2.0};
}

inline LipCenters lip_centers(const SpeakerSegment& segment) {
  const std::size_t t = segment.total_frames;
  constexpr auto none = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> source(t, none);
  std::vector<Point2> detected(t);
  bool any = false;
  for (const auto& f : segment.frames) {
    if (!f.lip) continue;
    source[f.frame_index] = f.frame_index;
    detected[f.frame_index] = lip_midpoint(*f.lip);
    any = true;
  }
  if (!any) throw NoLipDetections("segment '" + segment.segment_id + "': no lip detections");

  // Nearest detected frame looking backward, then forward.
  std::vector<std::size_t> prev(t, none), next(t, none);
  for (std::size_t i = 0, last = none; i < t; ++i) {
    if (source[i] != none) last = i;
    prev[i] = last;
  }
  for (std::size_t i = t, last = none; i-- > 0;) {
    if (source[i] != none) last = i;
    next[i] = last;
  }

  LipCenters out;
  out.centers.resize(t);
  out.filled.resize(t);
  for (std::size_t i = 0; i < t; ++i) {
    if (source[i] != none) {
      out.centers[i] = detected[i];
      continue;
    }
    std::size_t pick;
    if (prev[i] == none) pick = next[i];
    else if (next[i] == none) pick = prev[i];
    else pick = (i - prev[i] <= next[i] - i) ? prev[i] : next[i];
    out.centers[i] = detected[pick];
    out.filled[i] = true;
  }
  return out;
}

inline SegmentDisposition plan_crops(const SpeakerSegment& segment, ScaleFactor scale,
                                     std::size_t output_size = kDefaultOutputSize,
                                     FaceAveraging averaging = FaceAveraging::face_detected) {
  if (output_size == 0) throw ParameterError("output_size must be positive");
  const auto rates = detection_rates(segment);
  if (!(rates.face_rate > 0.5)) return Discarded{DiscardReason::face_rate_low};
  if (!(rates.lip_rate > 0.5)) return Discarded{DiscardReason::lip_rate_low};

  CropPlan plan;
  plan.segment_id = segment.segment_id;
  plan.scale = scale;
  plan.side = crop_size(segment, scale, averaging);
  auto lc = lip_centers(segment);
  plan.centers = std::move(lc.centers);
  plan.filled = std::move(lc.filled);
  plan.output_size = output_size;
  return plan;
}

/// Integer source window a plan extracts for one frame.
struct SourceWindow {
  std::int64_t x0 = 0;
  std::int64_t y0 = 0;
  std::size_t side = 0;
};

inline SourceWindow source_window(const CropPlan& plan, std::size_t frame_index) {
  if (frame_index >= plan.centers.size())
    throw IndexError("frame index " + std::to_string(frame_index) + " out of range for plan '" +
                     plan.segment_id + "' with " + std::to_string(plan.centers.size()) +
                     " frames");
  const auto side = static_cast<std::int64_t>(std::max<long long>(1, std::llround(plan.side)));
  const auto& c = plan.centers[frame_index];
  const std::int64_t cx = std::llround(c.x), cy = std::llround(c.y);
  return {cx - side / 2, cy - side / 2, static_cast<std::size_t>(side)};
}

template <class T>
BasicImage<T> crop_frame(const BasicImage<T>& image, const CropPlan& plan,
                         std::size_t frame_index) {
  if (image.empty()) throw ShapeError("crop_frame: empty image");
  const auto win = source_window(plan, frame_index);
  auto square = crop_padded(image, win.x0, win.y0, win.side);
  return resize_bilinear(square, plan.output_size, plan.output_size);
}

/// File stem for a (segment, scale) pair, e.g. `S217_001__x1.25`.
inline std::string plan_stem(const std::string& segment_id, ScaleFactor scale) {
  return segment_id + "__x" + format_decimal(scale.value());
}

inline nlohmann::ordered_json to_json(const CropPlan& p) {
  nlohmann::ordered_json centers = nlohmann::ordered_json::array();
  for (const auto& c : p.centers) centers.push_back({c.x, c.y});
  nlohmann::ordered_json filled = nlohmann::ordered_json::array();
  for (bool b : p.filled) filled.push_back(b);
  nlohmann::ordered_json j;
  j["segment_id"] = p.segment_id;
  j["scale"] = p.scale.value();
  j["side"] = p.side;
  j["output_size"] = p.output_size;
  j["interp"] = p.interp;
  j["centers"] = std::move(centers);
  j["filled"] = std::move(filled);
  return j;
}

inline CropPlan plan_from_json(const nlohmann::json& j) {
  try {
    CropPlan p;
    p.segment_id = j.at("segment_id").get<std::string>();
    p.scale = ScaleFactor(j.at("scale").get<double>());
    p.side = j.at("side").get<double>();
    p.output_size = j.at("output_size").get<std::size_t>();
    p.interp = j.value("interp", std::string("bilinear"));
    for (const auto& c : j.at("centers")) p.centers.push_back({c.at(0).get<double>(), c.at(1).get<double>()});
    for (const auto& b : j.at("filled")) p.filled.push_back(b.get<bool>());
    if (p.interp != "bilinear") throw ValidationError("unsupported interpolation '" + p.interp + "'");
    if (!(p.side > 0.0)) throw ValidationError("plan side must be positive");
    if (p.centers.size() != p.filled.size())
      throw ValidationError("plan centers/filled length mismatch");
    if (p.output_size == 0) throw ValidationError("plan output_size must be positive");
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed crop plan: ") + e.what());
  }
}

}  // namespace lipkit
