#pragma once

// Per-frame face/lip annotation format and detection statistics.
//
// Document schema:
//   {"segments":[{"segment_id":str,"speaker_id":str,"total_frames":int,
//                 "fps":number,"transcript":str|null,
//                 "frames":[{"i":int,"face":[lx,ty,rx,by]|null,
//                            "lip":[lx,ty,rx,by]|null}]}]}
//
// Frames absent from "frames" count as undetected for both face and lip.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "lipkit/error.hpp"

namespace lipkit {

/// Axis-aligned box in integer pixel coordinates (top-left, bottom-right).
struct BBox {
  std::int64_t left_x = 0;
  std::int64_t top_y = 0;
  std::int64_t right_x = 0;
  std::int64_t bottom_y = 0;

  std::int64_t width() const noexcept { return right_x - left_x; }
  std::int64_t height() const noexcept { return bottom_y - top_y; }
  bool valid() const noexcept { return width() > 0 && height() > 0; }

  friend bool operator==(const BBox&, const BBox&) = default;
};

struct FrameAnnotation {
  std::size_t frame_index = 0;
  std::optional<BBox> face;
  std::optional<BBox> lip;

  friend bool operator==(const FrameAnnotation&, const FrameAnnotation&) = default;
};

struct SpeakerSegment {
  std::string segment_id;
  std::string speaker_id;
  std::size_t total_frames = 0;
  double fps = 25.0;
  std::vector<FrameAnnotation> frames;  // strictly ascending frame_index
  std::optional<std::string> transcript;

  friend bool operator==(const SpeakerSegment&, const SpeakerSegment&) = default;
};

/// Result of parsing one annotation document. `notes` carries non-fatal
/// findings such as re-sorted frame lists.
struct AnnotationDocument {
  std::vector<SpeakerSegment> segments;
  std::vector<std::string> notes;
};

struct DetectionRates {
  double face_rate = 0.0;
  double lip_rate = 0.0;
  double joint_rate = 0.0;
};

struct DetectionCounts {
  std::size_t face = 0;
  std::size_t lip = 0;
  std::size_t joint = 0;
};

inline DetectionCounts detection_counts(const SpeakerSegment& segment) {
  DetectionCounts c;
  for (const auto& f : segment.frames) {
    c.face += f.face.has_value();
    c.lip += f.lip.has_value();
    c.joint += (f.face && f.lip);
  }
  return c;
}

inline DetectionRates detection_rates(const SpeakerSegment& segment) {
  const auto c = detection_counts(segment);
  const auto t = static_cast<double>(segment.total_frames);
  if (segment.total_frames == 0) return {};
  return {c.face / t, c.lip / t, c.joint / t};
}

/// Throws ValidationError if the segment breaks a structural invariant.
inline void validate(const SpeakerSegment& s) {
  const std::string where = "segment '" + s.segment_id + "'";
  if (s.total_frames < 1) throw ValidationError(where + ": total_frames must be >= 1");
  if (!(s.fps > 0.0)) throw ValidationError(where + ": fps must be > 0");
  for (std::size_t k = 0; k < s.frames.size(); ++k) {
    const auto& f = s.frames[k];
    if (f.frame_index >= s.total_frames)
      throw ValidationError(where + ": frame " + std::to_string(f.frame_index) +
                            " outside [0, total_frames)");
    if (k > 0 && s.frames[k - 1].frame_index >= f.frame_index)
      throw ValidationError(where + ": frames not strictly ascending at index " +
                            std::to_string(f.frame_index));
    if (f.face && !f.face->valid())
      throw ValidationError(where + ": degenerate face box at frame " +
                            std::to_string(f.frame_index));
    if (f.lip && !f.lip->valid())
      throw ValidationError(where + ": degenerate lip box at frame " +
                            std::to_string(f.frame_index));
  }
}

namespace detail {

inline std::size_t line_of_offset(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(
                 std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

inline std::optional<BBox> read_box(const nlohmann::json& frame, const char* key,
                                    const std::string& path) {
  auto it = frame.find(key);
  if (it == frame.end() || it->is_null()) return std::nullopt;
  const std::string field = path + "." + key;
  if (!it->is_array() || it->size() != 4)
    throw ParseError("field " + field + ": expected [lx,ty,rx,by] or null");
  std::int64_t v[4];
  for (std::size_t k = 0; k < 4; ++k) {
    const auto& e = (*it)[k];
    if (!e.is_number_integer())
      throw ParseError("field " + field + "[" + std::to_string(k) + "]: expected integer");
    v[k] = e.get<std::int64_t>();
  }
  BBox box{v[0], v[1], v[2], v[3]};
  if (!box.valid())
    throw ValidationError("field " + field + ": degenerate box (requires rx > lx and by > ty)");
  return box;
}

inline SpeakerSegment read_segment(const nlohmann::json& js, const std::string& path,
                                   std::vector<std::string>& notes) {
  if (!js.is_object()) throw ParseError("field " + path + ": expected object");
  SpeakerSegment s;

  auto string_field = [&](const char* key) {
    auto it = js.find(key);
    if (it == js.end()) throw ValidationError("field " + path + "." + key + ": missing");
    if (!it->is_string()) throw ParseError("field " + path + "." + key + ": expected string");
    return it->get<std::string>();
  };
  s.segment_id = string_field("segment_id");
  s.speaker_id = string_field("speaker_id");

  auto t = js.find("total_frames");
  if (t == js.end() || t->is_null())
    throw ValidationError("field " + path + ".total_frames: missing");
  if (!t->is_number_integer()) throw ParseError("field " + path + ".total_frames: expected integer");
  if (t->get<std::int64_t>() < 1)
    throw ValidationError("field " + path + ".total_frames: must be >= 1");
  s.total_frames = t->get<std::size_t>();

  if (auto fps = js.find("fps"); fps != js.end() && !fps->is_null()) {
    if (!fps->is_number()) throw ParseError("field " + path + ".fps: expected number");
    s.fps = fps->get<double>();
    if (!(s.fps > 0.0)) throw ValidationError("field " + path + ".fps: must be > 0");
  }

  if (auto tr = js.find("transcript"); tr != js.end() && !tr->is_null()) {
    if (!tr->is_string()) throw ParseError("field " + path + ".transcript: expected string or null");
    s.transcript = tr->get<std::string>();
  }

  if (auto frames = js.find("frames"); frames != js.end() && !frames->is_null()) {
    if (!frames->is_array()) throw ParseError("field " + path + ".frames: expected array");
    s.frames.reserve(frames->size());
    for (std::size_t k = 0; k < frames->size(); ++k) {
      const auto& fj = (*frames)[k];
      const std::string fpath = path + ".frames[" + std::to_string(k) + "]";
      if (!fj.is_object()) throw ParseError("field " + fpath + ": expected object");
      auto i = fj.find("i");
      if (i == fj.end() || !i->is_number_integer())
        throw ParseError("field " + fpath + ".i: expected integer");
      if (i->get<std::int64_t>() < 0 ||
          i->get<std::uint64_t>() >= s.total_frames)
        throw ValidationError("field " + fpath + ".i: frame index " + i->dump() +
                              " outside [0, total_frames)");
      FrameAnnotation f;
      f.frame_index = i->get<std::size_t>();
      f.face = read_box(fj, "face", fpath);
      f.lip = read_box(fj, "lip", fpath);
      s.frames.push_back(f);
    }
  }

  auto by_index = [](const FrameAnnotation& a, const FrameAnnotation& b) {
    return a.frame_index < b.frame_index;
  };
  if (!std::is_sorted(s.frames.begin(), s.frames.end(), by_index)) {
    std::stable_sort(s.frames.begin(), s.frames.end(), by_index);
    notes.push_back("segment '" + s.segment_id + "': frames out of order, re-sorted");
  }
  for (std::size_t k = 1; k < s.frames.size(); ++k) {
    if (s.frames[k - 1].frame_index == s.frames[k].frame_index)
      throw ValidationError("segment '" + s.segment_id + "': duplicate frame_index " +
                            std::to_string(s.frames[k].frame_index));
  }
  validate(s);
  return s;
}

inline nlohmann::json box_json(const std::optional<BBox>& b) {
  if (!b) return nullptr;
  return nlohmann::json::array({b->left_x, b->top_y, b->right_x, b->bottom_y});
}

}  // namespace detail

/// Parses an annotation document. Unknown fields are ignored.
inline AnnotationDocument parse_annotations(std::string_view text) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed annotation document: ") + e.what(),
                     detail::line_of_offset(text, e.byte == 0 ? 0 : e.byte - 1));
  }
  if (!root.is_object()) throw ParseError("annotation document: expected top-level object", 1);
  auto segs = root.find("segments");
  if (segs == root.end()) throw ParseError("field segments: missing");
  if (!segs->is_array()) throw ParseError("field segments: expected array");

  AnnotationDocument doc;
  doc.segments.reserve(segs->size());
  for (std::size_t k = 0; k < segs->size(); ++k)
    doc.segments.push_back(
        detail::read_segment((*segs)[k], "segments[" + std::to_string(k) + "]", doc.notes));
  return doc;
}

inline AnnotationDocument load_annotations(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read annotation file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_annotations(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

inline nlohmann::json to_json(const SpeakerSegment& s) {
  nlohmann::json frames = nlohmann::json::array();
  for (const auto& f : s.frames)
    frames.push_back({{"i", f.frame_index},
                      {"face", detail::box_json(f.face)},
                      {"lip", detail::box_json(f.lip)}});
  return {{"segment_id", s.segment_id},
          {"speaker_id", s.speaker_id},
          {"total_frames", s.total_frames},
          {"fps", s.fps},
          {"transcript", s.transcript ? nlohmann::json(*s.transcript) : nlohmann::json(nullptr)},
          {"frames", std::move(frames)}};
}

inline std::string serialize_annotations(const std::vector<SpeakerSegment>& segments) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& s : segments) arr.push_back(to_json(s));
  return nlohmann::json{{"segments", std::move(arr)}}.dump(1);
}

}  // namespace lipkit
