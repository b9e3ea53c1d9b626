#pragma once

// Pipeline configuration, read from TOML or JSON (chosen by extension).
// Both formats share one key layout:
//
//   scales = [0.6, 0.8, 1.0, 1.25, 1.5, 1.75]
//   output_size = 112
//   perturb_rates = [0.9, 1.0, 1.1]
//   rover_alpha = 1.0
//   null_confidence = 0.7
//   face_averaging = "face_detected"     # or "joint_detected"
//   seed = 0
//   jobs = 1
//   frame_format = "png"                 # extension probed first when reading frames
//   output_format = "png"                # "png" or "rgb"
//   [raw_frame]  width = 0  height = 0   # size of headerless .rgb frames
//   [augment]    rotate_degrees = [-10.0, 10.0]  hflip_prob = 0.5
//                grayscale_prob = 0.2  brightness = [0.8, 1.2]
//                contrast = [0.8, 1.2]  saturation = [0.8, 1.2]
//   [paths]      annotations, frames, plans, crops, output
//
// Every key is optional; unknown keys are rejected.

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#define TOML_EXCEPTIONS 1
#include "tomlplusplus/toml.hpp"

#include "lipkit/augment.hpp"
#include "lipkit/error.hpp"
#include "lipkit/image_io.hpp"
#include "lipkit/roi.hpp"
#include "lipkit/rover.hpp"
#include "lipkit/transcripts.hpp"

namespace lipkit {

struct PipelinePaths {
  std::string annotations;
  std::string frames;
  std::string plans;
  std::string crops;
  std::string output;
};

struct PipelineConfig {
  std::vector<ScaleFactor> scales = default_scales();
  std::size_t output_size = kDefaultOutputSize;
  std::vector<PerturbRate> perturb_rates = default_perturb_rates();
  AugmentSpec augment;
  double rover_alpha = 1.0;
  double null_confidence = kDefaultNullConfidence;
  FaceAveraging face_averaging = FaceAveraging::face_detected;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  ImageFormat frame_format = ImageFormat::png;
  ImageFormat output_format = ImageFormat::png;
  RawFrameShape raw_frame;
  PipelinePaths paths;

  void validate() const {
    if (scales.empty()) throw ValidationError("config: scales must be non-empty");
    if (output_size < 8) throw ValidationError("config: output_size must be >= 8");
    if (perturb_rates.empty()) throw ValidationError("config: perturb_rates must be non-empty");
    if (!(rover_alpha >= 0.0 && rover_alpha <= 1.0))
      throw ValidationError("config: rover_alpha must lie in [0, 1]");
    if (!(null_confidence >= 0.0 && null_confidence <= 1.0))
      throw ValidationError("config: null_confidence must lie in [0, 1]");
    try {
      augment.validate();
    } catch (const ParameterError& e) {
      throw ValidationError(std::string("config: augment: ") + e.what());
    }
  }
};

namespace detail {

inline nlohmann::json toml_to_json(const toml::node& node) {
  if (auto t = node.as_table()) {
    nlohmann::json obj = nlohmann::json::object();
    for (const auto& [k, v] : *t) obj[std::string(k.str())] = toml_to_json(v);
    return obj;
  }
  if (auto a = node.as_array()) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& v : *a) arr.push_back(toml_to_json(v));
    return arr;
  }
  if (auto v = node.as_string()) return v->get();
  if (auto v = node.as_integer()) return v->get();
  if (auto v = node.as_floating_point()) return v->get();
  if (auto v = node.as_boolean()) return v->get();
  throw ParseError("config: unsupported TOML value type (dates and times are not accepted)");
}

inline Range read_range(const nlohmann::json& j, const std::string& key) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ParseError("config: " + key + " must be a [lo, hi] pair of numbers");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline void reject_unknown(const nlohmann::json& obj, const std::set<std::string>& known,
                           const std::string& where) {
  for (const auto& [k, v] : obj.items())
    if (!known.count(k)) throw ValidationError("config: unknown key '" + where + k + "'");
}

inline ImageFormat read_format(const nlohmann::json& j, const std::string& key) {
  const auto s = j.get<std::string>();
  if (s == "png") return ImageFormat::png;
  if (s == "rgb") return ImageFormat::raw_rgb;
  throw ValidationError("config: " + key + " must be \"png\" or \"rgb\"");
}

}  // namespace detail

inline PipelineConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("config: expected a table/object at top level");
  detail::reject_unknown(j,
                         {"scales", "output_size", "perturb_rates", "augment", "rover_alpha",
                          "null_confidence", "face_averaging", "seed", "jobs", "frame_format",
                          "output_format", "raw_frame", "paths"},
                         "");
  PipelineConfig c;
  try {
    if (j.contains("scales")) {
      c.scales.clear();
      for (const auto& v : j["scales"]) c.scales.emplace_back(v.get<double>());
    }
    if (j.contains("output_size")) c.output_size = j["output_size"].get<std::size_t>();
    if (j.contains("perturb_rates")) {
      c.perturb_rates.clear();
      for (const auto& v : j["perturb_rates"]) c.perturb_rates.emplace_back(v.get<double>());
    }
    if (j.contains("rover_alpha")) c.rover_alpha = j["rover_alpha"].get<double>();
    if (j.contains("null_confidence")) c.null_confidence = j["null_confidence"].get<double>();
    if (j.contains("face_averaging")) {
      const auto s = j["face_averaging"].get<std::string>();
      if (s == "face_detected") c.face_averaging = FaceAveraging::face_detected;
      else if (s == "joint_detected") c.face_averaging = FaceAveraging::joint_detected;
      else throw ValidationError("config: face_averaging must be face_detected or joint_detected");
    }
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("jobs")) c.jobs = j["jobs"].get<std::size_t>();
    if (j.contains("frame_format")) c.frame_format = detail::read_format(j["frame_format"], "frame_format");
    if (j.contains("output_format")) c.output_format = detail::read_format(j["output_format"], "output_format");
    if (j.contains("raw_frame")) {
      const auto& r = j["raw_frame"];
      detail::reject_unknown(r, {"width", "height"}, "raw_frame.");
      c.raw_frame.width = r.value("width", std::size_t{0});
      c.raw_frame.height = r.value("height", std::size_t{0});
    }
    c.augment.seed = c.seed;
    if (j.contains("augment")) {
      const auto& a = j["augment"];
      detail::reject_unknown(a,
                             {"rotate_degrees", "hflip_prob", "grayscale_prob", "brightness",
                              "contrast", "saturation", "seed"},
                             "augment.");
      if (a.contains("rotate_degrees")) c.augment.rotate_degrees = detail::read_range(a["rotate_degrees"], "augment.rotate_degrees");
      if (a.contains("hflip_prob")) c.augment.hflip_prob = a["hflip_prob"].get<double>();
      if (a.contains("grayscale_prob")) c.augment.grayscale_prob = a["grayscale_prob"].get<double>();
      if (a.contains("brightness")) c.augment.brightness = detail::read_range(a["brightness"], "augment.brightness");
      if (a.contains("contrast")) c.augment.contrast = detail::read_range(a["contrast"], "augment.contrast");
      if (a.contains("saturation")) c.augment.saturation = detail::read_range(a["saturation"], "augment.saturation");
      if (a.contains("seed")) c.augment.seed = a["seed"].get<std::uint64_t>();
    }
    if (j.contains("paths")) {
      const auto& p = j["paths"];
      detail::reject_unknown(p, {"annotations", "frames", "plans", "crops", "output"}, "paths.");
      c.paths.annotations = p.value("annotations", std::string());
      c.paths.frames = p.value("frames", std::string());
      c.paths.plans = p.value("plans", std::string());
      c.paths.crops = p.value("crops", std::string());
      c.paths.output = p.value("output", std::string());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("config: ") + e.what());
  } catch (const ParameterError& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

inline PipelineConfig parse_config_toml(std::string_view text, const std::string& origin = "<config>") {
  try {
    const auto table = toml::parse(text, origin);
    return config_from_json(detail::toml_to_json(table));
  } catch (const toml::parse_error& e) {
    throw ParseError(origin + ": " + std::string(e.description()),
                     static_cast<std::size_t>(e.source().begin.line));
  }
}

inline PipelineConfig parse_config_json(std::string_view text, const std::string& origin = "<config>") {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(origin + ": " + e.what());
  }
  return config_from_json(j);
}

inline PipelineConfig load_config(const std::string& path) {
  const auto text = read_text_file(path);
  const auto ext = std::filesystem::path(path).extension().string();
  if (ext == ".toml") return parse_config_toml(text, path);
  if (ext == ".json") return parse_config_json(text, path);
  throw ParseError("config " + path + ": expected a .toml or .json file");
}

}  // namespace lipkit
