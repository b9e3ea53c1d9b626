#pragma once

// Batch commands behind the `lipkit` CLI: plan -> crop -> perturb/augment for
// training data, score/rover for recognizer output.
//
// Every command processes independent units (segments, clips, utterances) on
// a worker pool, writes each output atomically and reports through a manifest
// sorted by id. A failing unit is recorded and the batch continues.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "lipkit/annotations.hpp"
#include "lipkit/augment.hpp"
#include "lipkit/config.hpp"
#include "lipkit/error.hpp"
#include "lipkit/image_io.hpp"
#include "lipkit/parallel.hpp"
#include "lipkit/roi.hpp"
#include "lipkit/rover.hpp"
#include "lipkit/scoring.hpp"
#include "lipkit/transcripts.hpp"

namespace lipkit {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitPartial = 2,  // also used for warnings (nothing to do / nothing survived)
  kExitTotal = 3,
};

struct CommandResult {
  int exit_code = kExitOk;
  std::vector<std::string> messages;  // diagnostics for stderr
};

namespace detail {

inline std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

inline std::string frame_name(std::size_t i, ImageFormat fmt) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu", i);
  return buf + extension_for(fmt);
}

inline std::vector<fs::path> sorted_entries(const fs::path& dir, bool directories) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw IoError("not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (directories ? e.is_directory() : e.is_regular_file()) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline std::vector<fs::path> frame_files(const fs::path& clip_dir) {
  std::vector<fs::path> out;
  for (auto& p : sorted_entries(clip_dir, false))
    if (format_from_path(p)) out.push_back(std::move(p));
  return out;
}

/// Output directory staged under `<final>.tmp` and renamed into place.
class StagedDir {
public:
  explicit StagedDir(fs::path final_dir) : final_(std::move(final_dir)) {
    tmp_ = final_;
    tmp_ += ".tmp";
    fs::remove_all(tmp_);
    fs::create_directories(tmp_);
  }
  StagedDir(const StagedDir&) = delete;
  StagedDir& operator=(const StagedDir&) = delete;
  ~StagedDir() {
    if (!committed_) {
      std::error_code ec;
      fs::remove_all(tmp_, ec);
    }
  }
  const fs::path& path() const noexcept { return tmp_; }
  void commit() {
    fs::remove_all(final_);
    fs::rename(tmp_, final_);
    committed_ = true;
  }

private:
  fs::path final_, tmp_;
  bool committed_ = false;
};

inline int batch_exit_code(std::size_t ok, std::size_t failed) {
  if (failed == 0) return ok == 0 ? kExitPartial : kExitOk;
  return ok == 0 ? kExitTotal : kExitPartial;
}

}  // namespace detail

// ---------------------------------------------------------------- plan

struct PlanRow {
  std::string segment_id;
  std::string speaker_id;
  std::string status;  // planned | discarded
  std::string reason;  // "-" when planned
  std::size_t total_frames = 0;
  DetectionRates rates;
  std::size_t plans = 0;
};

inline std::string format_plan_manifest(const std::vector<PlanRow>& rows) {
  std::string out = "segment_id\tspeaker_id\tstatus\treason\ttotal_frames\tface_rate\tlip_rate\tjoint_rate\tplans\n";
  for (const auto& r : rows)
    out += r.segment_id + "\t" + r.speaker_id + "\t" + r.status + "\t" + r.reason + "\t" +
           std::to_string(r.total_frames) + "\t" + detail::fixed6(r.rates.face_rate) + "\t" +
           detail::fixed6(r.rates.lip_rate) + "\t" + detail::fixed6(r.rates.joint_rate) + "\t" +
           std::to_string(r.plans) + "\n";
  return out;
}

/// Writes `<segment_id>__x<scale>.json` per surviving (segment, scale) and
/// `manifest.tsv` into `plans_dir`.
inline CommandResult cmd_plan(const std::vector<fs::path>& annotation_files, const fs::path& plans_dir,
                              const PipelineConfig& config) {
  CommandResult result;
  std::vector<SpeakerSegment> segments;
  std::set<std::string> seen;
  for (const auto& path : annotation_files) {
    auto doc = load_annotations(path.string());
    for (auto& n : doc.notes) result.messages.push_back(path.string() + ": " + n);
    for (auto& s : doc.segments) {
      if (!seen.insert(s.segment_id).second)
        throw ValidationError(path.string() + ": duplicate segment_id '" + s.segment_id + "'");
      segments.push_back(std::move(s));
    }
  }
  fs::create_directories(plans_dir);

  std::vector<PlanRow> rows(segments.size());
  parallel_for(segments.size(), config.jobs, [&](std::size_t k) {
    const auto& seg = segments[k];
    auto& row = rows[k];
    row.segment_id = seg.segment_id;
    row.speaker_id = seg.speaker_id;
    row.total_frames = seg.total_frames;
    row.rates = detection_rates(seg);
    row.status = "planned";
    row.reason = "-";
    for (const auto& scale : config.scales) {
      auto disp = plan_crops(seg, scale, config.output_size, config.face_averaging);
      if (auto* d = std::get_if<Discarded>(&disp)) {
        row.status = "discarded";
        row.reason = to_string(d->reason);
        row.plans = 0;
        break;
      }
      const auto& plan = std::get<CropPlan>(disp);
      write_text_atomic(plans_dir / (plan_stem(seg.segment_id, scale) + ".json"),
                        to_json(plan).dump(1) + "\n");
      ++row.plans;
    }
  });

  std::sort(rows.begin(), rows.end(),
            [](const PlanRow& a, const PlanRow& b) { return a.segment_id < b.segment_id; });
  write_text_atomic(plans_dir / "manifest.tsv", format_plan_manifest(rows));

  const auto planned = std::count_if(rows.begin(), rows.end(),
                                     [](const PlanRow& r) { return r.status == "planned"; });
  if (planned == 0) {
    result.exit_code = kExitPartial;
    result.messages.push_back("warning: no segment survived the detection-rate filter");
  }
  return result;
}

// ---------------------------------------------------------------- crop

struct CropRow {
  std::string clip_id;
  std::string segment_id;
  std::string scale;
  std::string status;  // ok | failed
  std::size_t frames = 0;
  std::size_t filled = 0;
  std::string detail;
};

inline std::string format_crop_manifest(const std::vector<CropRow>& rows) {
  std::string out = "clip_id\tsegment_id\tscale\tstatus\tframes\tfilled\tdetail\n";
  for (const auto& r : rows)
    out += r.clip_id + "\t" + r.segment_id + "\t" + r.scale + "\t" + r.status + "\t" +
           std::to_string(r.frames) + "\t" + std::to_string(r.filled) + "\t" + r.detail + "\n";
  return out;
}

/// Source frames live at `<frames_dir>/<segment_id>/<index:06d>.{png,rgb}`.
/// Crops go to `<crops_dir>/<plan stem>/<index:06d>.<output ext>`.
inline CommandResult cmd_crop(const fs::path& frames_dir, const fs::path& plans_dir,
                              const fs::path& crops_dir, const PipelineConfig& config) {
  CommandResult result;
  std::vector<fs::path> plan_files;
  for (auto& p : detail::sorted_entries(plans_dir, false))
    if (p.extension() == ".json") plan_files.push_back(std::move(p));
  fs::create_directories(crops_dir);

  const ImageFormat alt =
      config.frame_format == ImageFormat::png ? ImageFormat::raw_rgb : ImageFormat::png;
  std::vector<CropRow> rows(plan_files.size());
  parallel_for(plan_files.size(), config.jobs, [&](std::size_t k) {
    auto& row = rows[k];
    row.clip_id = plan_files[k].stem().string();
    try {
      const auto plan = plan_from_json(nlohmann::json::parse(read_text_file(plan_files[k].string())));
      row.segment_id = plan.segment_id;
      row.scale = format_decimal(plan.scale.value());
      row.clip_id = plan_stem(plan.segment_id, plan.scale);
      row.filled = static_cast<std::size_t>(std::count(plan.filled.begin(), plan.filled.end(), true));
      detail::StagedDir out(crops_dir / row.clip_id);
      for (std::size_t i = 0; i < plan.centers.size(); ++i) {
        const fs::path dir = frames_dir / plan.segment_id;
        fs::path src = dir / detail::frame_name(i, config.frame_format);
        if (!fs::exists(src)) src = dir / detail::frame_name(i, alt);
        if (!fs::exists(src))
          throw IoError("missing frame " + std::to_string(i) + ": " +
                        (dir / detail::frame_name(i, config.frame_format)).string());
        const Image crop = crop_frame(read_image(src, config.raw_frame), plan, i);
        write_image(out.path() / detail::frame_name(i, config.output_format), crop);
      }
      out.commit();
      row.frames = plan.centers.size();
      row.status = "ok";
      row.detail = "-";
    } catch (const std::exception& e) {
      row.status = "failed";
      row.frames = 0;
      row.detail = e.what();
    }
  });

  std::sort(rows.begin(), rows.end(),
            [](const CropRow& a, const CropRow& b) { return a.clip_id < b.clip_id; });
  write_text_atomic(crops_dir / "manifest.tsv", format_crop_manifest(rows));

  std::size_t ok = 0, failed = 0;
  for (const auto& r : rows) {
    if (r.status == "ok") ++ok;
    else {
      ++failed;
      result.messages.push_back("crop " + r.clip_id + " failed: " + r.detail);
    }
  }
  if (rows.empty()) result.messages.push_back("warning: no crop plans found in " + plans_dir.string());
  result.exit_code = detail::batch_exit_code(ok, failed);
  return result;
}

// ---------------------------------------------------------------- perturb

struct PerturbRow {
  std::string clip_id;
  std::string source;
  std::string rate;
  std::size_t frames_in = 0;
  std::size_t frames_out = 0;
  std::string status;
  std::string detail;
};

inline std::string format_perturb_manifest(const std::vector<PerturbRow>& rows) {
  std::string out = "clip_id\tsource\trate\tframes_in\tframes_out\tstatus\tdetail\n";
  for (const auto& r : rows)
    out += r.clip_id + "\t" + r.source + "\t" + r.rate + "\t" + std::to_string(r.frames_in) + "\t" +
           std::to_string(r.frames_out) + "\t" + r.status + "\t" + r.detail + "\n";
  return out;
}

/// For every clip directory and rate, writes `<clip>@<rate>/` holding the
/// resampled frame files (byte copies of the selected source frames).
inline CommandResult cmd_perturb(const fs::path& clips_dir, const fs::path& out_dir,
                                 const PipelineConfig& config) {
  CommandResult result;
  const auto clips = detail::sorted_entries(clips_dir, true);
  fs::create_directories(out_dir);
  const std::size_t nr = config.perturb_rates.size();
  std::vector<PerturbRow> rows(clips.size() * nr);
  parallel_for(rows.size(), config.jobs, [&](std::size_t k) {
    const auto& clip = clips[k / nr];
    const auto rate = config.perturb_rates[k % nr];
    auto& row = rows[k];
    row.source = clip.filename().string();
    row.rate = format_decimal(rate.value());
    row.clip_id = perturbed_clip_id(row.source, rate);
    try {
      const auto frames = detail::frame_files(clip);
      row.frames_in = frames.size();
      if (frames.empty()) throw IoError("no frame images in " + clip.string());
      const auto idx = resample_indices(frames.size(), rate);
      detail::StagedDir out(out_dir / row.clip_id);
      for (std::size_t j = 0; j < idx.size(); ++j) {
        const auto fmt = *format_from_path(frames[idx[j]]);
        fs::copy_file(frames[idx[j]], out.path() / detail::frame_name(j, fmt),
                      fs::copy_options::overwrite_existing);
      }
      out.commit();
      row.frames_out = idx.size();
      row.status = "ok";
      row.detail = "-";
    } catch (const std::exception& e) {
      row.status = "failed";
      row.detail = e.what();
    }
  });
  std::sort(rows.begin(), rows.end(),
            [](const PerturbRow& a, const PerturbRow& b) { return a.clip_id < b.clip_id; });
  write_text_atomic(out_dir / "manifest.tsv", format_perturb_manifest(rows));

  std::size_t ok = 0, failed = 0;
  for (const auto& r : rows) {
    if (r.status == "ok") ++ok;
    else {
      ++failed;
      result.messages.push_back("perturb " + r.clip_id + " failed: " + r.detail);
    }
  }
  result.exit_code = detail::batch_exit_code(ok, failed);
  return result;
}

// ---------------------------------------------------------------- augment

struct AugmentRow {
  std::string clip_id;
  ClipTransform transform;
  std::size_t frames = 0;
  std::string status;
  std::string detail;
};

inline std::string format_augment_manifest(const std::vector<AugmentRow>& rows) {
  std::string out = "clip_id\tangle\thflip\tgrayscale\tbrightness\tcontrast\tsaturation\tframes\tstatus\tdetail\n";
  for (const auto& r : rows) {
    const auto& t = r.transform;
    out += r.clip_id + "\t" + detail::fixed6(t.angle_degrees) + "\t" + (t.hflip ? "1" : "0") + "\t" +
           (t.grayscale ? "1" : "0") + "\t" + detail::fixed6(t.brightness) + "\t" +
           detail::fixed6(t.contrast) + "\t" + detail::fixed6(t.saturation) + "\t" +
           std::to_string(r.frames) + "\t" + r.status + "\t" + r.detail + "\n";
  }
  return out;
}

/// One seeded transform per clip directory (keyed by its name), applied to
/// all of its frames.
inline CommandResult cmd_augment(const fs::path& clips_dir, const fs::path& out_dir,
                                 const PipelineConfig& config) {
  CommandResult result;
  const auto clips = detail::sorted_entries(clips_dir, true);
  fs::create_directories(out_dir);
  std::vector<AugmentRow> rows(clips.size());
  parallel_for(clips.size(), config.jobs, [&](std::size_t k) {
    auto& row = rows[k];
    row.clip_id = clips[k].filename().string();
    try {
      row.transform = sample_augment(config.augment, row.clip_id);
      std::vector<Image> frames;
      for (const auto& f : detail::frame_files(clips[k])) frames.push_back(read_image(f, config.raw_frame));
      if (frames.empty()) throw IoError("no frame images in " + clips[k].string());
      const auto out_frames = apply_augment(frames, row.transform);
      detail::StagedDir out(out_dir / row.clip_id);
      for (std::size_t i = 0; i < out_frames.size(); ++i)
        write_image(out.path() / detail::frame_name(i, config.output_format), out_frames[i]);
      out.commit();
      row.frames = out_frames.size();
      row.status = "ok";
      row.detail = "-";
    } catch (const std::exception& e) {
      row.status = "failed";
      row.detail = e.what();
    }
  });
  write_text_atomic(out_dir / "manifest.tsv", format_augment_manifest(rows));

  std::size_t ok = 0, failed = 0;
  for (const auto& r : rows) {
    if (r.status == "ok") ++ok;
    else {
      ++failed;
      result.messages.push_back("augment " + r.clip_id + " failed: " + r.detail);
    }
  }
  result.exit_code = detail::batch_exit_code(ok, failed);
  return result;
}

// ---------------------------------------------------------------- score

struct ScoreRow {
  std::string utt_id;
  CerReport report;
};

struct ScoreResult : CommandResult {
  std::vector<ScoreRow> rows;  // sorted by utt_id
  CerReport total;
  std::vector<std::string> missing_in_hyp;
  std::vector<std::string> missing_in_ref;
  std::string tsv;
};

inline std::string format_score_row(const std::string& id, const CerReport& r) {
  return id + "\t" + std::to_string(r.ref_len) + "\t" + std::to_string(r.substitutions) + "\t" +
         std::to_string(r.deletions) + "\t" + std::to_string(r.insertions) + "\t" +
         std::to_string(r.errors()) + "\t" + (r.has_ratio() ? detail::fixed6(r.cer()) : "NA") + "\n";
}

/// Per-utterance CER rows plus a TOTAL row that sums counts before dividing.
/// Utterances present in only one input are coverage errors (exit 2); the
/// report covers the utterances both sides share.
inline ScoreResult score_transcripts(const TranscriptMap& refs, const TranscriptMap& hyps,
                                     std::size_t jobs = 1) {
  ScoreResult res;
  std::vector<std::pair<const std::string*, const std::string*>> common;
  std::vector<std::string> ids;
  for (const auto& [id, text] : refs) {
    auto it = hyps.find(id);
    if (it == hyps.end()) {
      res.missing_in_hyp.push_back(id);
      continue;
    }
    ids.push_back(id);
    common.emplace_back(&text, &it->second);
  }
  for (const auto& [id, text] : hyps)
    if (!refs.count(id)) res.missing_in_ref.push_back(id);

  res.rows.resize(common.size());
  parallel_for(common.size(), jobs, [&](std::size_t k) {
    res.rows[k] = {ids[k], cer(tokenize(*common[k].first), tokenize(*common[k].second))};
  });
  res.tsv = "utt_id\tref_len\tsub\tdel\tins\terrors\tcer\n";
  for (const auto& r : res.rows) {
    res.total += r.report;
    res.tsv += format_score_row(r.utt_id, r.report);
  }
  res.tsv += format_score_row("TOTAL", res.total);

  for (const auto& id : res.missing_in_hyp)
    res.messages.push_back("coverage error: utterance '" + id + "' missing from hypothesis");
  for (const auto& id : res.missing_in_ref)
    res.messages.push_back("coverage error: utterance '" + id + "' missing from reference");
  if (!res.missing_in_hyp.empty() || !res.missing_in_ref.empty()) res.exit_code = kExitPartial;
  return res;
}

inline ScoreResult cmd_score(const fs::path& ref_file, const fs::path& hyp_file, std::size_t jobs = 1) {
  return score_transcripts(load_transcripts(ref_file.string()), load_transcripts(hyp_file.string()), jobs);
}

// ---------------------------------------------------------------- rover

struct SystemInput {
  std::string system_id;
  fs::path transcripts;
  std::optional<fs::path> confidences;
};

struct RoverRequest {
  std::vector<SystemInput> systems;
  std::vector<std::string> order;       // explicit merge order by system id
  std::optional<fs::path> cer_table;    // `<system_id>\t<cer>`; ascending CER order
  double alpha = 1.0;
  double null_confidence = kDefaultNullConfidence;
  bool intersect = false;
  bool word_level = false;
  std::optional<fs::path> wtn_dump_dir;
  std::size_t jobs = 1;
};

struct RoverResult : CommandResult {
  TranscriptMap fused;
  std::vector<std::string> merge_order;
};

/// Resolves the merge order: explicit list, else ascending CER, else the
/// order systems were given in.
inline std::vector<std::size_t> resolve_merge_order(const RoverRequest& req) {
  const auto n = req.systems.size();
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  auto find = [&](const std::string& id) {
    for (std::size_t i = 0; i < n; ++i)
      if (req.systems[i].system_id == id) return i;
    throw ParameterError("unknown system id '" + id + "'");
  };
  if (!req.order.empty()) {
    if (req.order.size() != n) throw ParameterError("--order must list every system exactly once");
    std::set<std::size_t> used;
    idx.clear();
    for (const auto& id : req.order) {
      const auto i = find(id);
      if (!used.insert(i).second) throw ParameterError("--order lists '" + id + "' twice");
      idx.push_back(i);
    }
    return idx;
  }
  if (req.cer_table) {
    std::map<std::string, double> cer_of;
    for (const auto& [id, body] : load_transcripts(req.cer_table->string())) {
      try {
        cer_of[id] = std::stod(body);
      } catch (const std::exception&) {
        throw ParseError(req.cer_table->string() + ": bad CER value for system '" + id + "'");
      }
    }
    for (const auto& s : req.systems)
      if (!cer_of.count(s.system_id))
        throw ParameterError("CER table lacks system '" + s.system_id + "'");
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return cer_of[req.systems[a].system_id] < cer_of[req.systems[b].system_id];
    });
  }
  return idx;
}

inline RoverResult cmd_rover(const RoverRequest& req) {
  if (req.systems.empty()) throw ParameterError("rover: no hypothesis files given");
  if (!(req.alpha >= 0.0 && req.alpha <= 1.0)) throw ParameterError("alpha must lie in [0, 1]");
  {
    std::set<std::string> ids;
    for (const auto& s : req.systems)
      if (!ids.insert(s.system_id).second)
        throw ParameterError("duplicate system id '" + s.system_id + "'");
  }
  RoverResult res;
  const auto order = resolve_merge_order(req);
  for (auto i : order) res.merge_order.push_back(req.systems[i].system_id);

  std::vector<TranscriptMap> texts;
  std::vector<std::optional<std::map<std::string, std::vector<double>>>> confs;
  for (auto i : order) {
    texts.push_back(load_transcripts(req.systems[i].transcripts.string()));
    if (req.systems[i].confidences) confs.emplace_back(load_confidences(req.systems[i].confidences->string()));
    else confs.emplace_back(std::nullopt);
  }

  std::set<std::string> all, common;
  for (const auto& [id, t] : texts[0]) common.insert(id);
  for (const auto& m : texts) {
    std::set<std::string> next;
    for (const auto& [id, t] : m) {
      all.insert(id);
      if (common.count(id)) next.insert(id);
    }
    common = std::move(next);
  }
  if (common.size() != all.size()) {
    std::string diff;
    for (const auto& id : all) {
      if (common.count(id)) continue;
      std::string missing;
      for (std::size_t k = 0; k < texts.size(); ++k)
        if (!texts[k].count(id)) missing += (missing.empty() ? "" : ",") + res.merge_order[k];
      diff += "\n  " + id + " missing from: " + missing;
    }
    if (!req.intersect)
      throw ValidationError("utterance sets differ across systems (use --intersect):" + diff);
    res.messages.push_back("warning: fusing only the shared utterances; dropped:" + diff);
  }

  const std::vector<std::string> ids(common.begin(), common.end());
  std::vector<std::string> fused(ids.size());
  if (req.wtn_dump_dir) fs::create_directories(*req.wtn_dump_dir);
  parallel_for(ids.size(), req.jobs, [&](std::size_t u) {
    std::vector<Hypothesis> hyps;
    for (std::size_t k = 0; k < texts.size(); ++k) {
      Hypothesis h;
      h.system_id = res.merge_order[k];
      h.utt_id = ids[u];
      const auto& text = texts[k].at(ids[u]);
      h.tokens = req.word_level ? tokenize_words(text) : tokenize(text);
      if (confs[k]) {
        auto it = confs[k]->find(ids[u]);
        if (it == confs[k]->end())
          throw ParameterError("system '" + h.system_id + "' has no confidences for '" + ids[u] + "'");
        h.confidences = it->second;
      }
      hyps.push_back(std::move(h));
    }
    const auto wtn = build_wtn(hyps);
    const auto out = vote(wtn, req.alpha, req.null_confidence);
    if (req.word_level) {
      std::string s;
      for (const auto& t : out.tokens) s += (s.empty() ? "" : " ") + t;
      fused[u] = s;
    } else {
      fused[u] = out.joined();
    }
    if (req.wtn_dump_dir)
      write_text_atomic(*req.wtn_dump_dir / (ids[u] + ".json"), wtn_to_json(wtn).dump() + "\n");
  });
  for (std::size_t u = 0; u < ids.size(); ++u) res.fused.emplace(ids[u], std::move(fused[u]));
  return res;
}

}  // namespace lipkit
