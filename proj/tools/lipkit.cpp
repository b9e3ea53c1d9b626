// lipkit: lip-reading dataset preparation and transcript fusion.
//
//   lipkit plan     annotations -> crop plans + manifest
//   lipkit crop     frames + plans -> fixed-size lip crops
//   lipkit perturb  clips -> speed-perturbed copies (<clip>@<rate>)
//   lipkit augment  clips -> seeded per-clip augmented copies
//   lipkit score    reference + hypothesis transcripts -> CER report
//   lipkit rover    N system transcripts -> fused transcript
//
// Exit codes: 0 success, 1 usage, 2 partial failure or warning, 3 failure.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11/CLI11.hpp"

#include "lipkit/config.hpp"
#include "lipkit/pipeline.hpp"

namespace {

using namespace lipkit;

struct CommonOptions {
  std::string config_path;
  std::optional<std::size_t> jobs;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_path, "TOML or JSON pipeline config")->check(CLI::ExistingFile);
  cmd->add_option("--jobs,-j", o.jobs, "Worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", o.seed, "Random seed (overrides config)");
}

PipelineConfig resolve_config(const CommonOptions& o) {
  PipelineConfig c = o.config_path.empty() ? PipelineConfig{} : load_config(o.config_path);
  if (o.jobs) c.jobs = *o.jobs;
  if (o.seed) {
    c.seed = *o.seed;
    c.augment.seed = *o.seed;
  }
  return c;
}

std::string pick(const std::string& flag, const std::string& from_config, const char* name) {
  if (!flag.empty()) return flag;
  if (!from_config.empty()) return from_config;
  throw CLI::RequiredError(name);
}

int report(const CommandResult& r) {
  for (const auto& m : r.messages) std::cerr << m << "\n";
  return r.exit_code;
}

SystemInput parse_system(const std::string& spec) {
  SystemInput s;
  const auto eq = spec.find('=');
  if (eq == std::string::npos) {
    s.transcripts = spec;
    s.system_id = fs::path(spec).stem().string();
  } else {
    s.system_id = spec.substr(0, eq);
    s.transcripts = spec.substr(eq + 1);
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lipkit: lip ROI extraction, clip augmentation, CER scoring and ROVER fusion"};
  app.require_subcommand(1);

  CommonOptions common;

  // plan
  auto* plan = app.add_subcommand("plan", "Compute multi-scale crop plans from annotations");
  std::vector<std::string> plan_inputs;
  std::string plan_out;
  std::vector<double> plan_scales;
  std::optional<std::size_t> plan_size;
  plan->add_option("--annotations,-a", plan_inputs, "Annotation JSON document(s)");
  plan->add_option("--out,-o", plan_out, "Directory for plan files and manifest.tsv");
  plan->add_option("--scales", plan_scales, "Scale factors (overrides config)")->delimiter(',');
  plan->add_option("--output-size", plan_size, "Crop output size in pixels");
  add_common(plan, common);

  // crop
  auto* crop = app.add_subcommand("crop", "Crop and resize lip ROIs from frame images");
  std::string crop_frames, crop_plans, crop_out;
  crop->add_option("--frames", crop_frames, "Frame root: <frames>/<segment_id>/<index:06d>.png");
  crop->add_option("--plans", crop_plans, "Directory of plan JSON files");
  crop->add_option("--out,-o", crop_out, "Output directory for cropped clips");
  add_common(crop, common);

  // perturb
  auto* perturb = app.add_subcommand("perturb", "Write speed-perturbed copies of clips");
  std::string perturb_clips, perturb_out;
  std::vector<double> perturb_rates;
  perturb->add_option("--clips", perturb_clips, "Directory of clip subdirectories");
  perturb->add_option("--out,-o", perturb_out, "Output directory");
  perturb->add_option("--rates", perturb_rates, "Perturbation rates (overrides config)")->delimiter(',');
  add_common(perturb, common);

  // augment
  auto* augment = app.add_subcommand("augment", "Write seeded augmented copies of clips");
  std::string augment_clips, augment_out;
  augment->add_option("--clips", augment_clips, "Directory of clip subdirectories");
  augment->add_option("--out,-o", augment_out, "Output directory");
  add_common(augment, common);

  // score
  auto* score = app.add_subcommand("score", "Character error rate report");
  std::string score_ref, score_hyp, score_out;
  score->add_option("--ref", score_ref, "Reference transcripts")->required()->check(CLI::ExistingFile);
  score->add_option("--hyp", score_hyp, "Hypothesis transcripts")->required()->check(CLI::ExistingFile);
  score->add_option("--out,-o", score_out, "Report TSV (default stdout)");
  add_common(score, common);

  // rover
  auto* rover = app.add_subcommand("rover", "Fuse system transcripts with ROVER");
  std::vector<std::string> rover_hyps, rover_confs, rover_order;
  std::string rover_out, rover_cer_table, rover_dump;
  std::optional<double> rover_alpha, rover_null;
  bool rover_intersect = false, rover_words = false;
  rover->add_option("--hyp", rover_hyps, "[system_id=]transcript file, one per system")->required();
  rover->add_option("--conf", rover_confs, "system_id=confidence file");
  rover->add_option("--order", rover_order, "Merge order as system ids")->delimiter(',');
  rover->add_option("--cer-table", rover_cer_table, "TSV of <system_id>\\t<cer>; merge best first")
      ->check(CLI::ExistingFile);
  rover->add_option("--alpha", rover_alpha, "Frequency vs confidence weight in [0,1]")
      ->check(CLI::Range(0.0, 1.0));
  rover->add_option("--null-conf", rover_null, "Confidence assigned to NULL")->check(CLI::Range(0.0, 1.0));
  rover->add_flag("--intersect", rover_intersect, "Fuse only utterances shared by all systems");
  rover->add_flag("--word-level", rover_words, "Align space-separated words instead of characters");
  rover->add_option("--wtn-dump", rover_dump, "Directory for per-utterance WTN JSON dumps");
  rover->add_option("--out,-o", rover_out, "Fused transcript file")->required();
  add_common(rover, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    auto config = resolve_config(common);

    if (*plan) {
      if (!plan_scales.empty()) {
        config.scales.clear();
        for (double s : plan_scales) config.scales.emplace_back(s);
      }
      if (plan_size) config.output_size = *plan_size;
      config.validate();
      if (plan_inputs.empty()) plan_inputs.push_back(pick("", config.paths.annotations, "--annotations"));
      std::vector<fs::path> files(plan_inputs.begin(), plan_inputs.end());
      return report(cmd_plan(files, pick(plan_out, config.paths.plans, "--out"), config));
    }
    if (*crop) {
      return report(cmd_crop(pick(crop_frames, config.paths.frames, "--frames"),
                             pick(crop_plans, config.paths.plans, "--plans"),
                             pick(crop_out, config.paths.crops, "--out"), config));
    }
    if (*perturb) {
      if (!perturb_rates.empty()) {
        config.perturb_rates.clear();
        for (double r : perturb_rates) config.perturb_rates.emplace_back(r);
      }
      return report(cmd_perturb(pick(perturb_clips, config.paths.crops, "--clips"),
                                pick(perturb_out, config.paths.output, "--out"), config));
    }
    if (*augment) {
      return report(cmd_augment(pick(augment_clips, config.paths.crops, "--clips"),
                                pick(augment_out, config.paths.output, "--out"), config));
    }
    if (*score) {
      auto res = cmd_score(score_ref, score_hyp, config.jobs);
      if (score_out.empty()) std::cout << res.tsv;
      else write_text_atomic(score_out, res.tsv);
      return report(res);
    }
    if (*rover) {
      RoverRequest req;
      for (const auto& h : rover_hyps) req.systems.push_back(parse_system(h));
      for (const auto& c : rover_confs) {
        const auto eq = c.find('=');
        if (eq == std::string::npos) throw CLI::ValidationError("--conf", "expected system_id=file");
        const auto id = c.substr(0, eq);
        auto it = std::find_if(req.systems.begin(), req.systems.end(),
                               [&](const SystemInput& s) { return s.system_id == id; });
        if (it == req.systems.end()) throw CLI::ValidationError("--conf", "unknown system '" + id + "'");
        it->confidences = c.substr(eq + 1);
      }
      req.order = rover_order;
      if (!rover_cer_table.empty()) req.cer_table = rover_cer_table;
      req.alpha = rover_alpha.value_or(config.rover_alpha);
      req.null_confidence = rover_null.value_or(config.null_confidence);
      req.intersect = rover_intersect;
      req.word_level = rover_words;
      if (!rover_dump.empty()) req.wtn_dump_dir = rover_dump;
      req.jobs = config.jobs;
      auto res = cmd_rover(req);
      write_text_atomic(rover_out, format_transcripts(res.fused));
      return report(res);
    }
  } catch (const CLI::Error& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitTotal;
  }
  return kExitUsage;
}
