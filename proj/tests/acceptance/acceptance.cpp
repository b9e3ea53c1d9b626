// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <unistd.h>

#include "lipkit/pipeline.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace lipkit;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;

  void check(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }
};

int failures = 0;

void criterion(const char* name, double time_limit_s, const std::function<void(Outcome&)>& body) {
  Outcome out;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(out);
  } catch (const std::exception& e) {
    out.check(false, std::string("exception: ") + e.what());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (time_limit_s > 0 && secs >= time_limit_s)
    out.check(false, "took " + std::to_string(secs) + " s, limit " + std::to_string(time_limit_s) + " s");
  if (!out.ok) ++failures;
  std::printf("%s  %-28s %8.3f s%s%s\n", out.ok ? "PASS" : "FAIL", name, secs, out.ok ? "" : "  ",
              out.detail.c_str());
  std::fflush(stdout);
}

Image noise(std::size_t h, std::size_t w, std::size_t c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Image img(h, w, c);
  for (auto& v : img.pixels()) v = static_cast<std::uint8_t>(rng() & 0xFF);
  return img;
}

CropPlan single_plan(double side, Point2 center, std::size_t out) {
  CropPlan p;
  p.segment_id = "golden";
  p.side = side;
  p.centers = {center};
  p.filled = {false};
  p.output_size = out;
  return p;
}

SpeakerSegment boundary_segment(std::size_t t, std::size_t faces, std::size_t lips) {
  SpeakerSegment s;
  s.segment_id = "b";
  s.speaker_id = "spk";
  s.total_frames = t;
  for (std::size_t i = 0; i < t; ++i) {
    FrameAnnotation f{i, std::nullopt, std::nullopt};
    if (i < faces) f.face = BBox{0, 0, 80, 80};
    if (i < lips) f.lip = BBox{30, 50, 50, 60};
    s.frames.push_back(f);
  }
  return s;
}

// All sequences over `symbols` letters up to `max_len` long.
std::vector<std::vector<char>> all_sequences(std::size_t max_len, int symbols) {
  std::vector<std::vector<char>> out{{}};
  for (std::size_t k = 0; k < out.size(); ++k)
    if (out[k].size() < max_len)
      for (int s = 0; s < symbols; ++s) {
        auto next = out[k];
        next.push_back(static_cast<char>('a' + s));
        out.push_back(std::move(next));
      }
  return out;
}

// Token sequences up to relabeling of the symbols: each new symbol is the
// smallest one not used yet.
std::vector<std::vector<unsigned>> canonical_token_sequences(std::size_t max_len, unsigned symbols) {
  std::vector<std::vector<unsigned>> out{{}};
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (out[k].size() >= max_len) continue;
    unsigned used = 0;
    for (unsigned t : out[k]) used = std::max(used, t + 1);
    for (unsigned s = 0; s <= std::min(used, symbols - 1); ++s) {
      auto next = out[k];
      next.push_back(s);
      out.push_back(std::move(next));
    }
  }
  return out;
}

const char* kSym[] = {"a", "b", "c", "d"};

Hypothesis make_hyp(std::string system, std::string_view text, const std::string& utt = "u") {
  return {std::move(system), utt, tokenize(text), std::nullopt};
}

}  // namespace

int main() {
  criterion("crop_size exactness", 1.0, [](Outcome& o) {
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> scale(0.1, 3.0), k(0.1, 10.0);
    for (int n = 0; n < 50; ++n) {
      const auto s = gen::segment(rng, 1 + rng() % 200, 0.8, 0.8);
      const double sc = scale(rng);
      const double got = crop_size(s, ScaleFactor(sc)), want = oracle::crop_size(s, sc);
      o.check(std::abs(got - want) <= 1e-9 * std::abs(want), "segment " + std::to_string(n));
    }
    for (int n = 0; n < 100; ++n) {
      const auto s = gen::segment(rng, 1 + rng() % 200, 0.8, 0.8);
      const double kk = k(rng);
      const double base = crop_size(s, ScaleFactor(1.0)), scaled = crop_size(s, ScaleFactor(kk));
      o.check(std::abs(scaled - kk * base) <= 1e-9 * kk * base, "linearity pair " + std::to_string(n));
    }
  });

  criterion("lip centers + gap fill", 1.0, [](Outcome& o) {
    std::mt19937_64 rng(202);
    for (int n = 0; n < 200; ++n) {
      const auto s = gen::segment(rng, 1 + rng() % 150, 0.7, 0.1 + 0.8 * (rng() % 100) / 100.0);
      const auto c = lip_centers(s);
      for (std::size_t i = 0; i < s.total_frames; ++i) {
        const auto [x, y] = oracle::nearest_lip_center(s, i);
        o.check(c.centers[i] == Point2{x, y}, "segment " + std::to_string(n) + " frame " + std::to_string(i));
      }
    }
  });

  criterion("discard boundary", 0, [](Outcome& o) {
    for (std::size_t t : {2u, 10u, 100u}) {
      const std::size_t half = t / 2, above = t / 2 + 1;
      const auto tag = "T=" + std::to_string(t);
      o.check(std::holds_alternative<Discarded>(plan_crops(boundary_segment(t, half, t), ScaleFactor(1.0))),
              tag + " face rate 0.5 kept");
      o.check(std::holds_alternative<Discarded>(plan_crops(boundary_segment(t, t, half), ScaleFactor(1.0))),
              tag + " lip rate 0.5 kept");
      o.check(std::holds_alternative<CropPlan>(plan_crops(boundary_segment(t, above, above), ScaleFactor(1.0))),
              tag + " rate 0.5 + 1/T discarded");
    }
  });

  criterion("crop geometry goldens", 0, [](Outcome& o) {
    auto run = [] {
      std::vector<Image> out;
      const auto img = noise(224, 224, 3, 303);
      out.push_back(crop_frame(img, single_plan(112, {112, 112}, 112), 0));
      out.push_back(crop_frame(img, single_plan(40, {0, 0}, 40), 0));
      out.push_back(crop_frame(img, single_plan(224, {112, 112}, 112), 0));
      return out;
    };
    const auto img = noise(224, 224, 3, 303);
    const auto a = run(), b = run();
    o.check(a[0] == oracle::window(img, 56, 56, 112), "centered crop differs from golden");
    o.check(a[1] == oracle::window(img, -20, -20, 40), "corner crop differs from golden");
    bool padded = true;
    for (std::size_t y = 0; y < 20; ++y)
      for (std::size_t x = 0; x < 40; ++x)
        for (std::size_t c = 0; c < 3; ++c) padded &= a[1].at(y, x, c) == 0 && a[1].at(x, y, c) == 0;
    o.check(padded, "corner crop padding is not zero");
    o.check(a[2] == oracle::box_downsample_2x(img), "downsample differs from golden");
    for (std::size_t k = 0; k < a.size(); ++k) {
      o.check(a[k] == b[k], "pixels differ between runs");
      o.check(encode_png(a[k]) == encode_png(b[k]), "encoded bytes differ between runs");
    }
  });

  criterion("CER oracle equivalence", 60.0, [](Outcome& o) {
    const auto seqs = all_sequences(8, 4);
    std::size_t pairs = 0;
    for (const auto& a : seqs)
      for (const auto& b : seqs) {
        if (a.size() + b.size() > 8) continue;
        ++pairs;
        const auto c = edit_counts<char>(a, b);
        const auto d = oracle::edit_distance(a, b);
        if (c.errors() != d || a.size() - c.deletions + c.insertions != b.size()) {
          o.check(false, "pair " + std::string(a.begin(), a.end()) + "/" + std::string(b.begin(), b.end()));
          return;
        }
      }
    o.check(pairs == 757305, "unexpected pair count " + std::to_string(pairs));
  });

  criterion("ROVER alignment optimality", 60.0, [](Outcome& o) {
    // Every slot holds a non-empty subset of the 3 symbols (7 choices).
    const auto token_seqs = canonical_token_sequences(5, 3);
    std::vector<std::vector<unsigned>> slot_seqs{{}};
    for (std::size_t k = 0; k < slot_seqs.size(); ++k)
      if (slot_seqs[k].size() < 5)
        for (unsigned m = 1; m < 8; ++m) {
          auto next = slot_seqs[k];
          next.push_back(m);
          slot_seqs.push_back(std::move(next));
        }
    std::size_t instances = 0;
    for (const auto& sets : slot_seqs) {
      WordTransitionNetwork w;
      w.utt_id = "u";
      w.num_systems = 3;
      w.has_confidences = false;
      for (unsigned m : sets) {
        Slot s;
        for (unsigned sym = 0; sym < 3; ++sym)
          if (m >> sym & 1u) s.add(kSym[sym], 1, 0.0, 0);
        w.slots.push_back(std::move(s));
      }
      for (const auto& toks : token_seqs) {
        Hypothesis h;
        h.system_id = "x";
        h.utt_id = "u";
        for (unsigned t : toks) h.tokens.tokens.emplace_back(kSym[t]);
        ++instances;
        if (wtn_align(w, h).cost != oracle::wtn_min_cost(sets, toks)) {
          o.check(false, "non-minimal alignment at instance " + std::to_string(instances));
          return;
        }
      }
    }

    std::mt19937_64 rng(404);
    for (int n = 0; n < 1000; ++n) {
      const std::size_t systems = 1 + rng() % 5;
      std::vector<Hypothesis> hs;
      std::size_t total = 0;
      for (std::size_t k = 0; k < systems; ++k) {
        Hypothesis h;
        h.system_id = "s" + std::to_string(k);
        h.utt_id = "u";
        const std::size_t len = rng() % 9;
        for (std::size_t i = 0; i < len; ++i) h.tokens.tokens.emplace_back(kSym[rng() % 4]);
        total += len;
        hs.push_back(std::move(h));
      }
      const auto w = build_wtn(hs);
      std::size_t real = 0;
      bool per_slot = true;
      for (const auto& s : w.slots) {
        per_slot &= s.total_count() == systems;
        for (const auto& e : s.entries) real += e.is_null() ? 0 : e.count;
      }
      o.check(per_slot && real == total, "conservation broken in fusion " + std::to_string(n));
      rover_fuse(hs, 1.0);
    }
  });

  criterion("ROVER behavior", 0, [](Outcome& o) {
    for (std::size_t n : {1u, 2u, 5u}) {
      std::vector<Hypothesis> hs;
      for (std::size_t k = 0; k < n; ++k) hs.push_back(make_hyp("s" + std::to_string(k), "今天天气很好"));
      o.check(rover_fuse(hs, 1.0).joined() == "今天天气很好", "unanimity N=" + std::to_string(n));
    }
    o.check(rover_fuse(std::vector{make_hyp("A", "a b c"), make_hyp("B", "a x c"), make_hyp("C", "a b c")}, 1.0)
                    .joined() == "abc",
            "majority fixture");
    o.check(rover_fuse(std::vector{make_hyp("A", "a b c"), make_hyp("B", "a c"), make_hyp("C", "a c")}, 1.0)
                    .joined() == "ac",
            "NULL-majority fixture");
  });

  criterion("speed perturbation", 0, [](Outcome& o) {
    for (std::size_t t : {1u, 7u, 100u}) {
      const auto idx = resample_indices(t, PerturbRate(1.0));
      bool identity = idx.size() == t;
      for (std::size_t j = 0; identity && j < t; ++j) identity = idx[j] == j;
      o.check(identity, "rate 1.0 not identity at T=" + std::to_string(t));
    }
    std::mt19937_64 rng(505);
    std::uniform_real_distribution<double> rate(0.5, 2.0);
    for (int n = 0; n < 500; ++n) {
      const std::size_t t = 1 + rng() % 500;
      const double r = rate(rng);
      const auto idx = resample_indices(t, PerturbRate(r));
      bool ok = idx.size() == static_cast<std::size_t>(std::llround(static_cast<double>(t) / r));
      for (auto i : idx) ok &= i < t;
      o.check(ok, "T=" + std::to_string(t) + " rate=" + std::to_string(r));
    }
  });

  criterion("end-to-end scale ratio", 0, [](Outcome& o) {
    const fs::path fixture = fs::path(LIPKIT_TEST_DATA) / "fixture";
    const fs::path work = fs::temp_directory_path() / ("lipkit_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(work);
    PipelineConfig config;
    o.check(cmd_plan({fixture / "annotations.json"}, work / "plans", config).exit_code == kExitOk, "plan failed");
    o.check(cmd_crop(fixture / "frames", work / "plans", work / "crops", config).exit_code == kExitOk,
            "crop failed");
    auto side_at = [&](ScaleFactor s) {
      const auto text = read_text_file((work / "plans" / (plan_stem("S217_001", s) + ".json")).string());
      return static_cast<double>(source_window(plan_from_json(nlohmann::json::parse(text)), 0).side);
    };
    const double base = side_at(ScaleFactor(1.0));
    for (const auto& s : default_scales()) {
      const double side = side_at(s);
      o.check(std::abs(side - base * s.value()) <= 1.0,
              "scale " + format_decimal(s.value()) + ": side " + std::to_string(side));
      const auto crop = read_image(work / "crops" / plan_stem("S217_001", s) / "000000.png");
      o.check(crop.height() == 112 && crop.width() == 112, "crop size at scale " + format_decimal(s.value()));
    }
    fs::remove_all(work);
  });

  std::printf("%s: %d criteria failed\n", failures ? "FAILED" : "OK", failures);
  return failures ? 1 : 0;
}
