// Plans lip crops for a small synthetic segment at every default scale.

#include <iostream>

#include "lipkit/roi.hpp"

int main() {
  using namespace lipkit;
  SpeakerSegment seg;
  seg.segment_id = "demo";
  seg.speaker_id = "S000";
  seg.total_frames = 5;
  for (std::size_t i = 0; i < 5; ++i) {
    FrameAnnotation f{i, BBox{100, 80, 260, 280}, std::nullopt};
    if (i != 2) f.lip = BBox{150, 220, 210, 250};  // frame 2: lip missed, gap-filled
    seg.frames.push_back(f);
  }

  for (const auto& scale : default_scales()) {
    const auto disp = plan_crops(seg, scale);
    const auto& plan = std::get<CropPlan>(disp);
    const auto win = source_window(plan, 2);
    std::cout << "scale " << format_decimal(scale.value()) << ": side " << plan.side << " -> " << win.side
              << "px window at (" << win.x0 << ", " << win.y0 << ")\n";
  }
}
