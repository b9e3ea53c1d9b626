// Fuses three toy system outputs for one utterance and scores each against
// the reference.

#include <iostream>
#include <vector>

#include "lipkit/rover.hpp"
#include "lipkit/scoring.hpp"

int main() {
  using namespace lipkit;
  const auto ref = tokenize("今天天气很好");
  std::vector<Hypothesis> systems = {
      {"conformer", "utt1", tokenize("今天天气很好"), std::nullopt},
      {"branchformer", "utt1", tokenize("今天田气很好"), std::nullopt},
      {"transformer", "utt1", tokenize("今天天气好"), std::nullopt},
  };

  for (const auto& h : systems)
    std::cout << h.system_id << "\t" << h.tokens.joined() << "\tCER " << cer(ref, h.tokens).cer() << "\n";

  const auto fused = rover_fuse(systems, /*alpha=*/1.0);
  std::cout << "rover\t" << fused.joined() << "\tCER " << cer(ref, fused).cer() << "\n";
  std::cout << wtn_to_json(build_wtn(systems)).dump() << "\n";
}
