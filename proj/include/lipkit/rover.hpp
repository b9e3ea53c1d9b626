#pragma once

// ROVER hypothesis fusion.
//
// Hypotheses are merged one at a time into a word transition network (WTN):
// an ordered list of slots, each holding the competing tokens that the
// merged systems put at that position. The reserved token "@" (NULL) counts
// systems that produced nothing there. Each merge is a minimum-cost DP
// alignment of the new token sequence against the current slots. Voting then
// picks one token (or nothing) per slot.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "lipkit/error.hpp"
#include "lipkit/scoring.hpp"

namespace lipkit {

inline constexpr std::string_view kNullToken = "@";
inline constexpr double kDefaultNullConfidence = 0.7;
// Scores this close count as tied, so averaging noise such as
// (0.6 + 0.6 + 0.6) / 3 != 0.6 does not decide a vote.
inline constexpr double kScoreTieTolerance = 1e-12;

struct Hypothesis {
  std::string system_id;
  std::string utt_id;
  TokenSeq tokens;
  std::optional<std::vector<double>> confidences;  // one per token, in [0, 1]

  void validate() const {
    for (const auto& t : tokens.tokens) {
      if (t.empty()) throw ParameterError("hypothesis '" + system_id + "': empty token");
      if (t == kNullToken)
        throw ParameterError("hypothesis '" + system_id + "': token '@' is reserved for NULL");
    }
    if (!confidences) return;
    if (confidences->size() != tokens.size())
      throw ParameterError("hypothesis '" + system_id + "' utt '" + utt_id + "': " +
                           std::to_string(confidences->size()) + " confidences for " +
                           std::to_string(tokens.size()) + " tokens");
    for (double c : *confidences)
      if (!(c >= 0.0 && c <= 1.0))
        throw ParameterError("hypothesis '" + system_id + "': confidence outside [0, 1]");
  }

  double confidence(std::size_t i) const { return confidences ? (*confidences)[i] : 0.0; }
};

struct SlotEntry {
  std::string token;
  std::size_t count = 0;
  double conf_sum = 0.0;
  std::size_t first_system = 0;  // merge index of the system that introduced it

  bool is_null() const noexcept { return token == kNullToken; }
  friend bool operator==(const SlotEntry&, const SlotEntry&) = default;
};

/// Entries are kept in the order they first appeared.
struct Slot {
  std::vector<SlotEntry> entries;

  const SlotEntry* find(std::string_view token) const {
    for (const auto& e : entries)
      if (e.token == token) return &e;
    return nullptr;
  }
  bool contains(std::string_view token) const { return find(token) != nullptr; }

  std::size_t total_count() const {
    std::size_t n = 0;
    for (const auto& e : entries) n += e.count;
    return n;
  }

  void add(std::string_view token, std::size_t count, double conf, std::size_t system) {
    for (auto& e : entries)
      if (e.token == token) {
        e.count += count;
        e.conf_sum += conf;
        return;
      }
    entries.push_back({std::string(token), count, conf, system});
  }

  friend bool operator==(const Slot&, const Slot&) = default;
};

struct WordTransitionNetwork {
  std::string utt_id;
  std::size_t num_systems = 0;
  bool has_confidences = true;  // every merged hypothesis carried confidences
  std::vector<Slot> slots;

  friend bool operator==(const WordTransitionNetwork&, const WordTransitionNetwork&) = default;
};

inline WordTransitionNetwork wtn_init(const Hypothesis& hyp) {
  hyp.validate();
  WordTransitionNetwork wtn;
  wtn.utt_id = hyp.utt_id;
  wtn.num_systems = 1;
  wtn.has_confidences = hyp.confidences.has_value();
  wtn.slots.reserve(hyp.tokens.size());
  for (std::size_t i = 0; i < hyp.tokens.size(); ++i) {
    Slot s;
    s.add(hyp.tokens[i], 1, hyp.confidence(i), 0);
    wtn.slots.push_back(std::move(s));
  }
  return wtn;
}

enum class AlignOp : std::uint8_t { diagonal, deletion, insertion };

struct MergeResult {
  WordTransitionNetwork network;
  std::size_t cost = 0;
  std::vector<AlignOp> path;  // in slot/token order
};

/// Cost-only DP: match 0, substitution 1, deletion (slot gets no token) 1,
/// insertion (token opens a new slot) 1.
inline std::size_t wtn_alignment_cost(const WordTransitionNetwork& wtn, const TokenSeq& tokens) {
  const std::size_t n = wtn.slots.size(), m = tokens.size();
  std::vector<std::size_t> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= m; ++j)
      cur[j] = std::min({prev[j - 1] + (wtn.slots[i - 1].contains(tokens[j - 1]) ? 0 : 1),
                         prev[j] + 1, cur[j - 1] + 1});
    std::swap(prev, cur);
  }
  return prev[m];
}

/// Merges `hyp` into a copy of `wtn`. Equal-cost choices prefer the diagonal
/// (match or substitution), then deletion, then insertion.
inline MergeResult wtn_align(const WordTransitionNetwork& wtn, const Hypothesis& hyp) {
  if (wtn.utt_id != hyp.utt_id)
    throw AlignmentError("cannot align utterance '" + hyp.utt_id + "' into network for '" +
                         wtn.utt_id + "'");
  hyp.validate();

  const std::size_t n = wtn.slots.size(), m = hyp.tokens.size();
  const std::size_t stride = m + 1;
  std::vector<std::size_t> cost((n + 1) * stride);
  std::vector<AlignOp> op((n + 1) * stride, AlignOp::diagonal);
  for (std::size_t j = 1; j <= m; ++j) {
    cost[j] = j;
    op[j] = AlignOp::insertion;
  }
  for (std::size_t i = 1; i <= n; ++i) {
    cost[i * stride] = i;
    op[i * stride] = AlignOp::deletion;
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t sub = wtn.slots[i - 1].contains(hyp.tokens[j - 1]) ? 0 : 1;
      std::size_t best = cost[(i - 1) * stride + j - 1] + sub;
      AlignOp how = AlignOp::diagonal;
      if (cost[(i - 1) * stride + j] + 1 < best) {
        best = cost[(i - 1) * stride + j] + 1;
        how = AlignOp::deletion;
      }
      if (cost[i * stride + j - 1] + 1 < best) {
        best = cost[i * stride + j - 1] + 1;
        how = AlignOp::insertion;
      }
      cost[i * stride + j] = best;
      op[i * stride + j] = how;
    }
  }

  MergeResult result;
  result.cost = cost[n * stride + m];
  for (std::size_t i = n, j = m; i > 0 || j > 0;) {
    const AlignOp how = op[i * stride + j];
    result.path.push_back(how);
    if (how != AlignOp::insertion) --i;
    if (how != AlignOp::deletion) --j;
  }
  std::reverse(result.path.begin(), result.path.end());

  const std::size_t k = wtn.num_systems;  // merge index of the new system
  auto& out = result.network;
  out.utt_id = wtn.utt_id;
  out.num_systems = k + 1;
  out.has_confidences = wtn.has_confidences && hyp.confidences.has_value();
  out.slots.reserve(n + m);
  std::size_t i = 0, j = 0;
  for (AlignOp how : result.path) {
    switch (how) {
      case AlignOp::diagonal:
        out.slots.push_back(wtn.slots[i++]);
        out.slots.back().add(hyp.tokens[j], 1, hyp.confidence(j), k);
        ++j;
        break;
      case AlignOp::deletion:
        out.slots.push_back(wtn.slots[i++]);
        out.slots.back().add(kNullToken, 1, 0.0, k);
        break;
      case AlignOp::insertion: {
        Slot s;
        if (k > 0) s.add(kNullToken, k, 0.0, 0);
        s.add(hyp.tokens[j], 1, hyp.confidence(j), k);
        ++j;
        out.slots.push_back(std::move(s));
        break;
      }
    }
  }
  return result;
}

/// Per slot, score(w) = alpha * count(w) / N + (1 - alpha) * avg_conf(w),
/// where NULL's average confidence is `null_confidence`. Without
/// confidences the score is count(w) / N. A winning NULL emits nothing.
/// Ties prefer a real token, then the earliest-merged system's token.
inline TokenSeq vote(const WordTransitionNetwork& wtn, double alpha,
                     double null_confidence = kDefaultNullConfidence) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ParameterError("alpha must lie in [0, 1]");
  if (!(null_confidence >= 0.0 && null_confidence <= 1.0))
    throw ParameterError("NULL confidence must lie in [0, 1]");
  if (wtn.num_systems == 0) throw ParameterError("vote: network has no merged hypotheses");
  const double a = wtn.has_confidences ? alpha : 1.0;
  const auto n = static_cast<double>(wtn.num_systems);

  TokenSeq out;
  for (const auto& slot : wtn.slots) {
    const SlotEntry* best = nullptr;
    double best_score = 0.0;
    for (const auto& e : slot.entries) {
      const double avg =
          e.is_null() ? null_confidence : e.conf_sum / static_cast<double>(e.count);
      const double score = a * (static_cast<double>(e.count) / n) + (1.0 - a) * avg;
      bool take = false;
      if (!best || score > best_score + kScoreTieTolerance) {
        take = true;
      } else if (score >= best_score - kScoreTieTolerance) {
        if (best->is_null() && !e.is_null()) take = true;
        else if (!best->is_null() && !e.is_null() && e.first_system < best->first_system)
          take = true;
      }
      if (take) {
        best = &e;
        best_score = score;
      }
    }
    if (best && !best->is_null()) out.tokens.push_back(best->token);
  }
  return out;
}

/// Merges in the given order, then votes. The first hypothesis anchors the
/// network, so callers usually put the strongest system first.
inline WordTransitionNetwork build_wtn(std::span<const Hypothesis> hypotheses) {
  if (hypotheses.empty()) throw ParameterError("no hypotheses to fuse");
  auto wtn = wtn_init(hypotheses.front());
  for (const auto& h : hypotheses.subspan(1)) wtn = wtn_align(wtn, h).network;
  return wtn;
}

inline TokenSeq rover_fuse(std::span<const Hypothesis> hypotheses, double alpha,
                           double null_confidence = kDefaultNullConfidence) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ParameterError("alpha must lie in [0, 1]");
  return vote(build_wtn(hypotheses), alpha, null_confidence);
}

/// Debug dump: {"slots":[{"a":[2,0.0],"@":[1,0.0]},...]}.
inline nlohmann::ordered_json wtn_to_json(const WordTransitionNetwork& wtn) {
  nlohmann::ordered_json slots = nlohmann::ordered_json::array();
  for (const auto& s : wtn.slots) {
    nlohmann::ordered_json obj = nlohmann::ordered_json::object();
    for (const auto& e : s.entries) obj[e.token] = nlohmann::ordered_json::array({e.count, e.conf_sum});
    slots.push_back(std::move(obj));
  }
  nlohmann::ordered_json j;
  j["slots"] = std::move(slots);
  return j;
}

}  // namespace lipkit
