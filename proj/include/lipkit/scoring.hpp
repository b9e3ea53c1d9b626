#pragma once

// Character error rate: unit-cost Levenshtein alignment between a reference
// and a hypothesis token sequence, with a deterministic S/D/I split.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <unicode/brkiter.h>
#include <unicode/locid.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include "lipkit/error.hpp"

namespace lipkit {

/// Ordered tokens; no token is empty or pure whitespace.
struct TokenSeq {
  std::vector<std::string> tokens;

  std::size_t size() const noexcept { return tokens.size(); }
  bool empty() const noexcept { return tokens.empty(); }
  const std::string& operator[](std::size_t i) const { return tokens[i]; }
  auto begin() const noexcept { return tokens.begin(); }
  auto end() const noexcept { return tokens.end(); }

  /// Tokens joined without separators.
  std::string joined() const {
    std::string s;
    for (const auto& t : tokens) s += t;
    return s;
  }

  friend bool operator==(const TokenSeq&, const TokenSeq&) = default;
};

/// Drops whitespace, then splits the rest into extended grapheme clusters.
inline TokenSeq tokenize(std::string_view text) {
  const auto src = icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  icu::UnicodeString stripped;
  for (int32_t i = 0; i < src.length();) {
    const UChar32 cp = src.char32At(i);
    if (!u_isUWhiteSpace(cp)) stripped.append(cp);
    i += U16_LENGTH(cp);
  }

  TokenSeq out;
  if (stripped.isEmpty()) return out;
  UErrorCode status = U_ZERO_ERROR;
  std::unique_ptr<icu::BreakIterator> it(
      icu::BreakIterator::createCharacterInstance(icu::Locale::getRoot(), status));
  if (U_FAILURE(status)) throw Error(std::string("ICU break iterator: ") + u_errorName(status));
  it->setText(stripped);
  for (int32_t start = it->first(), end = it->next(); end != icu::BreakIterator::DONE;
       start = end, end = it->next()) {
    std::string cluster;
    stripped.tempSubStringBetween(start, end).toUTF8String(cluster);
    out.tokens.push_back(std::move(cluster));
  }
  return out;
}

/// Space-delimited tokenizer, for word-level scoring.
inline TokenSeq tokenize_words(std::string_view text) {
  TokenSeq out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) out.tokens.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

struct EditCounts {
  std::size_t substitutions = 0;
  std::size_t deletions = 0;
  std::size_t insertions = 0;

  std::size_t errors() const noexcept { return substitutions + deletions + insertions; }
  friend bool operator==(const EditCounts&, const EditCounts&) = default;
};

/// Minimum unit-cost edit counts. When several optimal alignments exist the
/// traceback prefers the diagonal (match/substitution), then insertion, then
/// deletion, so the split is reproducible.
template <class T>
EditCounts edit_counts(std::span<const T> ref, std::span<const T> hyp) {
  const std::size_t n = ref.size(), m = hyp.size();
  const std::size_t stride = m + 1;
  std::vector<std::uint32_t> cost((n + 1) * stride);
  for (std::size_t j = 0; j <= m; ++j) cost[j] = static_cast<std::uint32_t>(j);
  for (std::size_t i = 1; i <= n; ++i) {
    std::uint32_t* row = &cost[i * stride];
    const std::uint32_t* up = &cost[(i - 1) * stride];
    row[0] = static_cast<std::uint32_t>(i);
    for (std::size_t j = 1; j <= m; ++j) {
      const std::uint32_t diag = up[j - 1] + (ref[i - 1] == hyp[j - 1] ? 0u : 1u);
      row[j] = std::min({diag, row[j - 1] + 1u, up[j] + 1u});
    }
  }

  EditCounts c;
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    const std::uint32_t here = cost[i * stride + j];
    if (i > 0 && j > 0) {
      const bool same = ref[i - 1] == hyp[j - 1];
      if (cost[(i - 1) * stride + j - 1] + (same ? 0u : 1u) == here) {
        c.substitutions += !same;
        --i, --j;
        continue;
      }
    }
    if (j > 0 && cost[i * stride + j - 1] + 1 == here) {
      ++c.insertions;
      --j;
      continue;
    }
    ++c.deletions;
    --i;
  }
  return c;
}

struct CerReport {
  std::size_t substitutions = 0;
  std::size_t deletions = 0;
  std::size_t insertions = 0;
  std::size_t ref_len = 0;

  std::size_t errors() const noexcept { return substitutions + deletions + insertions; }

  /// (S + D + I) / ref_len. An empty reference scores 0 against an empty
  /// hypothesis and throws EmptyReference otherwise.
  double cer() const {
    if (ref_len == 0) {
      if (errors() == 0) return 0.0;
      throw EmptyReference("CER undefined: empty reference with non-empty hypothesis");
    }
    return static_cast<double>(errors()) / static_cast<double>(ref_len);
  }

  bool has_ratio() const noexcept { return ref_len > 0 || errors() == 0; }

  CerReport& operator+=(const CerReport& o) noexcept {
    substitutions += o.substitutions;
    deletions += o.deletions;
    insertions += o.insertions;
    ref_len += o.ref_len;
    return *this;
  }

  friend bool operator==(const CerReport&, const CerReport&) = default;
};

inline CerReport cer(const TokenSeq& ref, const TokenSeq& hyp) {
  const auto c = edit_counts<std::string>(ref.tokens, hyp.tokens);
  return {c.substitutions, c.deletions, c.insertions, ref.size()};
}

}  // namespace lipkit
