#pragma once

// Line-oriented transcript files: `<utt_id>\t<transcript>` per line, UTF-8.
// Confidence files use the same layout with space-separated scores.

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "lipkit/error.hpp"

namespace lipkit {

using TranscriptMap = std::map<std::string, std::string>;

inline TranscriptMap parse_transcripts(std::string_view text, const std::string& origin = "<input>") {
  TranscriptMap out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    std::string id(line.substr(0, tab));
    std::string body = tab == std::string_view::npos ? std::string() : std::string(line.substr(tab + 1));
    if (id.empty()) throw ParseError(origin + ": empty utterance id", line_no);
    if (!out.emplace(id, std::move(body)).second)
      throw ParseError(origin + ": duplicate utterance id '" + id + "'", line_no);
  }
  return out;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline TranscriptMap load_transcripts(const std::string& path) {
  return parse_transcripts(read_text_file(path), path);
}

/// Sorted by utterance id, one `id\ttext` line each.
inline std::string format_transcripts(const TranscriptMap& m) {
  std::string out;
  for (const auto& [id, text] : m) out += id + "\t" + text + "\n";
  return out;
}

inline std::map<std::string, std::vector<double>> load_confidences(const std::string& path) {
  std::map<std::string, std::vector<double>> out;
  for (const auto& [id, body] : load_transcripts(path)) {
    std::istringstream ss(body);
    std::vector<double> scores;
    std::string tok;
    while (ss >> tok) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size() || !(v >= 0.0 && v <= 1.0))
        throw ParseError(path + ": bad confidence '" + tok + "' for utterance '" + id + "'");
      scores.push_back(v);
    }
    out.emplace(id, std::move(scores));
  }
  return out;
}

}  // namespace lipkit
