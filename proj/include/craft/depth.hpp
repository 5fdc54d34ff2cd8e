#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace craft {

struct TextFeatures {
  std::size_t word_count = 0;      // L
  std::size_t marker_count = 0;    // M, raw occurrences
  std::size_t sentence_count = 0;
  double sentence_word_ratio = 0;  // S = sentence_count / L, 0 when L == 0

  bool operator==(const TextFeatures&) const = default;
};

/// Reasoning markers ("because", "therefore", ...) per language code.
/// Markers are stored as case-folded word sequences; matching is on whole words.
class MarkerLexicon {
 public:
  /// Throws DomainError for an empty (or punctuation-only) marker.
  void add(const std::string& language, std::string_view marker);

  /// Markers for `language`, longest first. Empty when the language is unknown.
  const std::vector<std::u32string>& markers(const std::string& language) const;
  std::vector<std::string> languages() const;
  std::size_t size(const std::string& language) const { return markers(language).size(); }

 private:
  // each marker is the folded words joined by a single space
  std::map<std::string, std::vector<std::u32string>> markers_;
};

/// Header: language, marker.
MarkerLexicon parse_lexicon(std::string_view text, const std::string& source = "<memory>");
MarkerLexicon load_lexicon(const std::string& path);

/// Word count by Unicode whitespace; sentences by runs of . ! ? ؟ । ۔ (plus a trailing
/// unterminated sentence); markers counted non-overlapping, longest match first.
TextFeatures extract_features(std::string_view text, const std::string& language, const MarkerLexicon& lexicon);

/// d = 0.4 f_len + 0.4 f_reason + 0.2 f_syn with
///   f_len = min(1, log(1+L) / log(51)), f_reason = min(M/3, 1), f_syn = 1 - exp(-S/0.1).
double depth_score(const TextFeatures& f);

}  // namespace craft
