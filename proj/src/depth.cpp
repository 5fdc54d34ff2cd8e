#include "craft/depth.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "craft/csv.hpp"
#include "craft/errors.hpp"
#include "craft/io.hpp"
#include "craft/utf8.hpp"

namespace craft {

namespace {

bool is_terminal(char32_t c) {
  switch (c) {
    case U'.': case U'!': case U'?':
    case 0x061F:  // ؟ Arabic question mark
    case 0x0964:  // । danda
    case 0x06D4:  // ۔ Arabic full stop
      return true;
    default:
      return false;
  }
}

std::vector<std::u32string> fold_words(std::u32string_view text) {
  std::vector<std::u32string> out;
  for (const auto& w : utf8::split_whitespace(text)) out.push_back(utf8::fold_token(w));
  return out;
}

std::string upper_ascii(std::string s) {
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

void MarkerLexicon::add(const std::string& language, std::string_view marker) {
  std::u32string joined;
  for (const auto& w : fold_words(utf8::decode(marker))) {
    if (w.empty()) continue;
    if (!joined.empty()) joined.push_back(U' ');
    joined += w;
  }
  if (joined.empty()) throw DomainError("empty reasoning marker for language " + language);
  auto& list = markers_[upper_ascii(language)];
  if (std::find(list.begin(), list.end(), joined) != list.end()) return;
  list.push_back(std::move(joined));
  auto words = [](const std::u32string& m) { return std::count(m.begin(), m.end(), U' ') + 1; };
  std::stable_sort(list.begin(), list.end(), [&](const std::u32string& a, const std::u32string& b) {
    const auto wa = words(a);
    const auto wb = words(b);
    return wa != wb ? wa > wb : a < b;
  });
}

const std::vector<std::u32string>& MarkerLexicon::markers(const std::string& language) const {
  static const std::vector<std::u32string> kEmpty;
  auto it = markers_.find(upper_ascii(language));
  return it == markers_.end() ? kEmpty : it->second;
}

std::vector<std::string> MarkerLexicon::languages() const {
  std::vector<std::string> out;
  for (const auto& [lang, _] : markers_) out.push_back(lang);
  return out;
}

MarkerLexicon parse_lexicon(std::string_view text, const std::string& source) {
  const auto rows = csv::parse(text, source);
  if (rows.empty()) throw ParseError(source, 1, "missing header row");
  const auto lang_col = csv::find_column(rows.front().fields, "language");
  const auto marker_col = csv::find_column(rows.front().fields, "marker");
  if (lang_col == std::string::npos) throw ParseError(source, 1, "missing required column 'language'");
  if (marker_col == std::string::npos) throw ParseError(source, 1, "missing required column 'marker'");
  MarkerLexicon lex;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& f = rows[i].fields;
    if (f.size() != rows.front().fields.size()) throw ParseError(source, rows[i].line, "wrong number of fields");
    const std::string lang = utf8::normalize_whitespace(f[lang_col]);
    if (lang.empty()) throw ParseError(source, rows[i].line, "empty language");
    try {
      lex.add(lang, f[marker_col]);
    } catch (const DomainError& e) {
      throw ParseError(source, rows[i].line, e.what());
    }
  }
  return lex;
}

MarkerLexicon load_lexicon(const std::string& path) { return parse_lexicon(io::read_text(path), path); }

TextFeatures extract_features(std::string_view text, const std::string& language, const MarkerLexicon& lexicon) {
  const std::u32string decoded = utf8::decode(text);
  TextFeatures f;
  const auto words = fold_words(decoded);
  f.word_count = words.size();
  if (f.word_count == 0) return f;

  // Sentences: each run of terminal punctuation closes one; trailing text without
  // a terminal still counts as a sentence.
  bool in_terminal_run = false;
  bool open_content = false;
  for (char32_t c : decoded) {
    if (is_terminal(c)) {
      if (!in_terminal_run) ++f.sentence_count;
      in_terminal_run = true;
      open_content = false;
    } else {
      in_terminal_run = false;
      if (!utf8::is_space(c)) open_content = true;
    }
  }
  if (open_content) ++f.sentence_count;
  f.sentence_count = std::max<std::size_t>(f.sentence_count, 1);
  f.sentence_word_ratio = static_cast<double>(f.sentence_count) / static_cast<double>(f.word_count);

  const auto& markers = lexicon.markers(language);
  if (markers.empty()) return f;
  std::vector<std::vector<std::u32string>> split;
  split.reserve(markers.size());
  for (const auto& m : markers) split.push_back(utf8::split_whitespace(m));

  std::size_t i = 0;
  while (i < words.size()) {
    std::size_t advance = 1;
    for (const auto& m : split) {
      if (i + m.size() > words.size()) continue;
      if (std::equal(m.begin(), m.end(), words.begin() + static_cast<std::ptrdiff_t>(i))) {
        ++f.marker_count;
        advance = m.size();
        break;
      }
    }
    i += advance;
  }
  return f;
}

double depth_score(const TextFeatures& f) {
  const double L = static_cast<double>(f.word_count);
  const double M = static_cast<double>(f.marker_count);
  const double S = f.sentence_word_ratio;
  const double f_len = std::clamp(std::log1p(L) / std::log(51.0), 0.0, 1.0);
  const double f_reason = std::min(M / 3.0, 1.0);
  const double f_syn = 1.0 - std::exp(-S / 0.1);
  return 0.4 * f_len + 0.4 * f_reason + 0.2 * f_syn;
}

}  // namespace craft
