#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace craft::utf8 {

/// Decodes UTF-8 into code points. Invalid bytes decode to U+FFFD, one per byte.
std::u32string decode(std::string_view s);

std::string encode(std::u32string_view s);

/// Unicode White_Space property.
bool is_space(char32_t c);

/// Simple lowercase mapping for the cased scripts we meet (Latin, Latin-1,
/// Latin Extended-A, Greek, Cyrillic). Uncased scripts pass through.
char32_t to_lower(char32_t c);

/// Splits on runs of Unicode whitespace; never yields empty tokens.
std::vector<std::u32string> split_whitespace(std::u32string_view s);

/// True for punctuation that may cling to a word: ASCII punctuation, general
/// punctuation, and the Arabic / Bengali marks (، ؛ ؟ ۔ । ॥).
bool is_punct(char32_t c);

/// Lowercases and strips leading/trailing punctuation. May return an empty token.
std::u32string fold_token(std::u32string_view token);

/// Collapses every whitespace run to one ASCII space and trims both ends.
std::string normalize_whitespace(std::string_view s);

}  // namespace craft::utf8
