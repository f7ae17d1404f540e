#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace cliniqa::text {

/// Lowercases and splits on runs of non-alphanumeric bytes.
/// "Dr. Smith-Jones" -> {"dr", "smith", "jones"}
std::vector<std::string> alnum_tokens(std::string_view s);

/// Splits on ASCII whitespace, no case folding.
std::vector<std::string> whitespace_tokens(std::string_view s);

std::size_t word_count(std::string_view s);

std::string to_lower(std::string_view s);

std::string trim(std::string_view s);

/// Edit distance over bytes (insert/delete/substitute, unit costs).
std::size_t levenshtein(std::string_view a, std::string_view b);

/// Splits prose into sentences at . ! ? followed by whitespace or end of
/// input. Terminators are dropped; fragments are trimmed. A trailing
/// fragment without a terminator still counts as a sentence.
std::vector<std::string> split_sentences(std::string_view s);

/// Joins with single spaces.
std::string join(const std::vector<std::string>& parts, std::string_view sep);

} // namespace cliniqa::text
