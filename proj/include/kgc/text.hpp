#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace kgc::text {

std::string trim(std::string_view s);

/// Unicode NFC followed by full lowercase mapping. Input is UTF-8.
std::string nfc_lower(std::string_view s);

/// Tokenizer shared by the n-gram decontaminator and similarity checks:
/// NFC, lowercase, punctuation/symbol code points mapped to spaces, split on
/// whitespace.
std::vector<std::string> tokenize(std::string_view s);

/// Normal form for duplicate-option checks: NFC, lowercase, internal
/// whitespace collapsed to one space, leading/trailing punctuation stripped.
std::string normalize_option(std::string_view s);

/// True if `s` contains a run of at least `min_run` code points that are
/// neither alphanumeric nor whitespace.
bool has_symbol_run(std::string_view s, std::size_t min_run);

/// Number of whitespace-separated tokens; the fallback token estimate.
std::size_t whitespace_tokens(std::string_view s);

bool contains_ci(std::string_view haystack, std::string_view needle);

std::size_t count_occurrences(std::string_view haystack, std::string_view needle);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

std::vector<std::string> split_lines(std::string_view s);

}  // namespace kgc::text
