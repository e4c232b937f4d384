/// @file text_util.hpp
/// @brief Small string helpers used by the response parsers.

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace revieweval::text {

std::string_view trim(std::string_view s) noexcept;
std::string to_lower(std::string_view s);

/// Splits on '\n', trims each line and drops empty ones.
std::vector<std::string> nonempty_lines(std::string_view s);

/// Removes a leading enumeration marker: "1.", "2)", "a)", "(b)", "-", "*", "•".
std::string_view strip_list_marker(std::string_view line) noexcept;

/// Number of whitespace-delimited words.
std::size_t count_words(std::string_view s) noexcept;

/// Lower-cases and strips surrounding whitespace, quotes, asterisks and
/// trailing punctuation; used to read single-word categorical answers.
std::string normalize_label(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// Lower-case hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

}  // namespace revieweval::text
