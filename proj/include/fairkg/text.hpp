#pragma once

#include <string>
#include <string_view>
#include <vector>

// Small string helpers shared by the parsers and the intent matcher.
namespace fairkg::text {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
std::string collapse_whitespace(std::string_view s);

/// trim + collapse internal whitespace + ASCII case-fold. Used for entity
/// identity; display strings keep their original casing.
std::string normalize_name(std::string_view s);

std::vector<std::string> split(std::string_view s, char sep);
std::vector<std::string> split_whitespace(std::string_view s);
std::vector<std::string> split_lines(std::string_view s);

/// Lower-cased word list: camelCase humps and any non-alphanumeric
/// character act as separators ("robotModel" -> {"robot", "model"}).
std::vector<std::string> key_words(std::string_view s);

/// Drops a plural trailing 's' from words longer than three characters.
std::string stem(std::string_view word);

/// Lower-cases and replaces every non-alphanumeric run with one space.
std::string fold_for_matching(std::string_view s);

bool is_all_digits(std::string_view s);

/// "007" -> "7", "0" -> "0"; non-numeric values are returned unchanged.
std::string strip_leading_zeros(std::string_view s);

bool starts_with_icase(std::string_view s, std::string_view prefix);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

} // namespace fairkg::text
