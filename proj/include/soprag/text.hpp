#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace soprag::text {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

/// Collapse runs of whitespace to a single space (does not trim).
std::string collapse_whitespace(std::string_view s);

/// Canonical key for entity/state labels: trim, lowercase, collapse whitespace.
std::string normalize_label(std::string_view s);

/// Replace newlines (and CR) with spaces, then collapse and trim.
std::string strip_newlines(std::string_view s);

/// Split into lines; accepts \n and \r\n, no trailing empty line for a final \n.
std::vector<std::string> split_lines(std::string_view s);

/// Whitespace-delimited tokens with leading/trailing punctuation stripped.
/// Interior punctuation (ALM-203, a_b, a/b) is preserved.
std::vector<std::string> tokenize(std::string_view s);

/// Lowercased alphanumeric runs; everything else is a separator.
std::vector<std::string> tokenize_lexical(std::string_view s);

/// True for labels that are a single character or a bare number (e.g. "7", "3.5").
bool is_trivial_label(std::string_view label);

std::uint64_t fnv1a64(std::string_view s);

void warn(const std::string& message);

} // namespace soprag::text
