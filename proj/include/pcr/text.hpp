#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace pcr::text {

std::string_view trim(std::string_view s);
std::string trim_copy(std::string_view s);
std::string to_lower(std::string_view s);

// Splits on '\n'. A trailing newline does not produce an empty last line;
// "\r" before the newline is kept as part of the line.
std::vector<std::string> split_lines(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

bool starts_with(std::string_view s, std::string_view prefix);
bool ends_with(std::string_view s, std::string_view suffix);
bool contains(std::string_view s, std::string_view needle);

bool is_identifier(std::string_view s);
// Dot-separated identifiers, at least two segments.
bool is_qualified_name(std::string_view s);

// Lowercase hex SHA-256 of the bytes of `s`.
std::string sha256_hex(std::string_view s);

std::string read_file(const std::string& path);
// Writes via a sibling temporary file and rename, so readers never observe a
// partially written file.
void write_file_atomic(const std::string& path, std::string_view contents);

}  // namespace pcr::text
