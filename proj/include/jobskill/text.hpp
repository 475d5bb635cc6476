#pragma once

// Small string, CSV and file helpers shared by every module.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace jobskill {

std::string to_lower_ascii(std::string_view s);
std::string_view trim(std::string_view s);
// Casefold, trim and collapse internal whitespace runs to one space.
std::string normalize_text(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

// Shortest decimal string that parses back to the same double.
std::string format_double(double v);
// Fixed-point rendering with the given number of decimals.
std::string format_fixed(double v, int decimals);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

std::string sha256_hex(std::string_view data);

namespace csv {

// RFC 4180 reader: quoted fields, doubled quotes, embedded newlines.
std::vector<std::vector<std::string>> parse(std::string_view text);

std::string escape(std::string_view field);
std::string join_row(const std::vector<std::string>& fields);

}  // namespace csv

}  // namespace jobskill
