#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace glean {

// Whole-file read; strips a UTF-8 BOM if present. Throws Errc::io.
std::string read_file(const std::filesystem::path& path);

// Write via temp file + rename so readers never observe a partial file.
void write_file_atomic(const std::filesystem::path& path,
                       std::string_view content);

void append_line(const std::filesystem::path& path, std::string_view line);

// One JSON value per line. Blank lines are skipped; parse errors carry the
// 1-based line number. Throws Errc::io / Errc::parse.
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);

std::string to_jsonl(const std::vector<nlohmann::json>& rows);

// Plain text lines, trimmed; blank lines and '#' comments are skipped.
std::vector<std::string> read_lines(const std::filesystem::path& path);

}  // namespace glean
