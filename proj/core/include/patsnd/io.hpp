#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace patsnd {

// Reads a whole file into memory. Throws IoError if unreadable.
std::string read_file(const std::filesystem::path& path);

// Writes content to a temporary file in the target directory and renames it
// into place, so a failed run never leaves a partial output file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

// Collapses internal whitespace runs to single spaces and trims the ends.
std::string normalize_whitespace(std::string_view text);

}  // namespace patsnd
