#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace adaptui {

// Writes to a sibling temp file and renames it over `path`, so readers see
// either the old or the new content.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

// Throws Error(kNotFound) when the file does not exist.
std::string read_file(const std::filesystem::path& path);

// Appends one line and flushes.
void append_line(const std::filesystem::path& path, std::string_view line);

}  // namespace adaptui
