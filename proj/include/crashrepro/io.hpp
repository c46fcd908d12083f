#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace crashrepro {

std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temporary file and renames it over `path`, so readers
// never observe a partially written file. Creates parent directories.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace crashrepro
