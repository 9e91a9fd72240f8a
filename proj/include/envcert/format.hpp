#pragma once

#include <filesystem>
#include <string>

namespace envcert {

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

/// Writes `contents` to a sibling temporary file and renames it over `path`,
/// so readers never observe a partially written artifact.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace envcert
