#pragma once

#include <filesystem>
#include <string>

namespace bumpvo {

/// Writes `contents` to a sibling temp file and renames it over `path`.
/// Throws IoError when the directory is not writable.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

/// Reads a whole file; throws IoError when it cannot be opened.
std::string read_file(const std::filesystem::path& path);

}  // namespace bumpvo
