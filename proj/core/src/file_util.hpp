#pragma once

#include <filesystem>
#include <string_view>

namespace osa::detail {

// Writes to a sibling temporary and renames over `path`, so a failure
// never leaves a truncated artifact behind.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace osa::detail
