#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace osa {

// Writes via a sibling temporary and a rename, creating parent directories.
void write_text_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_text(const std::filesystem::path& path);

}  // namespace osa
