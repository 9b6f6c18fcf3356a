#include "file_util.hpp"

#include "osa/error.hpp"
#include "osa/file_io.hpp"

#include <fstream>
#include <sstream>
#include <system_error>

namespace osa::detail {

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) {
      out.close();
      std::error_code ec;
      fs::remove(tmp, ec);
      throw FormatError("write failed for " + path.string());
    }
  }
  fs::rename(tmp, path);
}

}  // namespace osa::detail

namespace osa {

void write_text_atomic(const std::filesystem::path& path, std::string_view content) {
  detail::write_file_atomic(path, content);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace osa
