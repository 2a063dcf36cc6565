#include "hyptimes/io.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace hyptimes {

std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

CsvBuilder::CsvBuilder(std::vector<std::string> header) : columns_(header.size()) {
  add_row(header);
}

void CsvBuilder::add_row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_) throw std::logic_error("csv row width mismatch");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i > 0) out_ += ',';
    out_ += cells[i];
  }
  out_ += '\n';
}

}  // namespace hyptimes
