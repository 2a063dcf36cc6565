#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace hyptimes {

// Shortest 17-significant-digit decimal form; round-trips any double.
std::string fmt_g17(double v);

// Writes content to path atomically (temp file in the same directory,
// then rename).  Creates parent directories.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

// Minimal CSV builder: comma separator, '.' decimal point, LF line ends,
// doubles at 17 significant digits.
class CsvBuilder {
 public:
  explicit CsvBuilder(std::vector<std::string> header);

  void add_row(const std::vector<std::string>& cells);
  std::string cell(double v) const { return fmt_g17(v); }
  std::string cell(std::int64_t v) const { return std::to_string(v); }

  const std::string& str() const { return out_; }

 private:
  std::size_t columns_;
  std::string out_;
};

}  // namespace hyptimes
