#pragma once

#include <filesystem>
#include <initializer_list>
#include <string>
#include <string_view>

namespace meanfield {

/// Shortest-independent fixed format: 17 significant digits, '.' decimal,
/// locale-free. NaN is written as "nan".
std::string format_double(double value);

/// Accumulates an RFC-4180 document in memory.
class CsvDocument {
 public:
  explicit CsvDocument(std::initializer_list<std::string_view> header);

  CsvDocument& field(std::string_view text);
  CsvDocument& field(double value);
  CsvDocument& field(long long value);
  CsvDocument& end_row();

  const std::string& str() const { return text_; }

 private:
  void separator();

  std::string text_;
  bool row_open_ = false;
};

/// Writes `content` to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace meanfield
