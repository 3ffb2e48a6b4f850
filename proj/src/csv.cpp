#include "meanfield/csv.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <system_error>

#include "meanfield/errors.hpp"

namespace meanfield {

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  std::array<char, 64> buf{};
  const auto res =
      std::to_chars(buf.data(), buf.data() + buf.size(), value, std::chars_format::general, 17);
  return std::string(buf.data(), res.ptr);
}

CsvDocument::CsvDocument(std::initializer_list<std::string_view> header) {
  for (auto h : header) field(h);
  end_row();
}

void CsvDocument::separator() {
  if (row_open_) text_.push_back(',');
  row_open_ = true;
}

CsvDocument& CsvDocument::field(std::string_view text) {
  separator();
  if (text.find_first_of(",\"\r\n") == std::string_view::npos) {
    text_.append(text);
    return *this;
  }
  text_.push_back('"');
  for (char c : text) {
    if (c == '"') text_.push_back('"');
    text_.push_back(c);
  }
  text_.push_back('"');
  return *this;
}

CsvDocument& CsvDocument::field(double value) { return field(std::string_view(format_double(value))); }

CsvDocument& CsvDocument::field(long long value) { return field(std::string_view(std::to_string(value))); }

CsvDocument& CsvDocument::end_row() {
  text_.append("\r\n");
  row_open_ = false;
  return *this;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("cannot rename " + tmp.string() + " to " + path.string() + ": " +
                             ec.message());
  }
}

}  // namespace meanfield
