#include "ldec/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <system_error>

#include "ldec/error.hpp"

namespace ldec::io {
namespace {

template <typename T>
void put_le(std::string& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
  }
}

template <typename T>
T get_le(std::span<const std::byte> bytes, std::size_t offset) {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    value |= static_cast<T>(std::to_integer<std::uint8_t>(bytes[offset + i])) << (8 * i);
  }
  return value;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start < text.size()) {
    auto pos = text.find('\n', start);
    if (pos == std::string_view::npos) pos = text.size();
    auto line = text.substr(start, pos - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    out.push_back(line);
    start = pos + 1;
  }
  return out;
}

}  // namespace

std::string encode_matrix(const Matrix& m) {
  std::string out;
  out.reserve(kMatrixHeaderBytes + 8 * static_cast<std::size_t>(m.size()));
  out.append("LDMX");
  put_le<std::uint32_t>(out, kMatrixVersion);
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      const double v = m(r, c);
      if (!std::isfinite(v)) {
        throw Error("refusing to write non-finite value at row " + std::to_string(r) + ", column " +
                    std::to_string(c));
      }
      put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
    }
  }
  return out;
}

Matrix decode_matrix(std::span<const std::byte> bytes) {
  if (bytes.size() < kMatrixHeaderBytes) {
    throw FormatError("truncated LDMX header: need " + std::to_string(kMatrixHeaderBytes) + " bytes, have " +
                          std::to_string(bytes.size()),
                      bytes.size());
  }
  if (std::memcmp(bytes.data(), "LDMX", 4) != 0) throw FormatError("bad magic, expected \"LDMX\"", 0);
  const auto version = get_le<std::uint32_t>(bytes, 4);
  if (version != kMatrixVersion) throw FormatError("unsupported LDMX version " + std::to_string(version), 4);
  const auto rows = get_le<std::uint64_t>(bytes, 8);
  const auto cols = get_le<std::uint64_t>(bytes, 16);
  const std::uint64_t payload = bytes.size() - kMatrixHeaderBytes;
  if (cols != 0 && rows > (payload / 8) / cols) {
    throw FormatError("truncated payload: header declares " + std::to_string(rows) + "x" + std::to_string(cols) +
                          " values, found " + std::to_string(payload) + " payload bytes",
                      bytes.size());
  }
  const std::uint64_t expected = rows * cols * 8;
  if (payload > expected) {
    throw FormatError("trailing bytes after payload", kMatrixHeaderBytes + expected);
  }
  Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  std::size_t offset = kMatrixHeaderBytes;
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c, offset += 8) {
      m(r, c) = std::bit_cast<double>(get_le<std::uint64_t>(bytes, offset));
    }
  }
  return m;
}

void write_matrix(const std::filesystem::path& path, const Matrix& m) { write_file_atomic(path, encode_matrix(m)); }

Matrix read_matrix(const std::filesystem::path& path) {
  const std::string data = read_file(path);
  try {
    return decode_matrix(std::as_bytes(std::span(data.data(), data.size())));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what(), e.offset());
  }
}

Matrix parse_csv_matrix(std::string_view text) {
  std::vector<std::vector<double>> rows;
  for (auto line : lines_of(text)) {
    line = trim(line);
    if (line.empty()) continue;
    std::vector<double> row;
    for (auto field : split(line, ',')) row.push_back(parse_number(trim(field), "csv value"));
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw Error("csv row " + std::to_string(rows.size() + 1) + " has " + std::to_string(row.size()) +
                  " values, expected " + std::to_string(rows.front().size()));
    }
    rows.push_back(std::move(row));
  }
  Matrix m(static_cast<Index>(rows.size()), rows.empty() ? 0 : static_cast<Index>(rows.front().size()));
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) m(r, c) = rows[r][c];
  }
  return m;
}

Matrix read_csv_matrix(const std::filesystem::path& path) { return parse_csv_matrix(read_file(path)); }

std::filesystem::path row_ids_path(const std::filesystem::path& matrix_path) {
  auto p = matrix_path;
  return p.replace_extension(".ids");
}

std::filesystem::path col_ids_path(const std::filesystem::path& matrix_path) {
  auto p = matrix_path;
  return p.replace_extension(".cols");
}

void write_ids(const std::filesystem::path& path, std::span<const std::string> ids) {
  std::string out;
  for (const auto& id : ids) {
    if (id.empty() || id.find_first_of("\n\r\t") != std::string::npos) {
      throw Error("identifier '" + id + "' is empty or contains whitespace control characters");
    }
    out += id;
    out += '\n';
  }
  write_file_atomic(path, out);
}

std::vector<std::string> read_ids(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  std::vector<std::string> ids;
  for (auto line : lines_of(text)) {
    if (line.empty()) continue;
    ids.emplace_back(line);
  }
  return ids;
}

std::size_t TsvTable::column(std::string_view name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw Error("tsv: missing column '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - header.begin());
}

TsvTable parse_tsv(std::string_view text) {
  TsvTable table;
  bool have_header = false;
  std::size_t line_no = 0;
  for (auto line : lines_of(text)) {
    ++line_no;
    if (trim(line).empty() || line.front() == '#') continue;
    std::vector<std::string> fields;
    for (auto f : split(line, '\t')) fields.emplace_back(trim(f));
    if (!have_header) {
      table.header = std::move(fields);
      have_header = true;
      continue;
    }
    // A trailing empty field (e.g. no stim_id) may be omitted entirely.
    if (fields.size() + 1 == table.header.size()) fields.emplace_back();
    if (fields.size() != table.header.size()) {
      throw Error("tsv line " + std::to_string(line_no) + ": expected " + std::to_string(table.header.size()) +
                  " fields, found " + std::to_string(fields.size()));
    }
    table.rows.push_back(std::move(fields));
  }
  if (!have_header) throw Error("tsv: missing header line");
  return table;
}

TsvTable read_tsv(const std::filesystem::path& path) {
  try {
    return parse_tsv(read_file(path));
  } catch (const FormatError&) {
    throw;
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

std::string format_tsv(const TsvTable& table) {
  std::string out;
  auto emit = [&out](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out += '\t';
      out += fields[i];
    }
    out += '\n';
  };
  emit(table.header);
  for (const auto& row : table.rows) emit(row);
  return out;
}

void write_tsv(const std::filesystem::path& path, const TsvTable& table) { write_file_atomic(path, format_tsv(table)); }

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (value == 0.0) return "0.00000";
  std::array<char, 64> buf{};
  // Round once in scientific form to learn the decimal exponent after rounding.
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value, std::chars_format::scientific, 5);
  if (ec != std::errc{}) throw Error("format_number: conversion failed");
  std::string_view sci(buf.data(), static_cast<std::size_t>(end - buf.data()));
  const int exponent = std::stoi(std::string(sci.substr(sci.find('e') + 1)));
  if (exponent < -4 || exponent >= 6) return std::string(sci);
  std::array<char, 64> fixed{};
  auto res = std::to_chars(fixed.data(), fixed.data() + fixed.size(), value, std::chars_format::fixed, 5 - exponent);
  if (res.ec != std::errc{}) throw Error("format_number: conversion failed");
  return std::string(fixed.data(), res.ptr);
}

double parse_number(std::string_view text, std::string_view what) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw Error("cannot parse " + std::string(what) + " '" + std::string(text) + "' as a number");
  }
  return value;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + tmp.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("write to '" + tmp.string() + "' failed");
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace ldec::io
