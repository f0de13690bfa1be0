#pragma once
// File formats shared by the library and the command-line tool.
//
// LDMX matrix container (all integers little-endian):
//   offset 0   4 bytes   ASCII "LDMX"
//   offset 4   u32       version, always 1
//   offset 8   u64       n_rows
//   offset 16  u64       n_cols
//   offset 24  f64[]     row-major payload, n_rows * n_cols values
//
// Row and column labels live in newline-separated sidecars next to the
// matrix: "name.ldmx" pairs with "name.ids" (rows) and "name.cols" (columns).

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ldec/types.hpp"

namespace ldec::io {

inline constexpr std::uint32_t kMatrixVersion = 1;
inline constexpr std::size_t kMatrixHeaderBytes = 24;

std::string encode_matrix(const Matrix& m);
Matrix decode_matrix(std::span<const std::byte> bytes);

void write_matrix(const std::filesystem::path& path, const Matrix& m);
Matrix read_matrix(const std::filesystem::path& path);

// Comma-separated numeric text, one matrix row per line. Values are parsed
// with exact round-to-nearest conversion.
Matrix read_csv_matrix(const std::filesystem::path& path);
Matrix parse_csv_matrix(std::string_view text);

std::filesystem::path row_ids_path(const std::filesystem::path& matrix_path);
std::filesystem::path col_ids_path(const std::filesystem::path& matrix_path);

void write_ids(const std::filesystem::path& path, std::span<const std::string> ids);
std::vector<std::string> read_ids(const std::filesystem::path& path);

struct TsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Column position by header name; throws when absent.
  std::size_t column(std::string_view name) const;
};

TsvTable parse_tsv(std::string_view text);
TsvTable read_tsv(const std::filesystem::path& path);
std::string format_tsv(const TsvTable& table);
void write_tsv(const std::filesystem::path& path, const TsvTable& table);

// Six significant digits, shortest form, independent of the C locale.
std::string format_number(double value);
double parse_number(std::string_view text, std::string_view what);

std::string read_file(const std::filesystem::path& path);
// Writes to a sibling temporary file and renames it over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace ldec::io
