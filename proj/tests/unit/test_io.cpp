#include <doctest.h>

#include <cstdio>
#include <cstring>
#include <random>

#include "helpers.hpp"
#include "ldec/io.hpp"
#include "oracles.hpp"

using namespace ldec;

namespace {

std::span<const std::byte> as_bytes(const std::string& s) {
  return {reinterpret_cast<const std::byte*>(s.data()), s.size()};
}

std::size_t offset_of(const std::string& bytes) {
  try {
    io::decode_matrix(as_bytes(bytes));
  } catch (const FormatError& e) {
    return e.offset();
  }
  return static_cast<std::size_t>(-1);
}

}  // namespace

TEST_CASE("matrix container round-trips bit for bit") {
  std::mt19937_64 rng(7);
  const Matrix m = oracle::random_matrix(100, 7, rng);
  testing::TempDir dir("io");
  io::write_matrix(dir / "m.ldmx", m);
  const Matrix back = io::read_matrix(dir / "m.ldmx");
  REQUIRE(back.rows() == 100);
  REQUIRE(back.cols() == 7);
  CHECK(std::memcmp(back.data(), m.data(), sizeof(double) * 700) == 0);
  CHECK(io::encode_matrix(back) == io::encode_matrix(m));
  CHECK_FALSE(std::filesystem::exists(dir / "m.ldmx.tmp"));
}

TEST_CASE("container header layout is little-endian and row-major") {
  Matrix m(2, 3);
  m << 1, 2, 3, 4, 5, 6;
  const auto bytes = io::encode_matrix(m);
  REQUIRE(bytes.size() == 24 + 48);
  CHECK(bytes.substr(0, 4) == "LDMX");
  CHECK(static_cast<unsigned char>(bytes[4]) == 1);
  CHECK(static_cast<unsigned char>(bytes[8]) == 2);
  CHECK(static_cast<unsigned char>(bytes[16]) == 3);
  double second = 0;
  std::memcpy(&second, bytes.data() + 32, 8);
  CHECK(second == 2.0);  // row-major: (0,1) follows (0,0)
}

TEST_CASE("empty and single-element matrices round-trip") {
  const Matrix empty(0, 5);
  CHECK(io::decode_matrix(as_bytes(io::encode_matrix(empty))).cols() == 5);
  Matrix one(1, 1);
  one << -0.0;
  const Matrix back = io::decode_matrix(as_bytes(io::encode_matrix(one)));
  CHECK(std::signbit(back(0, 0)));
}

TEST_CASE("malformed containers report byte offsets") {
  Matrix m = Matrix::Constant(3, 4, 1.5);
  const auto good = io::encode_matrix(m);

  auto bad_magic = good;
  bad_magic[0] = 'X';
  CHECK(offset_of(bad_magic) == 0);

  auto bad_version = good;
  bad_version[4] = 2;
  CHECK(offset_of(bad_version) == 4);

  const auto truncated = good.substr(0, good.size() - 3);
  CHECK(offset_of(truncated) == truncated.size());
  CHECK(testing::throws_with([&] { io::decode_matrix(as_bytes(truncated)); }, "byte offset"));

  CHECK(offset_of(good.substr(0, 10)) == 10);
  CHECK(offset_of(good + "zz") == good.size());

  // Huge declared shape must not overflow the size check.
  auto huge = good;
  for (int i = 8; i < 24; ++i) huge[i] = static_cast<char>(0xff);
  CHECK(offset_of(huge) == huge.size());
}

TEST_CASE("non-finite values are refused on write") {
  Matrix m = Matrix::Zero(2, 2);
  m(1, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK(testing::throws_with([&] { io::encode_matrix(m); }, "non-finite"));
}

TEST_CASE("csv import matches the binary container exactly") {
  std::mt19937_64 rng(11);
  const Matrix m = oracle::random_matrix(20, 5, rng);
  std::string csv;
  char buf[64];
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", m(r, c));
      csv += (c ? "," : "") + std::string(buf);
    }
    csv += "\n";
  }
  const Matrix parsed = io::parse_csv_matrix(csv);
  CHECK(io::encode_matrix(parsed) == io::encode_matrix(m));
  CHECK_THROWS_AS(io::parse_csv_matrix("1,2\n3\n"), Error);
  CHECK_THROWS_AS(io::parse_csv_matrix("1,abc\n"), Error);
}

TEST_CASE("number formatting keeps six significant digits") {
  CHECK(io::format_number(1.0) == "1.00000");
  CHECK(io::format_number(0.0) == "0.00000");
  CHECK(io::format_number(-2.5) == "-2.50000");
  CHECK(io::format_number(0.123456789) == "0.123457");
  CHECK(io::format_number(123456.0) == "123456");
  CHECK(io::format_number(1234567.0) == "1.23457e+06");
  CHECK(io::format_number(0.0000123) == "1.23000e-05");
  CHECK(io::format_number(0.0001) == "0.000100000");
  CHECK(io::format_number(9.999996) == "10.0000");
  CHECK(io::format_number(std::ldexp(1.0, -20)) == "9.53674e-07");
  CHECK(io::parse_number(" 2.5 ", "x") == 2.5);
  CHECK_THROWS_AS(io::parse_number("2.5x", "x"), Error);
}

TEST_CASE("tsv parsing tolerates comments and an omitted trailing empty field") {
  const auto t = io::parse_tsv("# note\na\tb\tc\n1\t2\t3\n4\t5\n\n");
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[1][2].empty());
  CHECK(t.column("c") == 2);
  CHECK_THROWS_AS(t.column("d"), Error);
  CHECK_THROWS_AS(io::parse_tsv("a\tb\n1\t2\t3\n"), Error);
  CHECK(io::parse_tsv(io::format_tsv(t)).rows == t.rows);
}

TEST_CASE("id sidecars round-trip and reject blanks") {
  testing::TempDir dir("ids");
  const std::vector<std::string> ids{"a", "b_2", "c-3"};
  io::write_ids(dir / "x.ids", ids);
  CHECK(io::read_ids(dir / "x.ids") == ids);
  CHECK(io::row_ids_path("d/m.ldmx") == std::filesystem::path("d/m.ids"));
  CHECK(io::col_ids_path("d/m.ldmx") == std::filesystem::path("d/m.cols"));
  const std::vector<std::string> bad{"a\tb"};
  CHECK_THROWS_AS(io::write_ids(dir / "y.ids", bad), Error);
}
