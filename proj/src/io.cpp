#include "nys/io.hpp"

#include <vector>

namespace nys::binio {

void write_string(std::ostream& out, const std::string& s) {
  write<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in, const char* what) {
  const auto len = read<std::uint32_t>(in, what);
  if (len > (1u << 20)) throw FormatError(std::string("implausible string length in ") + what);
  std::string s(len, '\0');
  in.read(s.data(), len);
  if (in.gcount() != static_cast<std::streamsize>(len))
    throw TruncatedError(std::string("truncated file while reading ") + what);
  return s;
}

void write_doubles(std::ostream& out, std::span<const double> v) {
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size_bytes()));
}

void read_doubles(std::istream& in, std::span<double> v, const char* what) {
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size_bytes()));
  if (in.gcount() != static_cast<std::streamsize>(v.size_bytes()))
    throw TruncatedError(std::string("truncated file while reading ") + what);
}

void write_matrix(std::ostream& out, const Matrix& m) {
  write<std::uint64_t>(out, m.rows());
  write<std::uint64_t>(out, m.cols());
  write_doubles(out, m.data());
}

Matrix read_matrix(std::istream& in, const char* what) {
  const auto rows = read<std::uint64_t>(in, what);
  const auto cols = read<std::uint64_t>(in, what);
  if (rows > (1ull << 32) || cols > (1ull << 32) || rows * cols > (1ull << 34))
    throw FormatError(std::string("implausible matrix shape in ") + what);
  Matrix m(rows, cols);
  read_doubles(in, m.data(), what);
  return m;
}

void write_magic(std::ostream& out, std::string_view magic) {
  out.write(magic.data(), static_cast<std::streamsize>(magic.size()));
}

void expect_magic(std::istream& in, std::string_view magic, const char* what) {
  std::vector<char> buf(magic.size());
  in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (in.gcount() != static_cast<std::streamsize>(buf.size()))
    throw TruncatedError(std::string("truncated header in ") + what);
  if (std::string_view(buf.data(), buf.size()) != magic)
    throw BadMagicError(std::string("bad magic in ") + what);
}

}  // namespace nys::binio
