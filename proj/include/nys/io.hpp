#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>

#include "nys/matrix.hpp"

namespace nys {

class FormatError : public Error {
 public:
  using Error::Error;
};
class BadMagicError : public FormatError {
 public:
  using FormatError::FormatError;
};
class TruncatedError : public FormatError {
 public:
  using FormatError::FormatError;
};
class NonNumericError : public FormatError {
 public:
  using FormatError::FormatError;
};
class EmptyDatasetError : public FormatError {
 public:
  using FormatError::FormatError;
};
class FileError : public Error {
 public:
  using Error::Error;
};

namespace binio {

// Native little-endian layout for our own sidecar/checkpoint files.

template <typename T>
  requires std::is_trivially_copyable_v<T>
void write(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
  requires std::is_trivially_copyable_v<T>
T read(std::istream& in, const char* what) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (in.gcount() != static_cast<std::streamsize>(sizeof(T)))
    throw TruncatedError(std::string("truncated file while reading ") + what);
  return v;
}

void write_string(std::ostream& out, const std::string& s);
std::string read_string(std::istream& in, const char* what);

void write_doubles(std::ostream& out, std::span<const double> v);
void read_doubles(std::istream& in, std::span<double> v, const char* what);

/// Shape header (u64 rows, u64 cols) followed by row-major doubles.
void write_matrix(std::ostream& out, const Matrix& m);
Matrix read_matrix(std::istream& in, const char* what);

void write_magic(std::ostream& out, std::string_view magic);
void expect_magic(std::istream& in, std::string_view magic, const char* what);

}  // namespace binio
}  // namespace nys
