#include "nys/matrix.hpp"

#include <algorithm>
#include <cmath>

namespace nys {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  require_dims(data_.size() == rows_ * cols_, "Matrix: data length != rows * cols");
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    require_dims(r.size() == cols_, "Matrix: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> diag) {
  Matrix m(diag.size(), diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  return m;
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

Matrix gather_rows(const Matrix& a, std::span<const std::size_t> idx) {
  Matrix out(idx.size(), a.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    require_dims(idx[r] < a.rows(), "gather_rows: index out of range");
    auto src = a.row(idx[r]);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

Matrix slice_cols(const Matrix& a, std::size_t begin, std::size_t end) {
  require_dims(begin <= end && end <= a.cols(), "slice_cols: bad column range");
  Matrix out(a.rows(), end - begin);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = begin; j < end; ++j) out(i, j - begin) = a(i, j);
  return out;
}

Matrix hconcat(std::span<const Matrix> parts) {
  if (parts.empty()) return {};
  std::size_t rows = parts[0].rows();
  std::size_t cols = 0;
  for (const auto& p : parts) {
    require_dims(p.rows() == rows, "hconcat: row count mismatch");
    cols += p.cols();
  }
  Matrix out(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    std::size_t off = 0;
    for (const auto& p : parts) {
      auto src = p.row(i);
      std::copy(src.begin(), src.end(), out.row(i).begin() + static_cast<std::ptrdiff_t>(off));
      off += p.cols();
    }
  }
  return out;
}

double max_abs(const Matrix& a) {
  double m = 0.0;
  for (double v : a.data()) m = std::max(m, std::abs(v));
  return m;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require_dims(a.rows() == b.rows() && a.cols() == b.cols(), "max_abs_diff: shape mismatch");
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a.data()[k] - b.data()[k]));
  return m;
}

double frobenius(const Matrix& a) {
  double s = 0.0;
  for (double v : a.data()) s += v * v;
  return std::sqrt(s);
}

}  // namespace nys
