#include "nys/ops.hpp"

#include <cstdlib>
#include <cstring>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace nys {

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_threads(int n) {
#ifdef _OPENMP
  static const int initial = omp_get_max_threads();
  omp_set_num_threads(n > 0 ? n : initial);
#else
  (void)n;
#endif
}

bool deterministic_env() {
  const char* v = std::getenv("NYSTROM_DETERMINISTIC");
  return v != nullptr && std::strcmp(v, "1") == 0;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  require_dims(a.cols() == b.rows(), "matmul: inner dimensions differ");
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  Matrix c(n, m);
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* pc = c.data().data();
#pragma omp parallel for schedule(static) if (n * k * m > 32768)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    double* ci = pc + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = pa[i * k + p];
      const double* bp = pb + p * m;
      for (std::size_t j = 0; j < m; ++j) ci[j] += aip * bp[j];
    }
  }
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  require_dims(a.rows() == b.rows(), "matmul_tn: inner dimensions differ");
  const std::size_t k = a.rows(), n = a.cols(), m = b.cols();
  Matrix c(n, m);
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* pc = c.data().data();
#pragma omp parallel for schedule(static) if (n * k * m > 32768)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    double* ci = pc + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double api = pa[p * n + i];
      const double* bp = pb + p * m;
      for (std::size_t j = 0; j < m; ++j) ci[j] += api * bp[j];
    }
  }
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  require_dims(a.cols() == b.cols(), "matmul_nt: inner dimensions differ");
  const std::size_t n = a.rows(), k = a.cols(), m = b.rows();
  Matrix c(n, m);
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* pc = c.data().data();
#pragma omp parallel for schedule(static) if (n * k * m > 32768)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    const double* ai = pa + i * k;
    for (std::size_t j = 0; j < m; ++j) {
      const double* bj = pb + j * k;
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += ai[p] * bj[p];
      pc[i * m + j] = s;
    }
  }
  return c;
}

Matrix column_sums(const Matrix& a) {
  Matrix s(1, a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) s(0, j) += a(i, j);
  return s;
}

namespace serial {

Matrix matmul(const Matrix& a, const Matrix& b) {
  require_dims(a.cols() == b.rows(), "matmul: inner dimensions differ");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < a.cols(); ++p) s += a(i, p) * b(p, j);
      c(i, j) = s;
    }
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  require_dims(a.rows() == b.rows(), "matmul_tn: inner dimensions differ");
  Matrix c(a.cols(), b.cols());
  for (std::size_t i = 0; i < a.cols(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < a.rows(); ++p) s += a(p, i) * b(p, j);
      c(i, j) = s;
    }
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  require_dims(a.cols() == b.cols(), "matmul_nt: inner dimensions differ");
  Matrix c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < a.cols(); ++p) s += a(i, p) * b(j, p);
      c(i, j) = s;
    }
  return c;
}

}  // namespace serial
}  // namespace nys
