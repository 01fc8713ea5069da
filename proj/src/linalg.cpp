#include "nys/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nys/ops.hpp"

namespace nys {

namespace {

void check_symmetric(const Matrix& a) {
  require_dims(a.rows() == a.cols(), "sym_eig: matrix is not square");
  const double tol = 1e-10 * std::max(max_abs(a), 1e-300);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i + 1; j < a.cols(); ++j)
      if (std::abs(a(i, j) - a(j, i)) > tol)
        throw NotSymmetricError("sym_eig: matrix is not symmetric");
}

double off_diagonal_sq(const Matrix& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (i != j) s += a(i, j) * a(i, j);
  return s;
}

}  // namespace

EigenDecomposition sym_eig(const Matrix& input) {
  check_symmetric(input);
  const std::size_t n = input.rows();
  Matrix a = input;
  // Symmetrize exactly so the rotations see a truly symmetric matrix.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) a(i, j) = a(j, i) = 0.5 * (a(i, j) + a(j, i));
  Matrix v = Matrix::identity(n);

  const double scale = frobenius(a);
  const double target = (1e-16 * scale) * (1e-16 * scale);
  for (int sweep = 0; sweep < 100; ++sweep) {
    const double off = off_diagonal_sq(a);
    if (off == 0.0 || off <= target) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        // Off-diagonal entry below the diagonal's rounding: drop it.
        const double g = 100.0 * std::abs(apq);
        if (sweep > 3 && std::abs(a(p, p)) + g == std::abs(a(p, p)) &&
            std::abs(a(q, q)) + g == std::abs(a(q, q))) {
          a(p, q) = a(q, p) = 0.0;
          continue;
        }
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });
  EigenDecomposition out{Vector(n), Matrix(n, n)};
  for (std::size_t j = 0; j < n; ++j) {
    out.values[j] = a(order[j], order[j]);
    for (std::size_t k = 0; k < n; ++k) out.vectors(k, j) = v(k, order[j]);
  }
  return out;
}

Matrix spectral_compose(const EigenDecomposition& eig, std::span<const double> weights) {
  const std::size_t n = eig.values.size();
  require_dims(weights.size() == n, "spectral_compose: weight count mismatch");
  Matrix scaled = eig.vectors;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) scaled(i, j) *= weights[j];
  Matrix out = matmul_nt(scaled, eig.vectors);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) out(i, j) = out(j, i) = 0.5 * (out(i, j) + out(j, i));
  return out;
}

Matrix inv_sqrt_psd(const Matrix& a, double eps_rel) {
  const auto eig = sym_eig(a);
  if (eig.values.empty()) return {};
  const double lmax = eig.values.front();
  const double lmin = eig.values.back();
  if (lmin < -1e-6 * std::max(lmax, 0.0) || (lmax <= 0.0 && lmin < 0.0))
    throw NotPsdError("inv_sqrt_psd: matrix has a significantly negative eigenvalue (" +
                      std::to_string(lmin) + ", max " + std::to_string(lmax) + ")");
  Vector w(eig.values.size(), 0.0);
  for (std::size_t j = 0; j < w.size(); ++j) {
    const double l = eig.values[j];
    if (l > eps_rel * lmax && l > 0.0) w[j] = 1.0 / std::sqrt(l);
  }
  return spectral_compose(eig, w);
}

Matrix inv_sqrt_abs(const Matrix& a, double eps_rel) {
  const auto eig = sym_eig(a);
  if (eig.values.empty()) return {};
  double lmax = 0.0;
  for (double l : eig.values) lmax = std::max(lmax, std::abs(l));
  Vector w(eig.values.size(), 0.0);
  for (std::size_t j = 0; j < w.size(); ++j) {
    const double l = std::abs(eig.values[j]);
    if (l > eps_rel * lmax && l > 0.0) w[j] = 1.0 / std::sqrt(l);
  }
  return spectral_compose(eig, w);
}

std::size_t next_power_of_two(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

void fwht_inplace(std::span<double> v) {
  const std::size_t n = v.size();
  require_dims(is_power_of_two(n), "fwht: length " + std::to_string(n) + " is not a power of two");
  for (std::size_t h = 1; h < n; h <<= 1) {
    for (std::size_t i = 0; i < n; i += 2 * h) {
      for (std::size_t j = i; j < i + h; ++j) {
        const double x = v[j], y = v[j + h];
        v[j] = x + y;
        v[j + h] = x - y;
      }
    }
  }
}

Vector fwht(Vector v) {
  fwht_inplace(v);
  return v;
}

void fwht_rows(Matrix& a) {
  require_dims(is_power_of_two(a.cols()), "fwht_rows: row length is not a power of two");
#pragma omp parallel for schedule(static) if (a.rows() * a.cols() > 16384)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(a.rows()); ++i)
    fwht_inplace(a.row(static_cast<std::size_t>(i)));
}

namespace serial {
void fwht_rows(Matrix& a) {
  for (std::size_t i = 0; i < a.rows(); ++i) fwht_inplace(a.row(i));
}
}  // namespace serial

}  // namespace nys
