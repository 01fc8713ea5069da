#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "nys/matrix.hpp"

namespace nys {

class KernelDomainError : public Error {
 public:
  using Error::Error;
};

class KernelParseError : public Error {
 public:
  using Error::Error;
};

class DegenerateDataError : public Error {
 public:
  using Error::Error;
};

enum class KernelKind { linear, rbf, chi2_exp, chi2_paper };

/// Kernel function descriptor. For rbf, k(x, y) = exp(-gamma ||x - y||^2),
/// i.e. gamma = 1/sigma in the exp(-||x - y||^2 / sigma) parameterization.
/// chi2_exp is the exponentiated additive chi-square kernel; chi2_paper is
/// the bare sum  Σ (x_i - y_i)^2 / (x_i + y_i + eps), which is not PSD.
struct KernelSpec {
  KernelKind kind = KernelKind::linear;
  double gamma = 1.0;
  double epsilon = 1e-8;

  static KernelSpec linear() { return {KernelKind::linear, 1.0, 1e-8}; }
  static KernelSpec rbf(double gamma) { return {KernelKind::rbf, gamma, 1e-8}; }
  static KernelSpec chi2_exp(double gamma) { return {KernelKind::chi2_exp, gamma, 1e-8}; }
  static KernelSpec chi2_paper() { return {KernelKind::chi2_paper, 1.0, 1e-8}; }

  bool uses_gamma() const { return kind == KernelKind::rbf || kind == KernelKind::chi2_exp; }
  bool requires_nonnegative() const {
    return kind == KernelKind::chi2_exp || kind == KernelKind::chi2_paper;
  }
  bool is_psd() const { return kind != KernelKind::chi2_paper; }

  friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

/// Canonical text: `linear`, `rbf:gamma=<g>`, `chi2exp:gamma=<g>`, `chi2paper`.
std::string to_string(const KernelSpec& spec);
KernelSpec parse_kernel(std::string_view text);
/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

namespace detail {

inline double kernel_unchecked(const KernelSpec& spec, const double* x, const double* y, std::size_t d) {
  switch (spec.kind) {
    case KernelKind::linear: {
      double s = 0.0;
      for (std::size_t i = 0; i < d; ++i) s += x[i] * y[i];
      return s;
    }
    case KernelKind::rbf: {
      double s = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        const double t = x[i] - y[i];
        s += t * t;
      }
      return std::exp(-spec.gamma * s);
    }
    case KernelKind::chi2_exp:
    case KernelKind::chi2_paper: {
      double s = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        const double t = x[i] - y[i];
        s += t * t / (x[i] + y[i] + spec.epsilon);
      }
      return spec.kind == KernelKind::chi2_exp ? std::exp(-spec.gamma * s) : s;
    }
  }
  return 0.0;
}

}  // namespace detail

/// Validates the spec's parameters (gamma > 0 where used, epsilon > 0).
void validate(const KernelSpec& spec);

double kernel_eval(const KernelSpec& spec, std::span<const double> x, std::span<const double> y);

/// Gram matrix: out(i, j) = k(a_i, b_j). Rows are computed in parallel.
Matrix gram(const KernelSpec& spec, const Matrix& a, const Matrix& b);

namespace serial {
Matrix gram(const KernelSpec& spec, const Matrix& a, const Matrix& b);
}

std::size_t default_heuristic_pairs(std::size_t n);

/// gamma = 1 / mean ||x_i - x_j||^2 over `pairs` distinct index pairs drawn
/// with `seed`. Throws DegenerateDataError when the mean is zero.
double bandwidth_heuristic(const Matrix& features, std::size_t pairs, std::uint64_t seed);

/// Same construction with the chi-square distance Σ (x-y)^2/(x+y+eps), for
/// picking the chi2_exp gamma.
double chi2_bandwidth_heuristic(const Matrix& features, std::size_t pairs, std::uint64_t seed,
                                double epsilon = 1e-8);

}  // namespace nys
