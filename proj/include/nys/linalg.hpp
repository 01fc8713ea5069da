#pragma once

#include <span>

#include "nys/matrix.hpp"

namespace nys {

class NotSymmetricError : public Error {
 public:
  using Error::Error;
};

class NotPsdError : public Error {
 public:
  using Error::Error;
};

struct EigenDecomposition {
  Vector values;   // descending
  Matrix vectors;  // column j pairs with values[j]
};

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Throws DimensionError for non-square input and NotSymmetricError when
/// any |a_ij - a_ji| exceeds 1e-10 * max|a|.
EigenDecomposition sym_eig(const Matrix& a);

inline constexpr double kDefaultEigClamp = 1e-6;

/// Pseudo-inverse square root of a PSD matrix: U diag(f(λ)) Uᵀ with
/// f(λ) = λ^{-1/2} for λ > eps_rel·λmax and 0 otherwise.
/// Throws NotPsdError if some eigenvalue is below -1e-6·λmax.
Matrix inv_sqrt_psd(const Matrix& a, double eps_rel = kDefaultEigClamp);

/// Same spectral construction using |λ|, for symmetric but indefinite
/// matrices (Gram matrices of non-PSD similarity functions).
Matrix inv_sqrt_abs(const Matrix& a, double eps_rel = kDefaultEigClamp);

/// U diag(f(λ)) Uᵀ for the given decomposition and per-eigenvalue weights.
Matrix spectral_compose(const EigenDecomposition& eig, std::span<const double> weights);

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }
std::size_t next_power_of_two(std::size_t n);

/// In-place unnormalized Walsh-Hadamard transform (Sylvester ordering,
/// entries ±1). Length must be a power of two.
void fwht_inplace(std::span<double> v);
Vector fwht(Vector v);
/// Transforms every row of `a` in place; rows are processed in parallel.
void fwht_rows(Matrix& a);

namespace serial {
void fwht_rows(Matrix& a);
}

}  // namespace nys
