#pragma once

#include "nys/matrix.hpp"

// Matrix products. The top-level versions are OpenMP-parallel over output
// rows; nys::serial holds the plain triple-loop references they are tested
// against. Every output entry is accumulated in ascending k order in both
// versions, so results do not depend on the thread count.

namespace nys {

/// Number of OpenMP threads kernels will use (1 when built without OpenMP).
int max_threads();
/// Sets the kernel thread count; n <= 0 restores the runtime default.
void set_threads(int n);
/// True when NYSTROM_DETERMINISTIC=1 is set in the environment.
bool deterministic_env();

/// a (n×k) · b (k×m)
Matrix matmul(const Matrix& a, const Matrix& b);
/// aᵀ (n×k) · b (k×m), with a stored k×n
Matrix matmul_tn(const Matrix& a, const Matrix& b);
/// a (n×k) · bᵀ (k×m), with b stored m×k
Matrix matmul_nt(const Matrix& a, const Matrix& b);

/// Column sums of a, as a 1×cols matrix.
Matrix column_sums(const Matrix& a);

namespace serial {
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix matmul_nt(const Matrix& a, const Matrix& b);
}  // namespace serial

}  // namespace nys
