#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "nys/kernels.hpp"
#include "nys/linalg.hpp"
#include "nys/matrix.hpp"

namespace nys {

// ---------------------------------------------------------------------------
// Nyström
// ---------------------------------------------------------------------------

/// The landmark subsample L together with its whitening factor K11^{-1/2}.
struct LandmarkSet {
  Matrix points;        // m×d, in the frozen feature space
  Matrix k11_inv_sqrt;  // m×m, symmetric
  KernelSpec kernel;
  std::vector<std::size_t> source_indices;
  std::uint64_t seed = 0;

  std::size_t m() const { return points.rows(); }
  std::size_t dim() const { return points.cols(); }
  /// Bytes of non-trainable storage (points plus factor).
  std::size_t memory_bytes() const { return (points.size() + k11_inv_sqrt.size()) * sizeof(double); }
};

/// Builds a LandmarkSet from explicit rows. PSD kernels use inv_sqrt_psd;
/// chi2_paper uses the |λ| variant since its Gram matrix is indefinite.
LandmarkSet make_landmarks(Matrix points, const KernelSpec& kernel, std::vector<std::size_t> source_indices,
                           std::uint64_t seed, double eps_rel = kDefaultEigClamp);

/// Per-class quotas differ by at most one; the classes that receive the
/// remainder are chosen at random. Shortfalls in small classes are filled
/// uniformly from the remaining rows and reported through `notes`.
LandmarkSet sample_landmarks_stratified(const Matrix& features, std::span<const int> labels,
                                        const KernelSpec& kernel, std::size_t m, std::uint64_t seed,
                                        std::vector<std::string>* notes = nullptr);

/// Uniform sampling without replacement; labels are never consulted.
LandmarkSet sample_landmarks_uniform(const Matrix& features, const KernelSpec& kernel, std::size_t m,
                                     std::uint64_t seed);

/// Rows of gram(kernel, x, L) · K11^{-1/2}.
Matrix nystrom_features(const LandmarkSet& ls, const Matrix& x);

/// Binary sidecar: magic, m, d, kernel text, seed, then row-major doubles for
/// points and k11_inv_sqrt, then the m source indices.
void save_landmarks(const std::filesystem::path& path, const LandmarkSet& ls);
LandmarkSet load_landmarks(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Random kitchen sinks
// ---------------------------------------------------------------------------

enum class RksActivation { trig, relu };

struct RksProjection {
  Matrix mat;  // q×d, entries N(0, 2·gamma)
  RksActivation activation = RksActivation::trig;

  std::size_t q() const { return mat.rows(); }
  std::size_t dim() const { return mat.cols(); }
};

RksProjection make_rks(std::size_t d, std::size_t q, double gamma, std::uint64_t seed,
                       RksActivation activation = RksActivation::trig);

/// trig: (1/√q)[cos(Qx) ‖ sin(Qx)], b×2q.  relu: √(2/q)·max(0, Qx), b×q.
Matrix rks_features(const RksProjection& p, const Matrix& x);

// ---------------------------------------------------------------------------
// Fastfood
// ---------------------------------------------------------------------------

/// One structured block V = 1/(σ√d) · S H G Π H B, with d = d_pad.
struct FastfoodBlock {
  std::size_t d_pad = 0;
  Vector s_diag, g_diag, b_diag;
  std::vector<std::size_t> perm;  // (Π u)_i = u[perm[i]]
  double sigma = 1.0;

  double scale() const;
};

/// Gaussian-kernel bandwidth σ matching exp(-gamma ||x-y||^2).
inline double fastfood_sigma_for_gamma(double gamma) { return 1.0 / std::sqrt(2.0 * gamma); }

FastfoodBlock make_fastfood(std::size_t d, double sigma, std::uint64_t seed);

/// Rows of V x (b×d_pad) through two Walsh-Hadamard transforms; V is never formed.
Matrix fastfood_project(const FastfoodBlock& block, const Matrix& x);

/// Stacked trig features, b × 2·d_pad·|blocks|, scaled by 1/√(d_pad·|blocks|).
Matrix fastfood_features(std::span<const FastfoodBlock> blocks, const Matrix& x);

}  // namespace nys
