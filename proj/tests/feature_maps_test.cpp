#include <gtest/gtest.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <filesystem>
#include <map>
#include <fstream>
#include <set>

#include "nys/feature_maps.hpp"
#include "nys/io.hpp"
#include "nys/ops.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace nys;
using test::max_diff;
using test::naive_mul;
using test::naive_t;
using test::dense_v;
using test::mean_kernel_error;

namespace {

std::vector<int> balanced_labels(std::size_t n, int c) {
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<int>(i % static_cast<std::size_t>(c));
  return y;
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

}  // namespace

// --- landmarks ------------------------------------------------------------

TEST(Landmarks, StratifiedDivisibleCase) {
  const Matrix x = test::normal_matrix(100, 4, 1);
  const auto y = balanced_labels(100, 10);
  const LandmarkSet ls = sample_landmarks_stratified(x, y, KernelSpec::rbf(0.1), 20, 5);
  std::map<int, int> per_class;
  for (std::size_t i : ls.source_indices) ++per_class[y[i]];
  ASSERT_EQ(per_class.size(), 10u);
  for (const auto& [c, n] : per_class) EXPECT_EQ(n, 2) << "class " << c;
  EXPECT_EQ(std::set<std::size_t>(ls.source_indices.begin(), ls.source_indices.end()).size(), 20u);
}

TEST(Landmarks, StratifiedRemainderQuotasDifferByOne) {
  const Matrix x = test::normal_matrix(200, 3, 2);
  const auto y = balanced_labels(200, 10);
  for (std::size_t m : {2, 7, 13, 29}) {
    const LandmarkSet ls = sample_landmarks_stratified(x, y, KernelSpec::linear(), m, 9 + m);
    std::vector<int> counts(10, 0);
    for (std::size_t i : ls.source_indices) ++counts[static_cast<std::size_t>(y[i])];
    const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
    EXPECT_LE(*hi - *lo, 1) << "m=" << m;
    EXPECT_EQ(ls.m(), m);
    if (m == 2) EXPECT_EQ(std::count(counts.begin(), counts.end(), 1), 2);
  }
}

TEST(Landmarks, StratifiedDeterministicAndRowsMatchIndices) {
  const Matrix x = test::normal_matrix(100, 4, 3);
  const auto y = balanced_labels(100, 10);
  const LandmarkSet a = sample_landmarks_stratified(x, y, KernelSpec::rbf(0.2), 12, 77);
  const LandmarkSet b = sample_landmarks_stratified(x, y, KernelSpec::rbf(0.2), 12, 77);
  EXPECT_EQ(a.source_indices, b.source_indices);
  EXPECT_EQ(a.k11_inv_sqrt, b.k11_inv_sqrt);
  EXPECT_EQ(a.points, gather_rows(x, a.source_indices));
  const LandmarkSet c = sample_landmarks_stratified(x, y, KernelSpec::rbf(0.2), 12, 78);
  EXPECT_NE(a.source_indices, c.source_indices);
}

TEST(Landmarks, StratifiedShortfallFallsBackUniformly) {
  // Class 1 has a single row; a quota of 3 per class forces a fallback.
  const Matrix x = test::normal_matrix(20, 2, 4);
  std::vector<int> y(20, 0);
  y[7] = 1;
  std::vector<std::string> notes;
  const LandmarkSet ls = sample_landmarks_stratified(x, y, KernelSpec::linear(), 6, 1, &notes);
  EXPECT_EQ(ls.m(), 6u);
  EXPECT_EQ(std::set<std::size_t>(ls.source_indices.begin(), ls.source_indices.end()).size(), 6u);
  EXPECT_NE(std::find(ls.source_indices.begin(), ls.source_indices.end(), 7u), ls.source_indices.end());
  ASSERT_EQ(notes.size(), 1u);
}

TEST(Landmarks, Errors) {
  const Matrix x = test::normal_matrix(5, 2, 5);
  const auto y = balanced_labels(5, 2);
  EXPECT_THROW(sample_landmarks_stratified(x, y, KernelSpec::linear(), 6, 0), DimensionError);
  EXPECT_THROW(sample_landmarks_stratified(x, y, KernelSpec::linear(), 0, 0), DimensionError);
  EXPECT_THROW(sample_landmarks_uniform(x, KernelSpec::linear(), 6, 0), DimensionError);
}

TEST(Landmarks, FactorIsInverseSqrtOfGram) {
  const Matrix x = test::normal_matrix(30, 5, 6);
  const LandmarkSet ls = sample_landmarks_uniform(x, KernelSpec::rbf(0.1), 10, 2);
  const Matrix k11 = gram(ls.kernel, ls.points, ls.points);
  EXPECT_LE(max_diff(ls.k11_inv_sqrt, naive_t(ls.k11_inv_sqrt)), 1e-14);
  EXPECT_LE(max_diff(naive_mul(naive_mul(ls.k11_inv_sqrt, k11), ls.k11_inv_sqrt), Matrix::identity(10)), 1e-8);
}

TEST(Landmarks, DuplicateLandmarksAreClampedNotFatal) {
  Matrix pts{{1, 2}, {1, 2}, {0, 1}};
  const LandmarkSet ls = make_landmarks(pts, KernelSpec::rbf(0.5), {0, 1, 2}, 0);
  EXPECT_TRUE(ls.k11_inv_sqrt.all_finite());
  const Matrix phi = nystrom_features(ls, pts);
  EXPECT_LE(max_diff(naive_mul(phi, naive_t(phi)), gram(ls.kernel, pts, pts)), 1e-8);
}

TEST(Landmarks, SidecarRoundTripIsBitExact) {
  const Matrix x = test::normal_matrix(40, 6, 7);
  const LandmarkSet ls = sample_landmarks_uniform(x, KernelSpec::rbf(0.123456789), 9, 31);
  const auto path = std::filesystem::temp_directory_path() / "nys_lm_roundtrip.bin";
  save_landmarks(path, ls);
  const LandmarkSet back = load_landmarks(path);
  EXPECT_EQ(back.points, ls.points);
  EXPECT_EQ(back.k11_inv_sqrt, ls.k11_inv_sqrt);
  EXPECT_EQ(back.kernel, ls.kernel);
  EXPECT_EQ(back.source_indices, ls.source_indices);
  EXPECT_EQ(back.seed, ls.seed);
  std::filesystem::remove(path);
}

TEST(Landmarks, SidecarRejectsGarbage) {
  const auto path = std::filesystem::temp_directory_path() / "nys_lm_bad.bin";
  {
    std::ofstream out(path, std::ios::binary);
    out << "NOTMAGIC and some more bytes";
  }
  EXPECT_THROW(load_landmarks(path), BadMagicError);
  {
    std::ofstream out(path, std::ios::binary);
    out << "NYSLMK01";
  }
  EXPECT_THROW(load_landmarks(path), TruncatedError);
  std::filesystem::remove(path);
}

// --- Nyström features ------------------------------------------------------

TEST(NystromFeatures, ScalarExample) {
  const LandmarkSet ls = make_landmarks(Matrix{{2, 0}}, KernelSpec::linear(), {0}, 0);
  EXPECT_NEAR(ls.k11_inv_sqrt(0, 0), 0.5, 1e-15);
  const Matrix phi = nystrom_features(ls, Matrix{{3, 4}});
  EXPECT_NEAR(phi(0, 0), 3.0, 1e-14);
}

TEST(NystromFeatures, LandmarkRowsReproduceK11) {
  const Matrix x = test::abs_matrix(test::normal_matrix(60, 5, 8));
  for (const KernelSpec& k : {KernelSpec::rbf(0.2), KernelSpec::chi2_exp(0.3), KernelSpec::linear()}) {
    const LandmarkSet ls = sample_landmarks_uniform(x, k, 5, 3);
    const Matrix phi = nystrom_features(ls, ls.points);
    EXPECT_LE(max_diff(naive_mul(phi, naive_t(phi)), gram(k, ls.points, ls.points)), 1e-8) << to_string(k);
  }
}

TEST(NystromFeatures, FullLandmarkSetReconstructsGram) {
  const Matrix x = test::normal_matrix(120, 32, 9);
  const KernelSpec k = KernelSpec::rbf(1.0 / 64.0);
  const LandmarkSet ls = make_landmarks(x, k, all_indices(120), 0);
  const Matrix phi = nystrom_features(ls, x);
  EXPECT_LE(max_diff(naive_mul(phi, naive_t(phi)), gram(k, x, x)), 1e-8);
}

TEST(NystromFeatures, ApproximationIsPsdAndExactOnLandmarkPairs) {
  const Matrix x = test::normal_matrix(80, 6, 10);
  const KernelSpec k = KernelSpec::rbf(0.1);
  const LandmarkSet ls = sample_landmarks_uniform(x, k, 15, 4);
  const Matrix phi = nystrom_features(ls, x);
  const Matrix approx = naive_mul(phi, naive_t(phi));
  const Matrix exact = gram(k, x, x);
  EXPECT_LE(max_diff(approx, naive_t(approx)), 1e-12);
  const EigenDecomposition e = sym_eig(approx);
  EXPECT_GE(e.values.back(), -1e-8 * e.values.front());
  for (std::size_t a : ls.source_indices)
    for (std::size_t b : ls.source_indices) EXPECT_NEAR(approx(a, b), exact(a, b), 1e-8);
}

TEST(NystromFeatures, LowRankLinearRecovery) {
  const Matrix x = naive_mul(test::normal_matrix(200, 8, 11), test::normal_matrix(8, 40, 12));
  const LandmarkSet ls = sample_landmarks_uniform(x, KernelSpec::linear(), 8, 5);
  const Matrix phi = nystrom_features(ls, x);
  const Matrix exact = gram(KernelSpec::linear(), x, x);
  EXPECT_LE(max_diff(naive_mul(phi, naive_t(phi)), exact), 1e-6 * max_abs(exact));
}

TEST(NystromFeatures, MedianErrorShrinksAsMDoubles) {
  const Matrix x = test::normal_matrix(500, 5, 13);
  const KernelSpec k = KernelSpec::rbf(bandwidth_heuristic(x, 1000, 1));
  const Matrix exact = gram(k, x, x);
  double prev = 1e300;
  for (std::size_t m : {2, 4, 8, 16, 32, 64, 128}) {
    std::vector<double> errs;
    for (std::uint64_t s = 0; s < 20; ++s) {
      const LandmarkSet ls = sample_landmarks_uniform(x, k, m, 1000 * m + s);
      const Matrix phi = nystrom_features(ls, x);
      Matrix diff = matmul_nt(phi, phi);
      for (std::size_t i = 0; i < diff.size(); ++i) diff.data()[i] -= exact.data()[i];
      errs.push_back(frobenius(diff));
    }
    std::nth_element(errs.begin(), errs.begin() + 10, errs.end());
    EXPECT_LE(errs[10], prev) << "m=" << m;
    prev = errs[10];
  }
}

TEST(NystromFeatures, Chi2PaperUsesAbsoluteSpectrum) {
  const Matrix x = test::abs_matrix(test::normal_matrix(20, 4, 14));
  const LandmarkSet ls = sample_landmarks_uniform(x, KernelSpec::chi2_paper(), 6, 1);
  EXPECT_TRUE(ls.k11_inv_sqrt.all_finite());
  EXPECT_THROW(inv_sqrt_psd(gram(KernelSpec::chi2_paper(), ls.points, ls.points)), NotPsdError);
}

TEST(NystromFeatures, DimensionMismatch) {
  const LandmarkSet ls = make_landmarks(Matrix{{1, 2}}, KernelSpec::linear(), {0}, 0);
  EXPECT_THROW(nystrom_features(ls, Matrix(1, 3)), DimensionError);
}

// --- RKS ------------------------------------------------------------------

TEST(Rks, ZeroInput) {
  const RksProjection p = make_rks(5, 16, 0.5, 1);
  const Matrix f = rks_features(p, Matrix(2, 5));
  ASSERT_EQ(f.cols(), 32u);
  for (std::size_t j = 0; j < 16; ++j) {
    EXPECT_DOUBLE_EQ(f(0, j), 0.25);
    EXPECT_DOUBLE_EQ(f(1, 16 + j), 0.0);
  }
}

TEST(Rks, ProjectionVariance) {
  const double gamma = 0.3;
  const RksProjection p = make_rks(50, 2000, gamma, 2);
  double s = 0.0, s2 = 0.0;
  for (double v : p.mat.data()) {
    s += v;
    s2 += v * v;
  }
  const double n = static_cast<double>(p.mat.size());
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 2.0 * gamma, 0.02);
}

TEST(Rks, ReluVariant) {
  const RksProjection p = make_rks(3, 8, 1.0, 3, RksActivation::relu);
  const Matrix x = test::normal_matrix(4, 3, 4);
  const Matrix f = rks_features(p, x);
  ASSERT_EQ(f.cols(), 8u);
  const Matrix proj = naive_mul(x, naive_t(p.mat));
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 8; ++j) EXPECT_NEAR(f(i, j), 0.5 * std::max(0.0, proj(i, j)), 1e-14);
}

TEST(Rks, MonteCarloKernelEstimate) {
  const std::size_t d = 16;
  const Matrix a = test::normal_matrix(500, d, 5), b = test::normal_matrix(500, d, 6);
  const double gamma = bandwidth_heuristic(a, 1000, 7);
  const RksProjection p4096 = make_rks(d, 4096, gamma, 8);
  const double e4096 = mean_kernel_error(rks_features(p4096, a), rks_features(p4096, b), a, b, gamma);
  EXPECT_LE(e4096, 0.02);
  const RksProjection p1024 = make_rks(d, 1024, gamma, 9);
  const double e1024 = mean_kernel_error(rks_features(p1024, a), rks_features(p1024, b), a, b, gamma);
  EXPECT_LE(e4096, 0.6 * e1024);
}

TEST(Rks, Errors) {
  EXPECT_THROW(make_rks(3, 0, 1.0, 0), DimensionError);
  EXPECT_THROW(make_rks(3, 4, 0.0, 0), KernelDomainError);
  EXPECT_THROW(rks_features(make_rks(3, 4, 1.0, 0), Matrix(1, 2)), DimensionError);
}

// --- Fastfood -------------------------------------------------------------

TEST(Fastfood, PaddingAndStructure) {
  const FastfoodBlock b = make_fastfood(3, 1.0, 1);
  EXPECT_EQ(b.d_pad, 4u);
  EXPECT_EQ(make_fastfood(64, 1.0, 1).d_pad, 64u);
  EXPECT_EQ(make_fastfood(65, 1.0, 1).d_pad, 128u);
  const FastfoodBlock big = make_fastfood(100, 2.0, 2);
  for (double v : big.b_diag) EXPECT_TRUE(v == 1.0 || v == -1.0);
  for (double v : big.s_diag) EXPECT_GE(v, 0.0);
  std::vector<std::size_t> p = big.perm;
  std::sort(p.begin(), p.end());
  EXPECT_EQ(p, all_indices(128));
}

TEST(Fastfood, Deterministic) {
  const FastfoodBlock a = make_fastfood(50, 1.5, 9), b = make_fastfood(50, 1.5, 9);
  EXPECT_EQ(a.b_diag, b.b_diag);
  EXPECT_EQ(a.g_diag, b.g_diag);
  EXPECT_EQ(a.s_diag, b.s_diag);
  EXPECT_EQ(a.perm, b.perm);
  EXPECT_NE(a.g_diag, make_fastfood(50, 1.5, 10).g_diag);
}

TEST(Fastfood, GaussianDiagonalLawOfLargeNumbers) {
  double s = 0.0;
  std::size_t n = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed)
    for (double g : make_fastfood(64, 1.0, seed).g_diag) {
      s += g;
      ++n;
    }
  const double mean = s / static_cast<double>(n);
  EXPECT_GT(mean, -0.05);
  EXPECT_LT(mean, 0.05);
}

TEST(Fastfood, ProjectionMatchesDenseOracle) {
  for (std::size_t d : {5, 64}) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const FastfoodBlock b = make_fastfood(d, 0.7 + 0.1 * static_cast<double>(seed), seed);
      const Matrix x = test::normal_matrix(3, d, 100 + seed);
      Matrix xp(3, b.d_pad);
      for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < d; ++j) xp(i, j) = x(i, j);
      EXPECT_LE(max_diff(fastfood_project(b, x), naive_mul(xp, naive_t(dense_v(b)))), 1e-10);
    }
  }
}

TEST(Fastfood, RowNormsAreChiOverSigma) {
  // ||row_i(V)|| = s_i ||G|| / σ by construction.
  const FastfoodBlock b = make_fastfood(32, 2.0, 3);
  const Matrix v = dense_v(b);
  double g = 0.0;
  for (double t : b.g_diag) g += t * t;
  for (std::size_t i = 0; i < 32; ++i) {
    double r = 0.0;
    for (std::size_t j = 0; j < 32; ++j) r += v(i, j) * v(i, j);
    EXPECT_NEAR(std::sqrt(r), b.s_diag[i] * std::sqrt(g) / 2.0, 1e-10);
  }
}

TEST(Fastfood, ZeroInputFeatures) {
  const std::vector<FastfoodBlock> blocks{make_fastfood(8, 1.0, 1), make_fastfood(8, 1.0, 2)};
  const Matrix f = fastfood_features(blocks, Matrix(1, 8));
  ASSERT_EQ(f.cols(), 32u);
  const double c = 1.0 / std::sqrt(16.0);
  for (std::size_t k = 0; k < 2; ++k)
    for (std::size_t j = 0; j < 8; ++j) {
      EXPECT_DOUBLE_EQ(f(0, 16 * k + j), c);
      EXPECT_DOUBLE_EQ(f(0, 16 * k + 8 + j), 0.0);
    }
}

TEST(Fastfood, KernelApproximationComparableToRks) {
  const std::size_t d = 256, pairs = 500;
  const Matrix a = test::normal_matrix(pairs, d, 20), b = test::normal_matrix(pairs, d, 21);
  const double gamma = 1.0 / (2.0 * static_cast<double>(d));
  std::vector<FastfoodBlock> blocks;
  for (std::uint64_t s = 0; s < 3; ++s) blocks.push_back(make_fastfood(d, fastfood_sigma_for_gamma(gamma), 40 + s));
  const double ff = mean_kernel_error(fastfood_features(blocks, a), fastfood_features(blocks, b), a, b, gamma);
  const RksProjection p = make_rks(d, 3 * d, gamma, 50);
  const double rks = mean_kernel_error(rks_features(p, a), rks_features(p, b), a, b, gamma);
  EXPECT_LE(ff, 2.0 * rks);
}

TEST(Fastfood, Errors) {
  EXPECT_THROW(make_fastfood(4, 0.0, 0), KernelDomainError);
  const std::vector<FastfoodBlock> mixed{make_fastfood(4, 1.0, 1), make_fastfood(8, 1.0, 2)};
  EXPECT_THROW(fastfood_features(mixed, Matrix(1, 4)), DimensionError);
  EXPECT_THROW(fastfood_project(make_fastfood(4, 1.0, 1), Matrix(1, 5)), DimensionError);
}
