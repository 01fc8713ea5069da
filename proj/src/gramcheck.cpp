#include <algorithm>
#include <bit>
#include <cmath>
#include <iomanip>
#include <random>

#include "nys/commands.hpp"
#include "nys/feature_maps.hpp"
#include "nys/linalg.hpp"
#include "nys/ops.hpp"

namespace nys {

Matrix fastfood_dense_matrix(const FastfoodBlock& block) {
  const std::size_t d = block.d_pad;
  Matrix h(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) h(i, j) = std::popcount(i & j) % 2 ? -1.0 : 1.0;
  Matrix perm(d, d);
  for (std::size_t i = 0; i < d; ++i) perm(i, block.perm[i]) = 1.0;
  Matrix v = matmul(matmul(h, matmul(Matrix::diagonal(block.g_diag), perm)), matmul(h, Matrix::diagonal(block.b_diag)));
  const Matrix s = Matrix::diagonal(block.s_diag);
  v = matmul(s, v);
  for (double& x : v.data()) x *= block.scale();
  return v;
}

namespace {

Matrix normal_matrix(std::size_t n, std::size_t d, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Matrix x(n, d);
  for (double& v : x.data()) v = nd(rng);
  return x;
}

std::vector<std::size_t> iota_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  return idx;
}

CheckResult check_full_landmarks(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Matrix x = normal_matrix(200, 64, rng);
  const KernelSpec k = KernelSpec::rbf(bandwidth_heuristic(x, default_heuristic_pairs(200), seed));
  const LandmarkSet ls = make_landmarks(x, k, iota_indices(200), seed);
  const Matrix phi = nystrom_features(ls, x);
  return {"nystrom: all points as landmarks, |PhiPhi^T - K|max", false,
          max_abs_diff(matmul_nt(phi, phi), gram(k, x, x)), 1e-8};
}

CheckResult check_landmark_entries(std::uint64_t seed) {
  std::mt19937_64 rng(seed + 1);
  const Matrix x = normal_matrix(120, 16, rng);
  const KernelSpec k = KernelSpec::rbf(bandwidth_heuristic(x, default_heuristic_pairs(120), seed));
  std::vector<std::size_t> idx = iota_indices(120);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(24);
  const LandmarkSet ls = make_landmarks(gather_rows(x, idx), k, idx, seed);
  const Matrix phi = nystrom_features(ls, x);
  const Matrix approx = matmul_nt(phi, phi);
  const Matrix exact = gram(k, x, x);
  double worst = 0.0;
  for (std::size_t a : idx)
    for (std::size_t b : idx) worst = std::max(worst, std::abs(approx(a, b) - exact(a, b)));
  return {"nystrom: landmark-pair entries of K~ equal K", false, worst, 1e-8};
}

CheckResult check_low_rank(std::uint64_t seed) {
  std::mt19937_64 rng(seed + 2);
  const Matrix x = matmul(normal_matrix(300, 16, rng), normal_matrix(16, 64, rng));
  const KernelSpec k = KernelSpec::linear();
  std::vector<std::size_t> idx = iota_indices(300);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(16);
  const LandmarkSet ls = make_landmarks(gather_rows(x, idx), k, idx, seed);
  const Matrix phi = nystrom_features(ls, x);
  const Matrix exact = gram(k, x, x);
  return {"nystrom: rank-16 linear data, 16 landmarks (relative)", false,
          max_abs_diff(matmul_nt(phi, phi), exact) / max_abs(exact), 1e-6};
}

CheckResult check_psd(std::uint64_t seed, KernelSpec k, const char* name) {
  std::mt19937_64 rng(seed + 3);
  Matrix x = normal_matrix(64, 8, rng);
  if (k.requires_nonnegative())
    for (double& v : x.data()) v = std::abs(v);
  const EigenDecomposition e = sym_eig(gram(k, x, x));
  return {name, false, std::max(0.0, -e.values.back() / e.values.front()), 1e-8};
}

CheckResult check_fastfood(std::uint64_t seed, std::size_t d_pad) {
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const FastfoodBlock blk = make_fastfood(d_pad, 1.5, seed + 17 * s);
    std::mt19937_64 rng(seed + s);
    const Matrix x = normal_matrix(4, d_pad, rng);
    worst = std::max(worst, max_abs_diff(fastfood_project(blk, x), matmul_nt(x, fastfood_dense_matrix(blk))));
  }
  return {"fastfood: FWHT path vs dense V, d_pad=" + std::to_string(d_pad), false, worst, 1e-10};
}

CheckResult check_fwht(std::uint64_t seed) {
  std::mt19937_64 rng(seed + 4);
  std::normal_distribution<double> nd;
  Vector v(1024);
  for (double& x : v) x = nd(rng);
  const Vector back = fwht(fwht(v));
  double worst = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    worst = std::max(worst, std::abs(back[i] - 1024.0 * v[i]));
    scale = std::max(scale, std::abs(1024.0 * v[i]));
  }
  return {"fwht: H(Hv) = n v (relative)", false, worst / scale, 1e-10};
}

CheckResult check_rks(std::uint64_t seed) {
  std::mt19937_64 rng(seed + 5);
  const std::size_t d = 16, pairs = 500;
  const Matrix a = normal_matrix(pairs, d, rng), b = normal_matrix(pairs, d, rng);
  const double gamma = 1.0 / (2.0 * static_cast<double>(d));
  const RksProjection p = make_rks(d, 4096, gamma, seed + 6);
  const Matrix fa = rks_features(p, a), fb = rks_features(p, b);
  double err = 0.0;
  for (std::size_t i = 0; i < pairs; ++i) {
    double dot = 0.0;
    for (std::size_t j = 0; j < fa.cols(); ++j) dot += fa(i, j) * fb(i, j);
    err += std::abs(dot - kernel_eval(KernelSpec::rbf(gamma), a.row(i), b.row(i)));
  }
  return {"rks: q=4096 mean |<phi(x),phi(y)> - k(x,y)|", false, err / pairs, 0.02};
}

}  // namespace

std::vector<CheckResult> run_gramcheck(std::uint64_t seed) {
  std::vector<CheckResult> rows = {
      check_full_landmarks(seed),
      check_landmark_entries(seed),
      check_low_rank(seed),
      check_psd(seed, KernelSpec::rbf(0.1), "gram: rbf min eig / max eig >= -1e-8"),
      check_psd(seed, KernelSpec::chi2_exp(0.1), "gram: chi2exp min eig / max eig >= -1e-8"),
      check_fastfood(seed, 64),
      check_fastfood(seed, 256),
      check_fwht(seed),
      check_rks(seed),
  };
  for (CheckResult& r : rows) r.passed = std::isfinite(r.value) && r.value <= r.tolerance;
  return rows;
}

void write_gramcheck_table(std::ostream& os, const std::vector<CheckResult>& rows) {
  std::size_t width = 5;
  for (const CheckResult& r : rows) width = std::max(width, r.name.size());
  os << std::left << std::setw(static_cast<int>(width)) << "check"
     << "  result  value        tolerance\n";
  for (const CheckResult& r : rows)
    os << std::left << std::setw(static_cast<int>(width)) << r.name << "  " << (r.passed ? "PASS  " : "FAIL  ")
       << "  " << std::scientific << std::setprecision(3) << r.value << "    " << r.tolerance << std::defaultfloat
       << '\n';
}

}  // namespace nys
