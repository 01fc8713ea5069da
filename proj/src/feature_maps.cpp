#include "nys/feature_maps.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>

#include "nys/io.hpp"
#include "nys/ops.hpp"

namespace nys {

LandmarkSet make_landmarks(Matrix points, const KernelSpec& kernel, std::vector<std::size_t> source_indices,
                           std::uint64_t seed, double eps_rel) {
  require_dims(points.rows() >= 1, "landmarks: need at least one landmark");
  require_dims(source_indices.size() == points.rows(), "landmarks: index count != landmark count");
  const Matrix k11 = gram(kernel, points, points);
  LandmarkSet ls;
  ls.k11_inv_sqrt = kernel.is_psd() ? inv_sqrt_psd(k11, eps_rel) : inv_sqrt_abs(k11, eps_rel);
  ls.points = std::move(points);
  ls.kernel = kernel;
  ls.source_indices = std::move(source_indices);
  ls.seed = seed;
  return ls;
}

LandmarkSet sample_landmarks_stratified(const Matrix& features, std::span<const int> labels,
                                        const KernelSpec& kernel, std::size_t m, std::uint64_t seed,
                                        std::vector<std::string>* notes) {
  const std::size_t n = features.rows();
  require_dims(labels.size() == n, "sample_landmarks_stratified: label count != row count");
  require_dims(m >= 1 && m <= n, "sample_landmarks_stratified: need 1 <= m <= n (m=" + std::to_string(m) +
                                     ", n=" + std::to_string(n) + ")");

  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < n; ++i) by_class[labels[i]].push_back(i);
  std::vector<int> classes;
  for (const auto& [c, _] : by_class) classes.push_back(c);
  const std::size_t c = classes.size();

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> quota(c, m / c);
  std::vector<std::size_t> order(c);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  for (std::size_t r = 0; r < m % c; ++r) ++quota[order[r]];

  std::vector<std::size_t> chosen;
  std::vector<char> used(n, 0);
  std::size_t shortfall = 0;
  for (std::size_t k = 0; k < c; ++k) {
    auto pool = by_class[classes[k]];
    std::shuffle(pool.begin(), pool.end(), rng);
    const std::size_t take = std::min(quota[k], pool.size());
    if (take < quota[k]) {
      shortfall += quota[k] - take;
      if (notes)
        notes->push_back("class " + std::to_string(classes[k]) + " has " + std::to_string(pool.size()) +
                         " rows for a quota of " + std::to_string(quota[k]) + "; filling uniformly");
    }
    for (std::size_t t = 0; t < take; ++t) {
      chosen.push_back(pool[t]);
      used[pool[t]] = 1;
    }
  }
  if (shortfall > 0) {
    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < n; ++i)
      if (!used[i]) rest.push_back(i);
    std::shuffle(rest.begin(), rest.end(), rng);
    chosen.insert(chosen.end(), rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(shortfall));
  }
  Matrix points = gather_rows(features, chosen);
  return make_landmarks(std::move(points), kernel, std::move(chosen), seed);
}

LandmarkSet sample_landmarks_uniform(const Matrix& features, const KernelSpec& kernel, std::size_t m,
                                     std::uint64_t seed) {
  const std::size_t n = features.rows();
  require_dims(m >= 1 && m <= n, "sample_landmarks_uniform: need 1 <= m <= n");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(m);
  Matrix points = gather_rows(features, idx);
  return make_landmarks(std::move(points), kernel, std::move(idx), seed);
}

Matrix nystrom_features(const LandmarkSet& ls, const Matrix& x) {
  require_dims(x.cols() == ls.dim(), "nystrom_features: input has " + std::to_string(x.cols()) +
                                         " columns, landmarks have " + std::to_string(ls.dim()));
  return matmul(gram(ls.kernel, x, ls.points), ls.k11_inv_sqrt);
}

namespace {
constexpr std::string_view kLandmarkMagic = "NYSLMK01";
}

void save_landmarks(const std::filesystem::path& path, const LandmarkSet& ls) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FileError("cannot write " + path.string());
  binio::write_magic(out, kLandmarkMagic);
  binio::write<std::uint64_t>(out, ls.m());
  binio::write<std::uint64_t>(out, ls.dim());
  binio::write_string(out, to_string(ls.kernel));
  binio::write<std::uint64_t>(out, ls.seed);
  binio::write_doubles(out, ls.points.data());
  binio::write_doubles(out, ls.k11_inv_sqrt.data());
  for (std::size_t i : ls.source_indices) binio::write<std::uint64_t>(out, i);
  if (!out) throw FileError("error writing " + path.string());
}

LandmarkSet load_landmarks(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot open " + path.string());
  binio::expect_magic(in, kLandmarkMagic, "landmark sidecar");
  const auto m = binio::read<std::uint64_t>(in, "landmark header");
  const auto d = binio::read<std::uint64_t>(in, "landmark header");
  if (m == 0 || m > (1u << 20) || d > (1u << 24)) throw FormatError("implausible landmark header");
  LandmarkSet ls;
  ls.kernel = parse_kernel(binio::read_string(in, "landmark kernel"));
  ls.seed = binio::read<std::uint64_t>(in, "landmark header");
  ls.points = Matrix(m, d);
  ls.k11_inv_sqrt = Matrix(m, m);
  binio::read_doubles(in, ls.points.data(), "landmark points");
  binio::read_doubles(in, ls.k11_inv_sqrt.data(), "landmark factor");
  ls.source_indices.resize(m);
  for (auto& i : ls.source_indices) i = binio::read<std::uint64_t>(in, "landmark indices");
  return ls;
}

RksProjection make_rks(std::size_t d, std::size_t q, double gamma, std::uint64_t seed, RksActivation activation) {
  require_dims(q >= 1, "make_rks: q must be positive");
  if (!(gamma > 0.0)) throw KernelDomainError("make_rks: gamma must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(2.0 * gamma));
  RksProjection p{Matrix(q, d), activation};
  for (double& v : p.mat.data()) v = normal(rng);
  return p;
}

Matrix rks_features(const RksProjection& p, const Matrix& x) {
  require_dims(x.cols() == p.dim(), "rks_features: input dimension mismatch");
  const Matrix proj = matmul_nt(x, p.mat);  // b×q
  const std::size_t q = p.q();
  if (p.activation == RksActivation::relu) {
    Matrix out(x.rows(), q);
    const double s = std::sqrt(2.0 / static_cast<double>(q));
    for (std::size_t k = 0; k < proj.size(); ++k) out.data()[k] = s * std::max(0.0, proj.data()[k]);
    return out;
  }
  Matrix out(x.rows(), 2 * q);
  const double s = 1.0 / std::sqrt(static_cast<double>(q));
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < q; ++j) {
      out(i, j) = s * std::cos(proj(i, j));
      out(i, q + j) = s * std::sin(proj(i, j));
    }
  return out;
}

double FastfoodBlock::scale() const { return 1.0 / (sigma * std::sqrt(static_cast<double>(d_pad))); }

FastfoodBlock make_fastfood(std::size_t d, double sigma, std::uint64_t seed) {
  if (!(sigma > 0.0)) throw KernelDomainError("make_fastfood: sigma must be positive");
  FastfoodBlock blk;
  blk.d_pad = next_power_of_two(std::max<std::size_t>(d, 1));
  blk.sigma = sigma;
  const std::size_t n = blk.d_pad;
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.5);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::chi_squared_distribution<double> chi2(static_cast<double>(n));

  blk.b_diag.resize(n);
  for (double& b : blk.b_diag) b = coin(rng) ? 1.0 : -1.0;
  blk.g_diag.resize(n);
  for (double& g : blk.g_diag) g = normal(rng);
  blk.perm.resize(n);
  std::iota(blk.perm.begin(), blk.perm.end(), 0);
  std::shuffle(blk.perm.begin(), blk.perm.end(), rng);
  double g_norm = 0.0;
  for (double g : blk.g_diag) g_norm += g * g;
  g_norm = std::sqrt(g_norm);
  // Row norms of S H G Π H B / (σ√d) become chi(d)/σ, as for Gaussian rows.
  blk.s_diag.resize(n);
  for (double& s : blk.s_diag) s = std::sqrt(chi2(rng)) / g_norm;
  return blk;
}

namespace {

Matrix pad_columns(const Matrix& x, std::size_t width) {
  if (x.cols() == width) return x;
  Matrix out(x.rows(), width);
  for (std::size_t i = 0; i < x.rows(); ++i)
    std::copy(x.row(i).begin(), x.row(i).end(), out.row(i).begin());
  return out;
}

}  // namespace

Matrix fastfood_project(const FastfoodBlock& blk, const Matrix& x) {
  const std::size_t n = blk.d_pad;
  require_dims(x.cols() <= n, "fastfood_project: input wider than d_pad");
  Matrix u = pad_columns(x, n);
  for (std::size_t i = 0; i < u.rows(); ++i)
    for (std::size_t j = 0; j < n; ++j) u(i, j) *= blk.b_diag[j];
  fwht_rows(u);
  Matrix w(u.rows(), n);
  for (std::size_t i = 0; i < u.rows(); ++i)
    for (std::size_t j = 0; j < n; ++j) w(i, j) = u(i, blk.perm[j]) * blk.g_diag[j];
  fwht_rows(w);
  const double scale = blk.scale();
  for (std::size_t i = 0; i < w.rows(); ++i)
    for (std::size_t j = 0; j < n; ++j) w(i, j) *= scale * blk.s_diag[j];
  return w;
}

Matrix fastfood_features(std::span<const FastfoodBlock> blocks, const Matrix& x) {
  require_dims(!blocks.empty(), "fastfood_features: no blocks");
  const std::size_t n = blocks.front().d_pad;
  for (const auto& b : blocks) require_dims(b.d_pad == n, "fastfood_features: inconsistent d_pad across blocks");
  const double norm = 1.0 / std::sqrt(static_cast<double>(n * blocks.size()));
  Matrix out(x.rows(), 2 * n * blocks.size());
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    const Matrix v = fastfood_project(blocks[k], x);
    const std::size_t off = 2 * n * k;
    for (std::size_t i = 0; i < x.rows(); ++i)
      for (std::size_t j = 0; j < n; ++j) {
        out(i, off + j) = norm * std::cos(v(i, j));
        out(i, off + n + j) = norm * std::sin(v(i, j));
      }
  }
  return out;
}

}  // namespace nys
