#include "nys/kernels.hpp"

#include <algorithm>
#include <charconv>
#include <random>
#include <set>
#include <utility>
#include <vector>

namespace nys {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string to_string(const KernelSpec& spec) {
  switch (spec.kind) {
    case KernelKind::linear:
      return "linear";
    case KernelKind::rbf:
      return "rbf:gamma=" + format_double(spec.gamma);
    case KernelKind::chi2_exp:
      return "chi2exp:gamma=" + format_double(spec.gamma);
    case KernelKind::chi2_paper:
      return "chi2paper";
  }
  return "linear";
}

namespace {

double parse_gamma(std::string_view kind, std::string_view rest, std::string_view full) {
  constexpr std::string_view prefix = "gamma=";
  if (rest.substr(0, prefix.size()) != prefix)
    throw KernelParseError("kernel '" + std::string(full) + "': expected " + std::string(kind) +
                           ":gamma=<float>");
  rest.remove_prefix(prefix.size());
  double g = 0.0;
  auto res = std::from_chars(rest.data(), rest.data() + rest.size(), g);
  if (res.ec != std::errc() || res.ptr != rest.data() + rest.size())
    throw KernelParseError("kernel '" + std::string(full) + "': bad gamma value");
  if (!(g > 0.0) || !std::isfinite(g))
    throw KernelParseError("kernel '" + std::string(full) + "': gamma must be positive");
  return g;
}

}  // namespace

KernelSpec parse_kernel(std::string_view text) {
  const auto colon = text.find(':');
  const std::string_view kind = text.substr(0, colon);
  const std::string_view rest = colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);
  if (kind == "linear" && colon == std::string_view::npos) return KernelSpec::linear();
  if (kind == "chi2paper" && colon == std::string_view::npos) return KernelSpec::chi2_paper();
  if (kind == "rbf" && colon != std::string_view::npos) return KernelSpec::rbf(parse_gamma(kind, rest, text));
  if (kind == "chi2exp" && colon != std::string_view::npos)
    return KernelSpec::chi2_exp(parse_gamma(kind, rest, text));
  throw KernelParseError("unknown kernel '" + std::string(text) + "'");
}

void validate(const KernelSpec& spec) {
  if (spec.uses_gamma() && !(spec.gamma > 0.0))
    throw KernelDomainError("kernel gamma must be positive");
  if (spec.requires_nonnegative() && !(spec.epsilon > 0.0))
    throw KernelDomainError("chi2 epsilon must be positive");
}

namespace {

void check_nonnegative(std::span<const double> v, const char* what) {
  for (double x : v)
    if (x < 0.0) throw KernelDomainError(std::string(what) + ": chi2 kernels need non-negative inputs");
}

void check_gram_inputs(const KernelSpec& spec, const Matrix& a, const Matrix& b) {
  validate(spec);
  require_dims(a.cols() == b.cols(), "gram: feature dimensions differ (" + std::to_string(a.cols()) +
                                         " vs " + std::to_string(b.cols()) + ")");
  if (spec.requires_nonnegative()) {
    check_nonnegative(a.data(), "gram");
    check_nonnegative(b.data(), "gram");
  }
}

}  // namespace

double kernel_eval(const KernelSpec& spec, std::span<const double> x, std::span<const double> y) {
  validate(spec);
  require_dims(x.size() == y.size(), "kernel_eval: vector lengths differ");
  if (spec.requires_nonnegative()) {
    check_nonnegative(x, "kernel_eval");
    check_nonnegative(y, "kernel_eval");
  }
  return detail::kernel_unchecked(spec, x.data(), y.data(), x.size());
}

Matrix gram(const KernelSpec& spec, const Matrix& a, const Matrix& b) {
  check_gram_inputs(spec, a, b);
  Matrix out(a.rows(), b.rows());
  const std::size_t d = a.cols();
#pragma omp parallel for schedule(static) if (a.rows() * b.rows() * (d + 1) > 32768)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(a.rows()); ++i) {
    const double* ai = a.row(static_cast<std::size_t>(i)).data();
    double* oi = out.row(static_cast<std::size_t>(i)).data();
    for (std::size_t j = 0; j < b.rows(); ++j) oi[j] = detail::kernel_unchecked(spec, ai, b.row(j).data(), d);
  }
  return out;
}

namespace serial {
Matrix gram(const KernelSpec& spec, const Matrix& a, const Matrix& b) {
  require_dims(a.cols() == b.cols(), "gram: feature dimensions differ");
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) out(i, j) = kernel_eval(spec, a.row(i), b.row(j));
  return out;
}
}  // namespace serial

std::size_t default_heuristic_pairs(std::size_t n) {
  const std::size_t all = n < 2 ? 0 : n * (n - 1) / 2;
  return std::min<std::size_t>(1000, all);
}

namespace {

std::vector<std::pair<std::size_t, std::size_t>> sample_pairs(std::size_t n, std::size_t pairs, std::uint64_t seed) {
  const std::size_t all = n * (n - 1) / 2;
  pairs = std::min(pairs, all);
  std::mt19937_64 rng(seed);
  std::vector<std::pair<std::size_t, std::size_t>> chosen;
  chosen.reserve(pairs);
  if (all <= 4 * pairs) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) chosen.emplace_back(i, j);
    std::shuffle(chosen.begin(), chosen.end(), rng);
    chosen.resize(pairs);
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::set<std::pair<std::size_t, std::size_t>> seen;
    while (chosen.size() < pairs) {
      std::size_t i = pick(rng), j = pick(rng);
      if (i == j) continue;
      if (i > j) std::swap(i, j);
      if (seen.emplace(i, j).second) chosen.emplace_back(i, j);
    }
  }
  return chosen;
}

template <typename Dist>
double inverse_mean_distance(const Matrix& features, std::size_t pairs, std::uint64_t seed, Dist dist,
                             const char* who) {
  const std::size_t n = features.rows();
  if (n < 2) throw DegenerateDataError(std::string(who) + ": need at least two rows");
  if (pairs == 0) throw DegenerateDataError(std::string(who) + ": need at least one pair");
  const auto chosen = sample_pairs(n, pairs, seed);
  double total = 0.0;
  for (const auto& [i, j] : chosen) total += dist(features.row(i), features.row(j));
  const double mean = total / static_cast<double>(chosen.size());
  if (!(mean > 0.0)) throw DegenerateDataError(std::string(who) + ": all sampled rows are identical");
  return 1.0 / mean;
}

}  // namespace

double bandwidth_heuristic(const Matrix& features, std::size_t pairs, std::uint64_t seed) {
  return inverse_mean_distance(
      features, pairs, seed,
      [](std::span<const double> x, std::span<const double> y) {
        double s = 0.0;
        for (std::size_t k = 0; k < x.size(); ++k) s += (x[k] - y[k]) * (x[k] - y[k]);
        return s;
      },
      "bandwidth_heuristic");
}

double chi2_bandwidth_heuristic(const Matrix& features, std::size_t pairs, std::uint64_t seed, double epsilon) {
  for (double v : features.data())
    if (v < 0.0) throw KernelDomainError("chi2_bandwidth_heuristic: features must be non-negative");
  return inverse_mean_distance(
      features, pairs, seed,
      [epsilon](std::span<const double> x, std::span<const double> y) {
        double s = 0.0;
        for (std::size_t k = 0; k < x.size(); ++k) s += (x[k] - y[k]) * (x[k] - y[k]) / (x[k] + y[k] + epsilon);
        return s;
      },
      "chi2_bandwidth_heuristic");
}

}  // namespace nys
