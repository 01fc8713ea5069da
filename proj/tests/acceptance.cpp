// Acceptance suite: one PASS/FAIL line per criterion, tolerances pinned here.
// Exit status is 0 only when every criterion passes.

#include <sys/wait.h>

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "nys/commands.hpp"
#include "nys/feature_maps.hpp"
#include "nys/kernels.hpp"
#include "nys/layers.hpp"
#include "nys/linalg.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace nys;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

// exp(-γ||a_i - b_j||²) by explicit loops.
Matrix rbf_oracle(const Matrix& a, const Matrix& b, double gamma) {
  Matrix k(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) {
      long double d2 = 0.0L;
      for (std::size_t t = 0; t < a.cols(); ++t) d2 += (a(i, t) - b(j, t)) * static_cast<long double>(a(i, t) - b(j, t));
      k(i, j) = std::exp(-gamma * static_cast<double>(d2));
    }
  return k;
}

std::vector<std::size_t> iota_n(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

// Shared desk-scale setup for the statistical criteria: 10-class blobs,
// d=32, unit-σ clusters 6 apart, through a 128-wide frozen extractor.
RunConfig blobs_config() {
  return parse_config(R"(
run.id=acceptance
dataset.kind=blobs
dataset.n=4000
dataset.d=32
dataset.classes=10
dataset.sep=6
extractor.d_out=128
extractor.seed=7
architecture.type=nystrom
architecture.kernel=rbf
architecture.m=16
architecture.adaptive=true
optimizer.lr=1e-3
optimizer.batch=64
optimizer.epochs=200
optimizer.patience=20
seeds.data=1
seeds.init=2
seeds.landmarks=3
)");
}

// ---------------------------------------------------------------------------

Verdict c1_exactness() {
  const auto t0 = Clock::now();
  const Matrix x = test::normal_matrix(200, 10, 101);
  const double gamma = bandwidth_heuristic(x, default_heuristic_pairs(200), 5);
  const LandmarkSet ls = make_landmarks(x, KernelSpec::rbf(gamma), iota_n(200), 0);
  const Matrix phi = nystrom_features(ls, x);
  const double err = test::max_diff(test::naive_mul(phi, test::naive_t(phi)), rbf_oracle(x, x, gamma));
  const double secs = seconds_since(t0);
  return {err <= 1e-8 && secs < 5.0,
          "max|PhiPhi^T - K| = " + fmt("%.2e", err) + " (tol 1e-8), " + fmt("%.2f", secs) + " s (limit 5 s)"};
}

Verdict c2_low_rank() {
  const Matrix x = test::naive_mul(test::normal_matrix(300, 16, 201), test::normal_matrix(16, 64, 202));
  const Matrix l = gather_rows(x, iota_n(16));
  const LandmarkSet ls = make_landmarks(l, KernelSpec::linear(), iota_n(16), 0);
  const Matrix phi = nystrom_features(ls, x);
  const Matrix k = test::naive_mul(x, test::naive_t(x));
  const double rel = test::max_diff(test::naive_mul(phi, test::naive_t(phi)), k) / max_abs(k);
  return {rel <= 1e-6, "max|K~ - K| / max|K| = " + fmt("%.2e", rel) + " (tol 1e-6)"};
}

Verdict c3_gradients() {
  const auto t0 = Clock::now();
  const std::size_t d = 10, c = 5, b = 8;
  auto lm = [&](std::size_t m, std::size_t dim, const KernelSpec& k, std::uint64_t s) {
    return make_landmarks(test::abs_matrix(test::normal_matrix(m, dim, s)), k, iota_n(m), s);
  };
  std::vector<std::pair<std::string, std::function<LayerStack()>>> cases;
  for (const char* k : {"linear", "rbf:gamma=0.1", "chi2exp:gamma=0.3", "chi2paper"}) {
    cases.emplace_back(std::string("nystrom/") + k, [=] {
      LayerStack s;
      s.emplace<NystromLayer>(lm(16, d, parse_kernel(k), 11), true);
      s.emplace<DenseLayer>(16, 12, Activation::relu, 12);
      s.emplace<DenseLayer>(12, c, Activation::none, 13);
      return s;
    });
  }
  cases.emplace_back("nystrom/random-init", [=] {
    LayerStack s;
    s.emplace<NystromLayer>(lm(12, d, KernelSpec::rbf(0.1), 14), true, NystromInit::random, 20, 15);
    s.emplace<DenseLayer>(20, c, Activation::none, 16);
    return s;
  });
  cases.emplace_back("multikernel", [=] {
    std::vector<NystromLayer> subs{NystromLayer(lm(8, d, KernelSpec::rbf(0.1), 21), true),
                                   NystromLayer(lm(8, d, KernelSpec::chi2_exp(0.3), 22), true),
                                   NystromLayer(lm(6, d, KernelSpec::linear(), 23), true)};
    LayerStack s;
    s.emplace<MultiKernelLayer>(std::move(subs));
    s.emplace<DenseLayer>(22, c, Activation::none, 24);
    return s;
  });
  cases.emplace_back("multinystrom", [=] {
    std::vector<NystromLayer> subs{NystromLayer(lm(8, 4, KernelSpec::rbf(0.2), 31), true),
                                   NystromLayer(lm(8, d - 4, KernelSpec::chi2_exp(0.2), 32), true)};
    LayerStack s;
    s.emplace<MultiKernelLayer>(std::move(subs), std::vector<MultiKernelLayer::Slice>{{0, 4}, {4, d}});
    s.emplace<DenseLayer>(16, c, Activation::none, 33);
    return s;
  });
  cases.emplace_back("dense+relu", [=] {
    LayerStack s;
    s.emplace<DenseLayer>(d, 16, Activation::relu, 41);
    s.emplace<DenseLayer>(16, 16, Activation::relu, 42);
    s.emplace<DenseLayer>(16, c, Activation::none, 43);
    return s;
  });
  cases.emplace_back("classifier", [=] {
    LayerStack s;
    s.emplace<DenseLayer>(d, c * 4, Activation::none, 51);
    s.emplace<DenseLayer>(c * 4, c, Activation::none, 52);
    return s;
  });
  cases.emplace_back("fastfood", [=] {
    std::vector<FastfoodBlock> blocks{make_fastfood(d, 2.0, 61), make_fastfood(d, 2.0, 62)};
    LayerStack s;
    s.emplace<FastfoodLayer>(std::move(blocks), true, d);
    s.emplace<DenseLayer>(64, c, Activation::none, 63);
    return s;
  });

  const Matrix x = test::abs_matrix(test::normal_matrix(b, d, 70));
  std::vector<int> y(b);
  for (std::size_t i = 0; i < b; ++i) y[i] = static_cast<int>(i % c);

  bool ok = true;
  double worst = 0.0;
  std::string worst_case;
  std::size_t min_probes = ~std::size_t{0};
  for (auto& [name, make] : cases) {
    LayerStack s = make();
    const test::GradCheck r = test::grad_check(s, x, y, 100, 99);
    min_probes = std::min(min_probes, r.probes);
    if (r.probes < 100 || !(r.max_rel <= 1e-5)) ok = false;
    if (!(r.max_rel <= worst)) {
      worst = r.max_rel;
      worst_case = name + " " + r.worst;
    }
  }
  // k_{x,L} is constant in the trainable parameters: kernel layers end the backward chain.
  const LandmarkSet ls = lm(4, d, KernelSpec::rbf(0.1), 80);
  const bool structural = !NystromLayer(ls, true).propagates_input_grad() &&
                          !MultiKernelLayer({NystromLayer(ls, true)}).propagates_input_grad();
  const double secs = seconds_since(t0);
  ok = ok && structural && secs < 60.0;
  return {ok, std::to_string(cases.size()) + " layer/kernel cases, >= " + std::to_string(min_probes) +
                  " probes each, worst rel-err " + fmt("%.2e", worst) + " at " + worst_case + " (tol 1e-5), " +
                  fmt("%.2f", secs) + " s (limit 60 s)" + (structural ? "" : ", kernel layers propagate gradients")};
}

Verdict c4_fastfood() {
  double worst = 0.0;
  for (std::size_t d : {64u, 256u})
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const FastfoodBlock blk = make_fastfood(d, 0.5 + 0.1 * static_cast<double>(seed % 7), 1000 + seed);
      const Matrix x = test::normal_matrix(4, d, 2000 + seed);
      const Matrix ref = test::naive_mul(x, test::naive_t(test::dense_v(blk)));
      worst = std::max(worst, test::max_diff(fastfood_project(blk, x), ref));
    }
  return {worst <= 1e-10, "max|Vx_fwht - Vx_dense| = " + fmt("%.2e", worst) + " over 50 seeds x d_pad {64,256} (tol 1e-10)"};
}

Verdict c5_random_features() {
  const std::size_t d = 16, pairs = 500;
  const Matrix a = test::normal_matrix(pairs, d, 301), b = test::normal_matrix(pairs, d, 302);
  const double gamma = bandwidth_heuristic(a, 1000, 303);
  std::map<std::size_t, double> rks, ff;
  for (std::size_t q : {1024u, 4096u}) {
    const RksProjection p = make_rks(d, q, gamma, 400 + q);
    rks[q] = test::mean_kernel_error(rks_features(p, a), rks_features(p, b), a, b, gamma);
    std::vector<FastfoodBlock> blocks;
    for (std::size_t k = 0; k < q / d; ++k) blocks.push_back(make_fastfood(d, fastfood_sigma_for_gamma(gamma), 500 + q + k));
    ff[q] = test::mean_kernel_error(fastfood_features(blocks, a), fastfood_features(blocks, b), a, b, gamma);
  }
  const bool law = rks[4096] <= 0.6 * rks[1024];
  const bool close = ff[1024] <= 2.0 * rks[1024] && ff[4096] <= 2.0 * rks[4096];
  return {law && close, "RKS err q=1024 " + fmt("%.4f", rks[1024]) + ", q=4096 " + fmt("%.4f", rks[4096]) +
                            " (ratio " + fmt("%.3f", rks[4096] / rks[1024]) + ", tol 0.6); Fastfood " +
                            fmt("%.4f", ff[1024]) + " / " + fmt("%.4f", ff[4096]) + " (tol 2x RKS)"};
}

Verdict c6_param_count() {
  const std::size_t c = 10;
  std::size_t checked = 0;
  bool ok = true;
  for (std::size_t m = 2; m <= 128; ++m) {
    std::size_t counts[2];
    int k = 0;
    for (std::size_t d : {64u, 512u}) {
      const Matrix pts = test::normal_matrix(m, d, 600 + m);
      LayerStack s;
      s.emplace<NystromLayer>(make_landmarks(pts, KernelSpec::rbf(1.0 / static_cast<double>(d)), iota_n(m), m), true);
      s.emplace<DenseLayer>(m, c, Activation::none, 1);
      counts[k++] = param_count(s);
    }
    ok = ok && counts[0] == counts[1] && counts[0] == m * m + m * c + c;
    ++checked;
  }
  for (std::size_t d : {64u, 512u})
    for (std::size_t hidden : {16u, 64u, 256u, 1024u}) {
      LayerStack s;
      s.emplace<DenseLayer>(d, hidden, Activation::relu, 1);
      s.emplace<DenseLayer>(hidden, c, Activation::none, 2);
      ok = ok && param_count(s) == d * hidden + hidden + hidden * c + c;
      ++checked;
    }
  return {ok, std::to_string(checked) + " closed-form counts checked (m = 2..128 at d = 64 and 512; dense d x D grid)"};
}

Verdict c7_sweep() {
  const auto t0 = Clock::now();
  const std::vector<double> ms{2, 4, 8, 16, 32, 64, 128};
  std::map<bool, std::vector<double>> med;
  for (bool adaptive : {true, false}) {
    RunConfig cfg = blobs_config();
    cfg.arch.adaptive = adaptive;
    const auto rows = run_sweep(cfg, SweepAxis::m, ms, 10);
    for (double m : ms) {
      std::vector<double> acc;
      for (const auto& r : rows)
        if (r.value == m && !r.run.failed) acc.push_back(r.run.result.test_acc);
      med[adaptive].push_back(acc.size() == 10 ? median(acc) : 0.0);
    }
  }
  const double secs = seconds_since(t0);
  bool ok = secs < 600.0;
  std::string curve;
  for (std::size_t i = 0; i < ms.size(); ++i) {
    curve += (i ? " " : "") + fmt("%.0f:", ms[i]) + fmt("%.3f", med[true][i]) + "/" + fmt("%.3f", med[false][i]);
    if (med[true][i] < med[false][i] - 0.01) ok = false;
    if (i > 0 && (med[true][i] < med[true][i - 1] - 0.02 || med[false][i] < med[false][i - 1] - 0.02)) ok = false;
  }
  return {ok, "median test acc adaptive/non-adaptive by m {" + curve +
                  "} (max drop 0.02, adaptive >= non-adaptive - 0.01), " + fmt("%.0f", secs) + " s (limit 600 s)"};
}

Verdict c8_smallset() {
  const auto t0 = Clock::now();
  RunConfig cfg = blobs_config();
  cfg.arch.m = 128;
  const auto rows = run_smallset(cfg, {5}, 30);
  std::map<std::string, std::vector<double>> acc;
  std::size_t failed = 0;
  for (const auto& r : rows) {
    if (r.run.failed) ++failed;
    else acc[r.arch].push_back(r.run.result.test_acc);
  }
  const double secs = seconds_since(t0);
  const double nys = acc["nystrom-rbf"].empty() ? 0.0 : mean(acc["nystrom-rbf"]);
  const double dense = acc["dense-1024"].empty() ? 1.0 : mean(acc["dense-1024"]);
  const bool ok = failed == 0 && acc["nystrom-rbf"].size() == 30 && acc["dense-1024"].size() == 30 &&
                  nys >= dense - 0.02 && secs < 900.0;
  return {ok, "5/class mean test acc nystrom-rbf " + fmt("%.3f", nys) + " vs dense-1024 " + fmt("%.3f", dense) +
                  " (tol -0.02), 30 seeds, " + fmt("%.0f", secs) + " s (limit 900 s)"};
}

Verdict c9_mkl() {
  const RunConfig cfg = blobs_config();
  const std::vector<double> sigmas = default_sigma_grid(cfg);
  const std::vector<std::size_t> ms{2, 4, 8};
  const auto rows = run_mkl(cfg, sigmas, ms, 10);
  bool ok = true;
  std::string detail;
  for (std::size_t m : ms) {
    std::map<double, std::vector<double>> single;
    std::vector<double> fused;
    for (const auto& r : rows) {
      if (r.m != m) continue;
      if (r.run.failed) ok = false;
      (r.model == "fused" ? fused : single[r.sigma]).push_back(r.run.result.test_acc);
    }
    double best = 0.0, worst = 1.0;
    for (auto& [s, v] : single) {
      best = std::max(best, median(v));
      worst = std::min(worst, median(v));
    }
    const double f = fused.empty() ? 0.0 : median(fused);
    ok = ok && f >= best - 0.02 && f >= worst + 0.05;
    detail += (detail.empty() ? "" : "; ") + std::string("m=") + std::to_string(m) + " fused " + fmt("%.3f", f) +
              " best " + fmt("%.3f", best) + " worst " + fmt("%.3f", worst);
  }
  return {ok, detail + " (fused >= best - 0.02 and >= worst + 0.05, medians over 10 seeds)"};
}

Verdict c10_fwht_speed() {
  const std::size_t n = std::size_t{1} << 14;
  const Matrix x = test::normal_matrix(1, n, 1001);
  const Vector v(x.data().begin(), x.data().end());

  auto t0 = Clock::now();
  Vector dense(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += (std::popcount(i & j) & 1 ? -v[j] : v[j]);
    dense[i] = s;
  }
  const double naive = seconds_since(t0);

  std::vector<double> times;
  Vector fast;
  for (int r = 0; r < 21; ++r) {
    t0 = Clock::now();
    fast = fwht(v);
    times.push_back(seconds_since(t0));
  }
  const double quick = median(times);
  double err = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    err = std::max(err, std::abs(fast[i] - dense[i]));
    scale = std::max(scale, std::abs(dense[i]));
  }
  const double speedup = naive / quick;
  return {speedup >= 10.0 && err <= 1e-9 * scale,
          "d=2^14: naive " + fmt("%.3f", naive) + " s, fwht " + fmt("%.2e", quick) + " s, speedup " +
              fmt("%.0f", speedup) + "x (need 10x); results agree to " + fmt("%.1e", err / scale)};
}

int run_cli(const std::string& args) {
  const std::string cmd = "NYSTROM_DETERMINISTIC=1 '" NYS_CLI_PATH "' " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Verdict c11_determinism() {
  const fs::path root = fs::temp_directory_path() / "nys_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  const std::string base = R"(run.id=det
dataset.kind=blobs
dataset.n=600
dataset.d=8
dataset.classes=4
dataset.sep=4
extractor.d_out=16
extractor.seed=3
optimizer.lr=1e-3
optimizer.batch=32
optimizer.epochs=4
optimizer.patience=0
seeds.data=5
seeds.init=6
seeds.landmarks=7
)";
  const std::vector<std::pair<std::string, std::string>> jobs{
      {"architecture.type=nystrom\narchitecture.kernel=rbf\narchitecture.m=8\n", "train --repeats 2"},
      {"architecture.type=nystrom\narchitecture.kernel=chi2exp\narchitecture.m=2\n", "sweep --axis m --values 2,4,8 --repeats 2"},
      {"architecture.type=dense\narchitecture.hidden=16\n", "sweep --axis hidden --values 8,16 --repeats 2"},
      {"architecture.type=deepfried\n", "sweep --axis stacks --values 1,3 --repeats 2"},
      {"architecture.type=multikernel\narchitecture.kernels=linear,rbf,chi2exp\narchitecture.m=4\n", "train"},
      {"architecture.type=multinystrom\narchitecture.kernel=rbf\narchitecture.m=4\n", "train"},
      {"architecture.type=nystrom\narchitecture.kernel=rbf\narchitecture.m=4\n", "smallset --per-class 5 --repeats 2"},
      {"architecture.type=nystrom\narchitecture.kernel=rbf\narchitecture.m=2\n", "mkl --m 2,4 --repeats 2"},
      {"architecture.type=nystrom\narchitecture.kernel=rbf\narchitecture.m=2\n", "embed2d"},
  };
  std::size_t files = 0;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    const fs::path cfg = root / ("job" + std::to_string(j) + ".cfg");
    std::ofstream(cfg) << base << jobs[j].first;
    std::vector<fs::path> outs;
    for (int rep = 0; rep < 2; ++rep) {
      const fs::path out = root / ("job" + std::to_string(j) + "_" + std::to_string(rep));
      const int code = run_cli(jobs[j].second + " --config '" + cfg.string() + "' --out '" + out.string() + "'");
      if (code != 0) return {false, "'" + jobs[j].second + "' exited with " + std::to_string(code)};
      outs.push_back(out);
    }
    for (const auto& e : fs::directory_iterator(outs[0])) {
      if (e.path().extension() != ".csv") continue;
      const fs::path twin = outs[1] / e.path().filename();
      if (!fs::exists(twin) || slurp(e.path()) != slurp(twin))
        return {false, "'" + jobs[j].second + "': " + e.path().filename().string() + " differs between runs"};
      ++files;
    }
  }
  fs::remove_all(root);
  return {files >= jobs.size(), std::to_string(jobs.size()) + " commands run twice under NYSTROM_DETERMINISTIC=1, " +
                                    std::to_string(files) + " CSV files byte-identical"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"nystrom exactness", c1_exactness},     {"low-rank recovery", c2_low_rank},
      {"gradient verification", c3_gradients}, {"fastfood structure", c4_fastfood},
      {"random-feature convergence", c5_random_features},
      {"parameter counts", c6_param_count},    {"accuracy vs m sweep", c7_sweep},
      {"small training set", c8_smallset},     {"multiple kernels", c9_mkl},
      {"fwht speed", c10_fwht_speed},          {"determinism", c11_determinism},
  };
  std::size_t passed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    passed += v.pass;
    std::printf("[%s] %2zu %s: %s\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("acceptance: %zu/%zu criteria passed\n", passed, criteria.size());
  return passed == criteria.size() ? 0 : 1;
}
