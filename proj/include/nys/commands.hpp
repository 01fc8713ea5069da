#pragma once

#include <cstdint>
#include <exception>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "nys/config.hpp"
#include "nys/experiment.hpp"

namespace nys {

/// 0 success, 2 configuration/input error, 3 numerical failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;
int exit_code_for(const std::exception& e);

/// Applies `--seed N`: the base triple becomes (N, N, N).
RunConfig with_base_seed(RunConfig cfg, std::optional<std::uint64_t> seed);

struct Summary {
  double mean = 0.0, std = 0.0, median = 0.0;
  std::size_t count = 0;
};
/// Sample standard deviation (n - 1); zero for fewer than two values.
Summary summarize(std::vector<double> values);

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

/// One trace file `<run_id>_metrics.csv` with a row per (repeat, epoch), a
/// per-run status file `<run_id>_runs.csv`, and `<run_id>_r<k>.ckpt` per run.
struct TrainOutput {
  std::vector<RunRecord> runs;
  bool any_failed() const;
};
TrainOutput cmd_train(const RunConfig& cfg, std::size_t repeats, const std::filesystem::path& out_dir);
void write_metrics_csv(std::ostream& os, const std::vector<RunRecord>& runs);
void write_runs_csv(std::ostream& os, const std::vector<RunRecord>& runs);

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

enum class SweepAxis { m, hidden, stacks };
SweepAxis parse_sweep_axis(const std::string& text);
std::string to_string(SweepAxis a);
std::vector<double> default_sweep_values(SweepAxis a);
/// Throws ConfigError when the axis does not apply to the architecture.
RunConfig apply_axis(const RunConfig& base, SweepAxis axis, double value);

struct SweepRow {
  double value = 0.0;
  std::size_t repeat = 0;
  RunRecord run;
};
/// Rows ordered by (value, repeat). Repeats run in parallel when threads allow.
std::vector<SweepRow> run_sweep(const RunConfig& base, SweepAxis axis, const std::vector<double>& values,
                                std::size_t repeats);
void write_sweep_csv(std::ostream& os, SweepAxis axis, const std::vector<SweepRow>& rows);
void write_sweep_summary(std::ostream& os, SweepAxis axis, const std::vector<SweepRow>& rows);

// ---------------------------------------------------------------------------
// smallset
// ---------------------------------------------------------------------------

/// The architectures compared in the small-training-set grid.
std::vector<std::string> smallset_architectures();
RunConfig smallset_variant(const RunConfig& base, const std::string& arch, std::size_t per_class);

struct SmallsetRow {
  std::string arch;
  std::size_t per_class = 0;
  std::size_t repeat = 0;
  RunRecord run;
};
std::vector<SmallsetRow> run_smallset(const RunConfig& base, const std::vector<std::size_t>& per_class,
                                      std::size_t repeats);
void write_smallset_csv(std::ostream& os, const std::vector<SmallsetRow>& rows);
void write_smallset_summary(std::ostream& os, const std::vector<SmallsetRow>& rows);

// ---------------------------------------------------------------------------
// mkl
// ---------------------------------------------------------------------------

inline constexpr double kMklMultipliers[] = {1e-2, 1e-1, 1.0, 1e1, 1e2};

/// σ_h · kMklMultipliers, with σ_h = 1/γ_h from the bandwidth heuristic on
/// the base config's data (rbf k = exp(-||x-y||²/σ)).
std::vector<double> default_sigma_grid(const RunConfig& base);

struct MklRow {
  std::size_t m = 0;
  std::string model;   // "single" or "fused"
  double sigma = 0.0;  // 0 for the fused row
  std::size_t width = 0;
  std::size_t repeat = 0;
  RunRecord run;
};
/// Per m: one single-kernel run per σ and one fused run, for every repeat.
std::vector<MklRow> run_mkl(const RunConfig& base, const std::vector<double>& sigmas,
                            const std::vector<std::size_t>& ms, std::size_t repeats);
void write_mkl_csv(std::ostream& os, const std::vector<MklRow>& rows);
void write_mkl_summary(std::ostream& os, const std::vector<MklRow>& rows);

// ---------------------------------------------------------------------------
// embed2d
// ---------------------------------------------------------------------------

struct Embedding2d {
  std::vector<std::size_t> test_rows;  // indices into the test split
  Matrix coords;                       // rows × 2, nystrom_features of those rows
  std::vector<int> labels;
  std::string note;
};
Embedding2d run_embed2d(const RunConfig& cfg, std::size_t max_rows = 1000);
void write_embed2d_csv(std::ostream& os, const Embedding2d& e);

// ---------------------------------------------------------------------------
// gramcheck
// ---------------------------------------------------------------------------

struct CheckResult {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double tolerance = 0.0;
};
std::vector<CheckResult> run_gramcheck(std::uint64_t seed);
void write_gramcheck_table(std::ostream& os, const std::vector<CheckResult>& rows);

/// V assembled densely as (1/(σ√d)) S H G Π H B; only for checking.
Matrix fastfood_dense_matrix(const FastfoodBlock& block);

}  // namespace nys
