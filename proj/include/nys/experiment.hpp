#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nys/config.hpp"
#include "nys/dataset.hpp"
#include "nys/layers.hpp"
#include "nys/train.hpp"

namespace nys {

/// splitmix64 of (base, stream): independent RNG streams from one seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

struct PreparedData {
  Dataset ds;  // after extraction and subsampling
  SplitView train, val, test;
  SplitView pool;  // train + unlabeled rows
};

/// Loads or generates the dataset, runs the frozen extractor and applies
/// the per-class subsample.
PreparedData prepare_data(const RunConfig& cfg);

struct BuiltModel {
  LayerStack stack;
  std::vector<KernelSpec> kernels;  // as resolved, with heuristic gammas filled in
  double sigma = 0.0;               // deepfried only
  std::vector<std::string> notes;
};

/// Resolves `rbf` / `chi2exp` without a gamma against `features`.
KernelSpec resolve_kernel(const KernelChoice& k, const Matrix& features, std::uint64_t seed);

/// Contiguous column groups of a d-wide representation; earlier groups get
/// the remainder columns.
std::vector<std::pair<std::size_t, std::size_t>> column_groups(std::size_t d, std::size_t groups);

BuiltModel build_model(const RunConfig& cfg, const PreparedData& data);

struct RunRecord {
  std::string run_id;
  Seeds seeds;
  TrainResult result;
  std::size_t trainable_params = 0;
  std::size_t landmark_mem = 0;
  std::size_t labeled_rows = 0;
  std::string kernel_text;  // resolved kernels joined with '+'
  std::vector<std::string> notes;
  bool failed = false;
  std::string error;
};

/// Data, model and training for one seed triple. Divergence is reported
/// through `failed`; every other error propagates.
RunRecord run_once(const RunConfig& cfg, LayerStack* trained = nullptr);

}  // namespace nys
