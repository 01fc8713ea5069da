#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "nys/kernels.hpp"
#include "nys/matrix.hpp"

namespace nys {

/// Parse/validation failure in a run config. line is 0 when the problem is
/// a missing key rather than a specific line.
class ConfigError : public Error {
 public:
  ConfigError(std::size_t line, std::string key, const std::string& msg);
  std::size_t line() const { return line_; }
  const std::string& key() const { return key_; }

 private:
  std::size_t line_;
  std::string key_;
};

enum class ArchType { dense, deepfried, nystrom, multikernel, multinystrom };
std::string to_string(ArchType t);

/// A kernel as written in a config: `rbf` / `chi2exp` without a gamma mean
/// "pick gamma with the bandwidth heuristic".
struct KernelChoice {
  KernelSpec spec;
  bool auto_gamma = false;

  friend bool operator==(const KernelChoice&, const KernelChoice&) = default;
};
KernelChoice parse_kernel_choice(std::string_view text);
std::string to_string(const KernelChoice& k);

struct DatasetConfig {
  std::string kind = "blobs";  // blobs | csv | idx
  std::size_t n = 2000;
  std::size_t d = 32;
  std::size_t classes = 10;
  double sep = 6.0;
  std::string path;    // csv file or idx images
  std::string labels;  // idx labels
  std::size_t per_class = 0;  // 0 keeps every labeled training row

  friend bool operator==(const DatasetConfig&, const DatasetConfig&) = default;
};

struct ExtractorConfig {
  std::size_t d_out = 64;  // 0 disables the extractor
  std::uint64_t seed = 0;
  double shift = 0.0;

  friend bool operator==(const ExtractorConfig&, const ExtractorConfig&) = default;
};

struct ArchitectureConfig {
  ArchType type = ArchType::nystrom;
  KernelChoice kernel{KernelSpec::rbf(1.0), true};  // nystrom, multinystrom
  std::vector<KernelChoice> kernels;                 // multikernel
  std::size_t m = 16;
  bool adaptive = true;
  std::string init = "exact";           // exact | random
  std::size_t out = 0;                  // 0 = square W
  std::string landmarks = "stratified"; // stratified | uniform
  std::size_t hidden = 1024;            // dense
  std::size_t stacks = 1;               // deepfried
  double sigma = 0.0;                   // deepfried; 0 = from the bandwidth heuristic
  std::size_t groups = 4;               // multinystrom

  friend bool operator==(const ArchitectureConfig&, const ArchitectureConfig&) = default;
};

struct OptimizerConfig {
  double lr = 1e-4;
  std::size_t batch = 64;
  std::size_t epochs = 200;
  std::size_t patience = 20;

  friend bool operator==(const OptimizerConfig&, const OptimizerConfig&) = default;
};

struct Seeds {
  std::uint64_t data = 0;
  std::uint64_t init = 0;
  std::uint64_t landmarks = 0;

  Seeds offset(std::uint64_t r) const { return {data + r, init + r, landmarks + r}; }
  std::string text() const;
  friend bool operator==(const Seeds&, const Seeds&) = default;
};

struct RunConfig {
  std::string run_id = "run";
  DatasetConfig dataset;
  ExtractorConfig extractor;
  ArchitectureConfig arch;
  OptimizerConfig optimizer;
  Seeds seeds;
  std::string output_dir = "out";

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Flat `key=value` lines with dotted sections; `#` starts a comment.
/// Required: architecture.type, the seeds.* triple, and the architecture's
/// own keys (e.g. architecture.kernel for nystrom). Keys that do not apply
/// to the chosen dataset kind or architecture are rejected.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::string& path);
/// Canonical text: every applicable key, in a fixed order.
std::string render_config(const RunConfig& cfg);

}  // namespace nys
