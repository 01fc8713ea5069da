#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "nys/io.hpp"
#include "nys/matrix.hpp"

namespace nys {

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

/// `unlabeled` holds training rows whose labels were withheld; they stay
/// available as a landmark pool.
enum class Split : std::uint8_t { train, val, test, unlabeled };

struct Dataset {
  Matrix features;  // n×d
  std::vector<int> labels;
  std::vector<Split> splits;
  std::size_t num_classes = 0;
  std::string name;
  std::uint64_t seed = 0;

  std::size_t size() const { return features.rows(); }
  std::size_t dim() const { return features.cols(); }
  std::vector<std::size_t> indices(Split s) const;
  /// Throws DimensionError/LabelError-style errors if any invariant fails.
  void validate() const;
};

/// Rows of one split, ready for training or evaluation.
struct SplitView {
  Matrix x;
  std::vector<int> y;
};
SplitView take(const Dataset& ds, Split s);
/// Training rows plus unlabeled rows: the pool landmarks may come from.
SplitView landmark_pool(const Dataset& ds);

/// Assigns a stratified 70/15/15 train/val/test split per class.
void assign_stratified_splits(Dataset& ds, std::uint64_t seed);

/// c unit-covariance Gaussian clusters whose centers are pairwise at least
/// `cluster_sep` apart; class sizes balanced within one.
Dataset make_blobs(std::size_t n, std::size_t d, std::size_t c, double cluster_sep, std::uint64_t seed);

/// Keeps exactly k labeled training rows per class; the remaining training
/// rows move to Split::unlabeled. Validation and test rows are untouched.
Dataset subsample_per_class(const Dataset& ds, std::size_t k_per_class, std::uint64_t seed);

/// IDX image file (magic 0x00000803, unsigned bytes, big-endian dims) and
/// label file (0x00000801). Pixels are scaled to [0, 1].
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels, std::uint64_t seed);
Matrix read_idx_images(std::istream& in);
std::vector<int> read_idx_labels(std::istream& in);

/// CSV with mandatory header `label,f0,f1,...`. Splits are assigned with
/// assign_stratified_splits(seed).
Dataset load_csv(const std::filesystem::path& path, std::uint64_t seed);
Dataset parse_csv(std::istream& in, const std::string& name, std::uint64_t seed);
void write_csv(const std::filesystem::path& path, const Dataset& ds);

/// Text manifest: name, seed, shape, split counts and per-row split tags.
void write_manifest(const std::filesystem::path& path, const Dataset& ds);
/// Re-applies the split tags recorded in a manifest to `ds`.
void apply_manifest(const std::filesystem::path& path, Dataset& ds);

/// Seeded random projection followed by relu, standing in for a frozen
/// pretrained feature extractor. Immutable after construction.
class FrozenExtractor {
 public:
  FrozenExtractor(std::size_t d_raw, std::size_t d_feat, std::uint64_t seed, double shift = 0.0);

  std::size_t input_dim() const { return projection_.rows(); }
  std::size_t output_dim() const { return projection_.cols(); }
  const Matrix& projection() const { return projection_; }
  double shift() const { return shift_; }

 private:
  Matrix projection_;  // d_raw×d_feat, N(0, 1/d_raw)
  double shift_;
};

/// relu(raw · projection) + shift.
Matrix extract(const FrozenExtractor& fx, const Matrix& raw);
Dataset extract(const FrozenExtractor& fx, const Dataset& ds);

}  // namespace nys
