#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nys/feature_maps.hpp"
#include "nys/matrix.hpp"

namespace nys {

class StaleCacheError : public Error {
 public:
  using Error::Error;
};

/// A trainable tensor and the slot its gradient is written to.
struct ParamSlot {
  std::string name;
  Matrix* value;
  Matrix* grad;
};

/// Differentiable layer. forward() caches what backward() needs; backward()
/// consumes the cache, overwrites parameter gradients and returns dL/dx
/// (empty when the layer does not propagate to its input).
class Layer {
 public:
  virtual ~Layer() = default;

  virtual std::string kind() const = 0;
  virtual std::size_t input_dim() const = 0;
  virtual std::size_t output_dim() const = 0;

  virtual Matrix forward(const Matrix& x) = 0;
  /// Forward pass without touching the cache.
  virtual Matrix infer(const Matrix& x) const = 0;
  virtual Matrix backward(const Matrix& dy) = 0;
  virtual bool propagates_input_grad() const { return true; }

  virtual std::vector<ParamSlot> params() = 0;

  /// A leading computation that depends on no trainable parameter (the
  /// kernel vectors of a Nyström layer). forward(x) equals
  /// forward_staged(fixed_stage(x)), so callers that see the same inputs
  /// repeatedly can compute the stage once.
  virtual bool has_fixed_stage() const { return false; }
  virtual Matrix fixed_stage(const Matrix& x) const { return x; }
  virtual Matrix forward_staged(const Matrix& s) { return forward(s); }
  virtual Matrix infer_staged(const Matrix& s) const { return infer(s); }

  /// Bytes of frozen, non-trainable state (landmarks, fixed factors).
  virtual std::size_t frozen_bytes() const { return 0; }
  virtual std::unique_ptr<Layer> clone() const = 0;
};

enum class Activation { none, relu };

class DenseLayer final : public Layer {
 public:
  /// Uniform Glorot init from `seed`; bias starts at zero.
  DenseLayer(std::size_t in, std::size_t out, Activation act, std::uint64_t seed);
  DenseLayer(Matrix weight, Matrix bias, Activation act);

  std::string kind() const override { return "dense"; }
  std::size_t input_dim() const override { return weight_.rows(); }
  std::size_t output_dim() const override { return weight_.cols(); }
  Matrix forward(const Matrix& x) override;
  Matrix infer(const Matrix& x) const override;
  Matrix backward(const Matrix& dy) override;
  std::vector<ParamSlot> params() override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<DenseLayer>(*this); }

  Activation activation() const { return act_; }
  const Matrix& weight() const { return weight_; }
  const Matrix& bias() const { return bias_; }

 private:
  Matrix weight_, bias_;  // in×out, 1×out
  Matrix dweight_, dbias_;
  Activation act_;
  Matrix cached_x_, cached_out_;
  bool has_cache_ = false;
};

enum class NystromInit { exact, random };

/// k_{x,L} · W against a frozen landmark set. With adaptive = false, W stays
/// equal to K11^{-1/2} and the layer has no trainable parameters.
class NystromLayer final : public Layer {
 public:
  /// `out_dim` = 0 means square W (m×m). Random init is only valid for
  /// adaptive layers; exact init requires out_dim == m.
  NystromLayer(LandmarkSet landmarks, bool adaptive, NystromInit init = NystromInit::exact,
               std::size_t out_dim = 0, std::uint64_t seed = 0);
  NystromLayer(LandmarkSet landmarks, bool adaptive, Matrix w);

  std::string kind() const override { return "nystrom"; }
  std::size_t input_dim() const override { return landmarks_.dim(); }
  std::size_t output_dim() const override { return w_.cols(); }
  Matrix forward(const Matrix& x) override;
  Matrix infer(const Matrix& x) const override;
  Matrix backward(const Matrix& dy) override;
  bool propagates_input_grad() const override { return false; }
  std::vector<ParamSlot> params() override;
  std::size_t frozen_bytes() const override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<NystromLayer>(*this); }

  bool has_fixed_stage() const override { return true; }
  Matrix fixed_stage(const Matrix& x) const override { return kernel_vectors(x); }
  Matrix forward_staged(const Matrix& k) override;
  Matrix infer_staged(const Matrix& k) const override;

  bool adaptive() const { return adaptive_; }
  const LandmarkSet& landmarks() const { return landmarks_; }
  const Matrix& w() const { return w_; }
  /// gram(kernel, x, landmarks): the constant part of the layer.
  Matrix kernel_vectors(const Matrix& x) const;

 private:
  LandmarkSet landmarks_;
  bool adaptive_;
  Matrix w_, dw_;
  Matrix cached_k_;
  bool has_cache_ = false;
};

/// Concatenation of Nyström sublayers. With group slices, sublayer i sees
/// only columns [slice.first, slice.second) of the input.
class MultiKernelLayer final : public Layer {
 public:
  using Slice = std::pair<std::size_t, std::size_t>;

  explicit MultiKernelLayer(std::vector<NystromLayer> sublayers, std::vector<Slice> group_slices = {});

  std::string kind() const override { return "multikernel"; }
  std::size_t input_dim() const override { return input_dim_; }
  std::size_t output_dim() const override;
  Matrix forward(const Matrix& x) override;
  Matrix infer(const Matrix& x) const override;
  Matrix backward(const Matrix& dy) override;
  bool propagates_input_grad() const override { return false; }
  std::vector<ParamSlot> params() override;
  std::size_t frozen_bytes() const override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<MultiKernelLayer>(*this); }

  bool has_fixed_stage() const override { return true; }
  /// Sublayer kernel vectors side by side (width Σ m_i).
  Matrix fixed_stage(const Matrix& x) const override;
  Matrix forward_staged(const Matrix& k) override;
  Matrix infer_staged(const Matrix& k) const override;

  const std::vector<NystromLayer>& sublayers() const { return subs_; }
  const std::vector<Slice>& group_slices() const { return slices_; }

 private:
  Matrix input_for(std::size_t i, const Matrix& x) const;

  std::vector<NystromLayer> subs_;
  std::vector<Slice> slices_;
  std::size_t input_dim_ = 0;
};

/// Stacked Fastfood trig features. When adaptive, the S, G and B diagonals
/// of every block are trained; the permutation and σ stay fixed.
class FastfoodLayer final : public Layer {
 public:
  FastfoodLayer(std::vector<FastfoodBlock> blocks, bool adaptive, std::size_t input_dim);

  std::string kind() const override { return "fastfood"; }
  std::size_t input_dim() const override { return input_dim_; }
  std::size_t output_dim() const override { return 2 * d_pad_ * blocks_.size(); }
  Matrix forward(const Matrix& x) override;
  Matrix infer(const Matrix& x) const override;
  Matrix backward(const Matrix& dy) override;
  bool propagates_input_grad() const override { return false; }
  std::vector<ParamSlot> params() override;
  std::size_t frozen_bytes() const override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<FastfoodLayer>(*this); }

  bool adaptive() const { return adaptive_; }
  /// Blocks with the current (possibly trained) diagonals.
  std::vector<FastfoodBlock> current_blocks() const;

 private:
  struct BlockState {
    FastfoodBlock fixed;  // perm, sigma, d_pad
    Matrix s, g, b;       // 1×d_pad each
    Matrix ds, dg, db;
  };
  struct BlockCache {
    Matrix u0, u3, u5, v;  // padded input, permuted H·B·x, H·G·u3, projection
  };
  Matrix run(const Matrix& x, std::vector<BlockCache>* cache) const;

  std::vector<BlockState> blocks_;
  bool adaptive_;
  std::size_t input_dim_;
  std::size_t d_pad_;
  std::vector<BlockCache> cache_;
  bool has_cache_ = false;
};

/// Ordered layers; owns them. Copying deep-copies every layer.
class LayerStack {
 public:
  LayerStack() = default;
  LayerStack(const LayerStack& other);
  LayerStack& operator=(const LayerStack& other);
  LayerStack(LayerStack&&) noexcept = default;
  LayerStack& operator=(LayerStack&&) noexcept = default;

  /// Checks that dimensions chain and that no trainable layer sits before
  /// a layer that does not propagate input gradients.
  void add(std::unique_ptr<Layer> layer);
  template <typename L, typename... Args>
  L& emplace(Args&&... args) {
    auto p = std::make_unique<L>(std::forward<Args>(args)...);
    L& ref = *p;
    add(std::move(p));
    return ref;
  }

  std::size_t size() const { return layers_.size(); }
  bool empty() const { return layers_.empty(); }
  Layer& layer(std::size_t i) { return *layers_[i]; }
  const Layer& layer(std::size_t i) const { return *layers_[i]; }

  Matrix forward(const Matrix& x);
  Matrix infer(const Matrix& x) const;
  void backward(const Matrix& dlogits);

  /// The first layer's fixed stage (identity when it has none), and the
  /// passes that start from it.
  Matrix fixed_stage(const Matrix& x) const;
  Matrix forward_staged(const Matrix& s);
  Matrix infer_staged(const Matrix& s) const;

  std::vector<ParamSlot> params();
  /// Copies of current gradients, in params() order.
  std::vector<Matrix> gradients();
  std::vector<Matrix> snapshot();
  void restore(const std::vector<Matrix>& values);

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

/// Number of trainable scalars.
std::size_t param_count(LayerStack& stack);
/// Bytes of non-trainable layer state.
std::size_t frozen_bytes(const LayerStack& stack);

// ---------------------------------------------------------------------------
// Loss and optimizer
// ---------------------------------------------------------------------------

class LabelError : public Error {
 public:
  using Error::Error;
};

Matrix softmax(const Matrix& logits);

struct LossResult {
  double loss = 0.0;
  Matrix dlogits;
};

/// Mean softmax cross-entropy and its gradient (softmax - onehot) / b.
LossResult loss_softmax_xent(const Matrix& logits, std::span<const int> labels);

std::vector<int> argmax_rows(const Matrix& logits);
double accuracy(const Matrix& logits, std::span<const int> labels);

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::vector<Matrix> first, second;  // shaped like the parameters
  std::uint64_t step = 0;
};

/// One bias-corrected Adam update. Moment buffers are created on the first
/// call; later calls must present the same shapes.
void adam_step(AdamState& state, std::span<Matrix* const> params, std::span<const Matrix> grads);
/// Convenience overload over a stack's parameter slots.
void adam_step(AdamState& state, std::span<const ParamSlot> slots);

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Writes `path` plus one landmark sidecar per Nyström layer next to it
/// (`<path>.lm<k>.bin`); the checkpoint references sidecars by file name.
void save_checkpoint(const std::filesystem::path& path, LayerStack& stack);
LayerStack load_checkpoint(const std::filesystem::path& path);

}  // namespace nys
