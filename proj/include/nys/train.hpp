#pragma once

#include <cstdint>
#include <vector>

#include "nys/dataset.hpp"
#include "nys/layers.hpp"

namespace nys {

struct TrainOptions {
  AdamConfig adam;
  std::size_t batch = 64;
  std::size_t epochs = 200;
  /// Stop after this many epochs without a validation-accuracy improvement;
  /// 0 disables early stopping.
  std::size_t patience = 20;
  std::uint64_t order_seed = 0;
};

struct EpochMetrics {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_acc = 0.0;
  double test_acc = 0.0;
};

struct TrainResult {
  std::vector<EpochMetrics> trace;
  std::size_t best_epoch = 0;
  double best_val_acc = 0.0;
  double test_acc = 0.0;  // at best_epoch
};

class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::vector<EpochMetrics> trace)
      : Error(what), trace_(std::move(trace)) {}
  const std::vector<EpochMetrics>& trace() const { return trace_; }

 private:
  std::vector<EpochMetrics> trace_;
};

/// Minibatch Adam on softmax cross-entropy. After training, the stack holds
/// the parameters from the epoch with the best validation accuracy.
/// Throws DivergenceError on a non-finite loss.
TrainResult train(LayerStack& stack, const SplitView& train_set, const SplitView& val_set,
                  const SplitView& test_set, const TrainOptions& opt);

double evaluate(const LayerStack& stack, const SplitView& set);

}  // namespace nys
