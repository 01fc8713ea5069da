#include "nys/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace nys {

double evaluate(const LayerStack& stack, const SplitView& set) {
  if (set.y.empty()) return 0.0;
  return accuracy(stack.infer(set.x), set.y);
}

TrainResult train(LayerStack& stack, const SplitView& train_set, const SplitView& val_set,
                  const SplitView& test_set, const TrainOptions& opt) {
  require_dims(train_set.x.rows() == train_set.y.size(), "train: label count != row count");
  require_dims(opt.batch > 0, "train: batch size must be positive");
  const std::size_t n = train_set.x.rows();
  if (n == 0) throw InsufficientDataError("train: empty training set");

  TrainResult result;
  AdamState adam{opt.adam, {}, {}, 0};
  std::mt19937_64 rng(opt.order_seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<Matrix> best = stack.snapshot();
  // Kernel vectors against frozen landmarks never change; compute them once.
  const Matrix train_s = stack.fixed_stage(train_set.x);
  const Matrix val_s = stack.fixed_stage(val_set.x);
  const Matrix test_s = stack.fixed_stage(test_set.x);
  auto eval_staged = [&](const Matrix& s, const std::vector<int>& y) {
    return y.empty() ? 0.0 : accuracy(stack.infer_staged(s), y);
  };
  double best_val = -1.0;

  for (std::size_t epoch = 1; epoch <= opt.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < n; start += opt.batch) {
      const std::size_t end = std::min(n, start + opt.batch);
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      const Matrix xb = gather_rows(train_s, idx);
      std::vector<int> yb(idx.size());
      for (std::size_t k = 0; k < idx.size(); ++k) yb[k] = train_set.y[idx[k]];

      const Matrix logits = stack.forward_staged(xb);
      auto [loss, dlogits] = loss_softmax_xent(logits, yb);
      if (!std::isfinite(loss))
        throw DivergenceError("train: non-finite loss at epoch " + std::to_string(epoch), result.trace);
      loss_sum += loss * static_cast<double>(idx.size());
      stack.backward(dlogits);
      adam_step(adam, stack.params());
    }

    EpochMetrics em{epoch, loss_sum / static_cast<double>(n), eval_staged(val_s, val_set.y),
                    eval_staged(test_s, test_set.y)};
    result.trace.push_back(em);
    if (em.val_acc > best_val) {
      best_val = em.val_acc;
      best = stack.snapshot();
      result.best_epoch = epoch;
      result.best_val_acc = em.val_acc;
      result.test_acc = em.test_acc;
    } else if (opt.patience > 0 && epoch - result.best_epoch >= opt.patience) {
      break;
    }
  }
  stack.restore(best);
  return result;
}

}  // namespace nys
