#include "nys/layers.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "nys/linalg.hpp"
#include "nys/ops.hpp"

namespace nys {

// ---------------------------------------------------------------------------
// DenseLayer
// ---------------------------------------------------------------------------

DenseLayer::DenseLayer(std::size_t in, std::size_t out, Activation act, std::uint64_t seed)
    : weight_(in, out), bias_(1, out), dweight_(in, out), dbias_(1, out), act_(act) {
  require_dims(in > 0 && out > 0, "DenseLayer: zero-sized layer");
  std::mt19937_64 rng(seed);
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  std::uniform_real_distribution<double> uni(-limit, limit);
  for (double& w : weight_.data()) w = uni(rng);
}

DenseLayer::DenseLayer(Matrix weight, Matrix bias, Activation act)
    : weight_(std::move(weight)), bias_(std::move(bias)), act_(act) {
  require_dims(bias_.rows() == 1 && bias_.cols() == weight_.cols(), "DenseLayer: bias shape mismatch");
  dweight_ = Matrix(weight_.rows(), weight_.cols());
  dbias_ = Matrix(1, weight_.cols());
}

Matrix DenseLayer::infer(const Matrix& x) const {
  require_dims(x.cols() == weight_.rows(), "dense: input has " + std::to_string(x.cols()) + " columns, expected " +
                                               std::to_string(weight_.rows()));
  Matrix z = matmul(x, weight_);
  for (std::size_t i = 0; i < z.rows(); ++i)
    for (std::size_t j = 0; j < z.cols(); ++j) {
      double v = z(i, j) + bias_(0, j);
      if (act_ == Activation::relu) v = std::max(0.0, v);
      z(i, j) = v;
    }
  return z;
}

Matrix DenseLayer::forward(const Matrix& x) {
  Matrix out = infer(x);
  cached_x_ = x;
  cached_out_ = out;
  has_cache_ = true;
  return out;
}

Matrix DenseLayer::backward(const Matrix& dy) {
  if (!has_cache_) throw StaleCacheError("dense: backward without a matching forward");
  require_dims(dy.rows() == cached_out_.rows() && dy.cols() == cached_out_.cols(), "dense: gradient shape mismatch");
  Matrix dz = dy;
  if (act_ == Activation::relu)
    for (std::size_t k = 0; k < dz.size(); ++k)
      if (!(cached_out_.data()[k] > 0.0)) dz.data()[k] = 0.0;
  dweight_ = matmul_tn(cached_x_, dz);
  dbias_ = column_sums(dz);
  has_cache_ = false;
  return matmul_nt(dz, weight_);
}

std::vector<ParamSlot> DenseLayer::params() {
  return {{"dense.weight", &weight_, &dweight_}, {"dense.bias", &bias_, &dbias_}};
}

// ---------------------------------------------------------------------------
// NystromLayer
// ---------------------------------------------------------------------------

NystromLayer::NystromLayer(LandmarkSet landmarks, bool adaptive, NystromInit init, std::size_t out_dim,
                           std::uint64_t seed)
    : landmarks_(std::move(landmarks)), adaptive_(adaptive) {
  const std::size_t m = landmarks_.m();
  if (out_dim == 0) out_dim = m;
  if (init == NystromInit::exact) {
    require_dims(out_dim == m, "nystrom: exact initialization needs a square W");
    w_ = landmarks_.k11_inv_sqrt;
  } else {
    if (!adaptive_) throw Error("nystrom: random initialization needs an adaptive layer");
    w_ = Matrix(m, out_dim);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(m)));
    for (double& v : w_.data()) v = normal(rng);
  }
  dw_ = Matrix(w_.rows(), w_.cols());
}

NystromLayer::NystromLayer(LandmarkSet landmarks, bool adaptive, Matrix w)
    : landmarks_(std::move(landmarks)), adaptive_(adaptive), w_(std::move(w)) {
  require_dims(w_.rows() == landmarks_.m(), "nystrom: W rows != landmark count");
  dw_ = Matrix(w_.rows(), w_.cols());
}

Matrix NystromLayer::kernel_vectors(const Matrix& x) const {
  require_dims(x.cols() == landmarks_.dim(), "nystrom: input has " + std::to_string(x.cols()) +
                                                 " columns, landmarks have " + std::to_string(landmarks_.dim()));
  return gram(landmarks_.kernel, x, landmarks_.points);
}

Matrix NystromLayer::infer(const Matrix& x) const { return infer_staged(kernel_vectors(x)); }

Matrix NystromLayer::forward(const Matrix& x) { return forward_staged(kernel_vectors(x)); }

Matrix NystromLayer::infer_staged(const Matrix& k) const {
  require_dims(k.cols() == landmarks_.m(), "nystrom: kernel vectors have the wrong width");
  return matmul(k, w_);
}

Matrix NystromLayer::forward_staged(const Matrix& k) {
  require_dims(k.cols() == landmarks_.m(), "nystrom: kernel vectors have the wrong width");
  cached_k_ = k;
  has_cache_ = true;
  return matmul(cached_k_, w_);
}

Matrix NystromLayer::backward(const Matrix& dy) {
  if (!has_cache_) throw StaleCacheError("nystrom: backward without a matching forward");
  require_dims(dy.rows() == cached_k_.rows() && dy.cols() == w_.cols(), "nystrom: gradient shape mismatch");
  if (adaptive_) dw_ = matmul_tn(cached_k_, dy);
  has_cache_ = false;
  return {};
}

std::vector<ParamSlot> NystromLayer::params() {
  if (!adaptive_) return {};
  return {{"nystrom.w", &w_, &dw_}};
}

std::size_t NystromLayer::frozen_bytes() const {
  // A non-adaptive layer's W is the fixed factor itself.
  return adaptive_ ? landmarks_.points.size() * sizeof(double) : landmarks_.memory_bytes();
}

// ---------------------------------------------------------------------------
// MultiKernelLayer
// ---------------------------------------------------------------------------

MultiKernelLayer::MultiKernelLayer(std::vector<NystromLayer> sublayers, std::vector<Slice> group_slices)
    : subs_(std::move(sublayers)), slices_(std::move(group_slices)) {
  require_dims(!subs_.empty(), "multikernel: no sublayers");
  if (slices_.empty()) {
    input_dim_ = subs_.front().input_dim();
    for (const auto& s : subs_)
      require_dims(s.input_dim() == input_dim_, "multikernel: sublayers disagree on input dimension");
    return;
  }
  require_dims(slices_.size() == subs_.size(), "multikernel: one slice per sublayer required");
  std::vector<Slice> sorted = slices_;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    require_dims(sorted[i].first < sorted[i].second, "multikernel: empty group slice");
    if (i > 0) require_dims(sorted[i].first >= sorted[i - 1].second, "multikernel: group slices overlap");
  }
  for (std::size_t i = 0; i < subs_.size(); ++i)
    require_dims(slices_[i].second - slices_[i].first == subs_[i].input_dim(),
                 "multikernel: slice width != sublayer landmark dimension");
  input_dim_ = sorted.back().second;
}

std::size_t MultiKernelLayer::output_dim() const {
  std::size_t total = 0;
  for (const auto& s : subs_) total += s.output_dim();
  return total;
}

Matrix MultiKernelLayer::input_for(std::size_t i, const Matrix& x) const {
  if (slices_.empty()) return x;
  return slice_cols(x, slices_[i].first, slices_[i].second);
}

Matrix MultiKernelLayer::infer(const Matrix& x) const {
  require_dims(x.cols() == input_dim_, "multikernel: input dimension mismatch");
  std::vector<Matrix> parts;
  parts.reserve(subs_.size());
  for (std::size_t i = 0; i < subs_.size(); ++i) parts.push_back(subs_[i].infer(input_for(i, x)));
  return hconcat(parts);
}

Matrix MultiKernelLayer::forward(const Matrix& x) {
  require_dims(x.cols() == input_dim_, "multikernel: input dimension mismatch");
  std::vector<Matrix> parts;
  parts.reserve(subs_.size());
  for (std::size_t i = 0; i < subs_.size(); ++i) parts.push_back(subs_[i].forward(input_for(i, x)));
  return hconcat(parts);
}

Matrix MultiKernelLayer::fixed_stage(const Matrix& x) const {
  require_dims(x.cols() == input_dim_, "multikernel: input dimension mismatch");
  std::vector<Matrix> parts;
  parts.reserve(subs_.size());
  for (std::size_t i = 0; i < subs_.size(); ++i) parts.push_back(subs_[i].fixed_stage(input_for(i, x)));
  return hconcat(parts);
}

Matrix MultiKernelLayer::forward_staged(const Matrix& k) {
  std::vector<Matrix> parts;
  parts.reserve(subs_.size());
  std::size_t off = 0;
  for (auto& s : subs_) {
    const std::size_t m = s.landmarks().m();
    require_dims(off + m <= k.cols(), "multikernel: kernel vectors have the wrong width");
    parts.push_back(s.forward_staged(slice_cols(k, off, off + m)));
    off += m;
  }
  require_dims(off == k.cols(), "multikernel: kernel vectors have the wrong width");
  return hconcat(parts);
}

Matrix MultiKernelLayer::infer_staged(const Matrix& k) const {
  std::vector<Matrix> parts;
  parts.reserve(subs_.size());
  std::size_t off = 0;
  for (const auto& s : subs_) {
    const std::size_t m = s.landmarks().m();
    require_dims(off + m <= k.cols(), "multikernel: kernel vectors have the wrong width");
    parts.push_back(s.infer_staged(slice_cols(k, off, off + m)));
    off += m;
  }
  require_dims(off == k.cols(), "multikernel: kernel vectors have the wrong width");
  return hconcat(parts);
}

Matrix MultiKernelLayer::backward(const Matrix& dy) {
  require_dims(dy.cols() == output_dim(), "multikernel: gradient shape mismatch");
  std::size_t off = 0;
  for (auto& s : subs_) {
    s.backward(slice_cols(dy, off, off + s.output_dim()));
    off += s.output_dim();
  }
  return {};
}

std::vector<ParamSlot> MultiKernelLayer::params() {
  std::vector<ParamSlot> all;
  for (std::size_t i = 0; i < subs_.size(); ++i)
    for (auto p : subs_[i].params()) {
      p.name = "multikernel." + std::to_string(i) + "." + p.name;
      all.push_back(p);
    }
  return all;
}

std::size_t MultiKernelLayer::frozen_bytes() const {
  std::size_t total = 0;
  for (const auto& s : subs_) total += s.frozen_bytes();
  return total;
}

// ---------------------------------------------------------------------------
// FastfoodLayer
// ---------------------------------------------------------------------------

namespace {
Matrix row_matrix(const Vector& v) { return Matrix(1, v.size(), v); }
}  // namespace

FastfoodLayer::FastfoodLayer(std::vector<FastfoodBlock> blocks, bool adaptive, std::size_t input_dim)
    : adaptive_(adaptive), input_dim_(input_dim) {
  require_dims(!blocks.empty(), "fastfood: no blocks");
  d_pad_ = blocks.front().d_pad;
  require_dims(input_dim_ <= d_pad_, "fastfood: input wider than d_pad");
  for (auto& b : blocks) {
    require_dims(b.d_pad == d_pad_, "fastfood: inconsistent d_pad across blocks");
    BlockState st;
    st.s = row_matrix(b.s_diag);
    st.g = row_matrix(b.g_diag);
    st.b = row_matrix(b.b_diag);
    st.ds = Matrix(1, d_pad_);
    st.dg = Matrix(1, d_pad_);
    st.db = Matrix(1, d_pad_);
    st.fixed = std::move(b);
    blocks_.push_back(std::move(st));
  }
}

Matrix FastfoodLayer::run(const Matrix& x, std::vector<BlockCache>* cache) const {
  require_dims(x.cols() == input_dim_, "fastfood: input dimension mismatch");
  const std::size_t n = d_pad_, rows = x.rows();
  const double norm = 1.0 / std::sqrt(static_cast<double>(n * blocks_.size()));
  Matrix out(rows, output_dim());
  if (cache) cache->assign(blocks_.size(), {});
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    const auto& st = blocks_[k];
    Matrix u0(rows, n);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < x.cols(); ++j) u0(i, j) = x(i, j);
    Matrix u(rows, n);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < n; ++j) u(i, j) = u0(i, j) * st.b(0, j);
    fwht_rows(u);
    Matrix u3(rows, n);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < n; ++j) u3(i, j) = u(i, st.fixed.perm[j]);
    Matrix u5(rows, n);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < n; ++j) u5(i, j) = u3(i, j) * st.g(0, j);
    fwht_rows(u5);
    const double scale = st.fixed.scale();
    Matrix v(rows, n);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < n; ++j) v(i, j) = scale * st.s(0, j) * u5(i, j);
    const std::size_t off = 2 * n * k;
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        out(i, off + j) = norm * std::cos(v(i, j));
        out(i, off + n + j) = norm * std::sin(v(i, j));
      }
    if (cache) (*cache)[k] = {std::move(u0), std::move(u3), std::move(u5), std::move(v)};
  }
  return out;
}

Matrix FastfoodLayer::infer(const Matrix& x) const { return run(x, nullptr); }

Matrix FastfoodLayer::forward(const Matrix& x) {
  Matrix out = run(x, &cache_);
  has_cache_ = true;
  return out;
}

Matrix FastfoodLayer::backward(const Matrix& dy) {
  if (!has_cache_) throw StaleCacheError("fastfood: backward without a matching forward");
  require_dims(dy.cols() == output_dim(), "fastfood: gradient shape mismatch");
  has_cache_ = false;
  if (!adaptive_) return {};
  const std::size_t n = d_pad_;
  const double norm = 1.0 / std::sqrt(static_cast<double>(n * blocks_.size()));
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    auto& st = blocks_[k];
    const auto& c = cache_[k];
    const std::size_t rows = c.v.rows(), off = 2 * n * k;
    const double scale = st.fixed.scale();
    st.ds.fill(0.0);
    st.dg.fill(0.0);
    st.db.fill(0.0);
    Matrix du5(rows, n);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const double v = c.v(i, j);
        const double dv = norm * (-std::sin(v) * dy(i, off + j) + std::cos(v) * dy(i, off + n + j));
        st.ds(0, j) += dv * scale * c.u5(i, j);
        du5(i, j) = dv * scale * st.s(0, j);
      }
    fwht_rows(du5);  // H is symmetric: du4 = H du5
    Matrix du2(rows, n);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        st.dg(0, j) += du5(i, j) * c.u3(i, j);
        du2(i, st.fixed.perm[j]) = du5(i, j) * st.g(0, j);
      }
    fwht_rows(du2);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < n; ++j) st.db(0, j) += du2(i, j) * c.u0(i, j);
  }
  return {};
}

std::vector<ParamSlot> FastfoodLayer::params() {
  if (!adaptive_) return {};
  std::vector<ParamSlot> all;
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    const std::string p = "fastfood." + std::to_string(k) + ".";
    all.push_back({p + "s", &blocks_[k].s, &blocks_[k].ds});
    all.push_back({p + "g", &blocks_[k].g, &blocks_[k].dg});
    all.push_back({p + "b", &blocks_[k].b, &blocks_[k].db});
  }
  return all;
}

std::size_t FastfoodLayer::frozen_bytes() const {
  // Permutations always; the diagonals too when they are not trained.
  std::size_t per_block = d_pad_ * sizeof(std::size_t) + (adaptive_ ? 0 : 3 * d_pad_ * sizeof(double));
  return per_block * blocks_.size();
}

std::vector<FastfoodBlock> FastfoodLayer::current_blocks() const {
  std::vector<FastfoodBlock> out;
  for (const auto& st : blocks_) {
    FastfoodBlock b = st.fixed;
    b.s_diag.assign(st.s.data().begin(), st.s.data().end());
    b.g_diag.assign(st.g.data().begin(), st.g.data().end());
    b.b_diag.assign(st.b.data().begin(), st.b.data().end());
    out.push_back(std::move(b));
  }
  return out;
}

// ---------------------------------------------------------------------------
// LayerStack
// ---------------------------------------------------------------------------

LayerStack::LayerStack(const LayerStack& other) {
  for (const auto& l : other.layers_) layers_.push_back(l->clone());
}

LayerStack& LayerStack::operator=(const LayerStack& other) {
  if (this != &other) {
    LayerStack tmp(other);
    *this = std::move(tmp);
  }
  return *this;
}

void LayerStack::add(std::unique_ptr<Layer> layer) {
  if (!layers_.empty()) {
    require_dims(layers_.back()->output_dim() == layer->input_dim(),
                 "stack: " + layer->kind() + " expects " + std::to_string(layer->input_dim()) + " inputs, previous " +
                     layers_.back()->kind() + " produces " + std::to_string(layers_.back()->output_dim()));
    if (!layer->propagates_input_grad())
      for (auto& l : layers_)
        if (!l->params().empty())
          throw Error("stack: trainable " + l->kind() + " layer cannot precede a " + layer->kind() +
                      " layer (no input gradient)");
  }
  layers_.push_back(std::move(layer));
}

Matrix LayerStack::forward(const Matrix& x) {
  Matrix h = x;
  for (auto& l : layers_) h = l->forward(h);
  return h;
}

Matrix LayerStack::infer(const Matrix& x) const {
  Matrix h = x;
  for (const auto& l : layers_) h = l->infer(h);
  return h;
}

Matrix LayerStack::fixed_stage(const Matrix& x) const {
  if (layers_.empty() || !layers_.front()->has_fixed_stage()) return x;
  return layers_.front()->fixed_stage(x);
}

Matrix LayerStack::forward_staged(const Matrix& s) {
  if (layers_.empty()) return s;
  Matrix h = layers_.front()->forward_staged(s);
  for (std::size_t i = 1; i < layers_.size(); ++i) h = layers_[i]->forward(h);
  return h;
}

Matrix LayerStack::infer_staged(const Matrix& s) const {
  if (layers_.empty()) return s;
  Matrix h = layers_.front()->infer_staged(s);
  for (std::size_t i = 1; i < layers_.size(); ++i) h = layers_[i]->infer(h);
  return h;
}

void LayerStack::backward(const Matrix& dlogits) {
  Matrix g = dlogits;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    g = layers_[i]->backward(g);
    if (!layers_[i]->propagates_input_grad()) break;
  }
}

std::vector<ParamSlot> LayerStack::params() {
  std::vector<ParamSlot> all;
  for (std::size_t i = 0; i < layers_.size(); ++i)
    for (auto p : layers_[i]->params()) {
      p.name = std::to_string(i) + "." + p.name;
      all.push_back(p);
    }
  return all;
}

std::vector<Matrix> LayerStack::gradients() {
  std::vector<Matrix> g;
  for (const auto& p : params()) g.push_back(*p.grad);
  return g;
}

std::vector<Matrix> LayerStack::snapshot() {
  std::vector<Matrix> v;
  for (const auto& p : params()) v.push_back(*p.value);
  return v;
}

void LayerStack::restore(const std::vector<Matrix>& values) {
  auto slots = params();
  require_dims(slots.size() == values.size(), "stack: snapshot does not match parameters");
  for (std::size_t i = 0; i < slots.size(); ++i) {
    require_dims(slots[i].value->rows() == values[i].rows() && slots[i].value->cols() == values[i].cols(),
                 "stack: snapshot shape mismatch");
    *slots[i].value = values[i];
  }
}

std::size_t param_count(LayerStack& stack) {
  std::size_t n = 0;
  for (const auto& p : stack.params()) n += p.value->size();
  return n;
}

std::size_t frozen_bytes(const LayerStack& stack) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < stack.size(); ++i) n += stack.layer(i).frozen_bytes();
  return n;
}

// ---------------------------------------------------------------------------
// Loss and optimizer
// ---------------------------------------------------------------------------

Matrix softmax(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    auto row = logits.row(i);
    const double mx = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) z += (p(i, j) = std::exp(row[j] - mx));
    for (std::size_t j = 0; j < row.size(); ++j) p(i, j) /= z;
  }
  return p;
}

LossResult loss_softmax_xent(const Matrix& logits, std::span<const int> labels) {
  const std::size_t b = logits.rows(), c = logits.cols();
  require_dims(labels.size() == b, "loss: label count != batch size");
  for (int y : labels)
    if (y < 0 || static_cast<std::size_t>(y) >= c)
      throw LabelError("loss: label " + std::to_string(y) + " outside [0, " + std::to_string(c) + ")");
  LossResult r{0.0, Matrix(b, c)};
  if (b == 0) return r;
  const double inv_b = 1.0 / static_cast<double>(b);
  for (std::size_t i = 0; i < b; ++i) {
    auto row = logits.row(i);
    const double mx = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double v : row) z += std::exp(v - mx);
    const double log_z = mx + std::log(z);
    const auto y = static_cast<std::size_t>(labels[i]);
    r.loss += log_z - row[y];
    for (std::size_t j = 0; j < c; ++j) r.dlogits(i, j) = std::exp(row[j] - log_z) * inv_b;
    r.dlogits(i, y) -= inv_b;
  }
  r.loss *= inv_b;
  return r;
}

std::vector<int> argmax_rows(const Matrix& logits) {
  std::vector<int> out(logits.rows());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    auto row = logits.row(i);
    out[i] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

double accuracy(const Matrix& logits, std::span<const int> labels) {
  require_dims(labels.size() == logits.rows(), "accuracy: label count != row count");
  if (labels.empty()) return 0.0;
  const auto pred = argmax_rows(logits);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hit += pred[i] == labels[i];
  return static_cast<double>(hit) / static_cast<double>(labels.size());
}

void adam_step(AdamState& state, std::span<Matrix* const> params, std::span<const Matrix> grads) {
  require_dims(params.size() == grads.size(), "adam: parameter/gradient count mismatch");
  if (state.first.empty() && state.step == 0) {
    for (const Matrix* p : params) {
      state.first.emplace_back(p->rows(), p->cols());
      state.second.emplace_back(p->rows(), p->cols());
    }
  }
  require_dims(state.first.size() == params.size(), "adam: parameter count changed between steps");
  for (std::size_t k = 0; k < params.size(); ++k) {
    const Matrix& g = grads[k];
    require_dims(params[k]->rows() == g.rows() && params[k]->cols() == g.cols() &&
                     state.first[k].rows() == g.rows() && state.first[k].cols() == g.cols(),
                 "adam: shape mismatch for parameter " + std::to_string(k));
  }
  ++state.step;
  const auto& cfg = state.config;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto theta = params[k]->data();
    auto g = grads[k].data();
    auto m = state.first[k].data();
    auto v = state.second[k].data();
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      theta[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

void adam_step(AdamState& state, std::span<const ParamSlot> slots) {
  std::vector<Matrix*> params;
  std::vector<Matrix> grads;
  params.reserve(slots.size());
  grads.reserve(slots.size());
  for (const auto& s : slots) {
    params.push_back(s.value);
    grads.push_back(*s.grad);
  }
  adam_step(state, params, grads);
}

}  // namespace nys
