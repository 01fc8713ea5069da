#include "nys/experiment.hpp"

#include <algorithm>

#include "nys/feature_maps.hpp"

namespace nys {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

// Stream ids for derive_seed.
constexpr std::uint64_t kSubsampleStream = 1;
constexpr std::uint64_t kOrderStream = 2;
constexpr std::uint64_t kHeuristicStream = 1;
constexpr std::uint64_t kFastfoodStream = 100;

Dataset load_raw(const DatasetConfig& dc, std::uint64_t seed) {
  if (dc.kind == "blobs") return make_blobs(dc.n, dc.d, dc.classes, dc.sep, seed);
  if (dc.kind == "csv") return load_csv(dc.path, seed);
  if (dc.kind == "idx") return load_idx(dc.path, dc.labels, seed);
  throw ConfigError(0, "dataset.kind", "unknown dataset kind '" + dc.kind + "'");
}

}  // namespace

PreparedData prepare_data(const RunConfig& cfg) {
  Dataset ds = load_raw(cfg.dataset, cfg.seeds.data);
  if (cfg.extractor.d_out > 0) {
    const FrozenExtractor fx(ds.dim(), cfg.extractor.d_out, cfg.extractor.seed, cfg.extractor.shift);
    ds = extract(fx, ds);
  }
  if (cfg.dataset.per_class > 0)
    ds = subsample_per_class(ds, cfg.dataset.per_class, derive_seed(cfg.seeds.data, kSubsampleStream));
  PreparedData out;
  out.train = take(ds, Split::train);
  out.val = take(ds, Split::val);
  out.test = take(ds, Split::test);
  out.pool = landmark_pool(ds);
  out.ds = std::move(ds);
  return out;
}

KernelSpec resolve_kernel(const KernelChoice& k, const Matrix& features, std::uint64_t seed) {
  if (!k.auto_gamma) return k.spec;
  const std::size_t pairs = default_heuristic_pairs(features.rows());
  if (k.spec.kind == KernelKind::rbf) return KernelSpec::rbf(bandwidth_heuristic(features, pairs, seed));
  if (k.spec.kind == KernelKind::chi2_exp)
    return KernelSpec::chi2_exp(chi2_bandwidth_heuristic(features, pairs, seed, k.spec.epsilon));
  return k.spec;
}

std::vector<std::pair<std::size_t, std::size_t>> column_groups(std::size_t d, std::size_t groups) {
  if (groups == 0 || groups > d)
    throw ConfigError(0, "architecture.groups",
                      "need 1 <= groups <= feature width (" + std::to_string(d) + ")");
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t begin = 0;
  for (std::size_t g = 0; g < groups; ++g) {
    const std::size_t width = d / groups + (g < d % groups ? 1 : 0);
    out.emplace_back(begin, begin + width);
    begin += width;
  }
  return out;
}

namespace {

// Landmark rows for the config's sampling mode. Stratified sampling draws
// from labeled training rows, uniform sampling from the whole pool.
LandmarkSet sample_for(const ArchitectureConfig& a, const PreparedData& data, const KernelSpec& kernel,
                       std::uint64_t seed, std::vector<std::string>& notes) {
  if (a.landmarks == "uniform") {
    if (a.m > data.pool.x.rows())
      throw InsufficientDataError("m=" + std::to_string(a.m) + " exceeds the landmark pool (" +
                                  std::to_string(data.pool.x.rows()) + " rows)");
    return sample_landmarks_uniform(data.pool.x, kernel, a.m, seed);
  }
  if (a.m > data.train.x.rows())
    throw InsufficientDataError("m=" + std::to_string(a.m) + " exceeds the labeled training set (" +
                                std::to_string(data.train.x.rows()) + " rows)");
  return sample_landmarks_stratified(data.train.x, data.train.y, kernel, a.m, seed, &notes);
}

const Matrix& landmark_source(const ArchitectureConfig& a, const PreparedData& data) {
  return a.landmarks == "uniform" ? data.pool.x : data.train.x;
}

}  // namespace

BuiltModel build_model(const RunConfig& cfg, const PreparedData& data) {
  const ArchitectureConfig& a = cfg.arch;
  const std::size_t d = data.ds.dim();
  const std::size_t c = data.ds.num_classes;
  const std::uint64_t heuristic_seed = derive_seed(cfg.seeds.landmarks, kHeuristicStream);
  const NystromInit init = a.init == "random" ? NystromInit::random : NystromInit::exact;
  BuiltModel out;
  LayerStack& stack = out.stack;

  switch (a.type) {
    case ArchType::dense: {
      stack.emplace<DenseLayer>(d, a.hidden, Activation::relu, derive_seed(cfg.seeds.init, 0));
      break;
    }
    case ArchType::deepfried: {
      double sigma = a.sigma;
      if (sigma == 0.0) {
        const double gamma = bandwidth_heuristic(data.pool.x, default_heuristic_pairs(data.pool.x.rows()),
                                                 heuristic_seed);
        sigma = fastfood_sigma_for_gamma(gamma);
      }
      out.sigma = sigma;
      std::vector<FastfoodBlock> blocks;
      for (std::size_t b = 0; b < a.stacks; ++b)
        blocks.push_back(make_fastfood(d, sigma, derive_seed(cfg.seeds.init, kFastfoodStream + b)));
      stack.emplace<FastfoodLayer>(std::move(blocks), a.adaptive, d);
      break;
    }
    case ArchType::nystrom: {
      const KernelSpec k = resolve_kernel(a.kernel, data.pool.x, heuristic_seed);
      out.kernels.push_back(k);
      LandmarkSet ls = sample_for(a, data, k, cfg.seeds.landmarks, out.notes);
      stack.emplace<NystromLayer>(std::move(ls), a.adaptive, init, a.out, derive_seed(cfg.seeds.init, 2));
      break;
    }
    case ArchType::multikernel: {
      if (a.kernels.empty()) throw ConfigError(0, "architecture.kernels", "needs at least one kernel");
      for (const KernelChoice& kc : a.kernels) out.kernels.push_back(resolve_kernel(kc, data.pool.x, heuristic_seed));
      // One landmark draw shared by every kernel; each kernel gets its own K11.
      const LandmarkSet first = sample_for(a, data, out.kernels[0], cfg.seeds.landmarks, out.notes);
      std::vector<NystromLayer> subs;
      for (std::size_t i = 0; i < out.kernels.size(); ++i) {
        LandmarkSet ls = i == 0 ? first
                                : make_landmarks(first.points, out.kernels[i], first.source_indices,
                                                 cfg.seeds.landmarks);
        subs.emplace_back(std::move(ls), a.adaptive, init, a.out, derive_seed(cfg.seeds.init, 10 + i));
      }
      stack.emplace<MultiKernelLayer>(std::move(subs));
      break;
    }
    case ArchType::multinystrom: {
      const auto slices = column_groups(d, a.groups);
      const LandmarkSet rows = sample_for(a, data, KernelSpec::linear(), cfg.seeds.landmarks, out.notes);
      const Matrix& source = landmark_source(a, data);
      std::vector<NystromLayer> subs;
      for (std::size_t g = 0; g < slices.size(); ++g) {
        const auto [begin, end] = slices[g];
        const KernelSpec k = resolve_kernel(a.kernel, slice_cols(source, begin, end), heuristic_seed);
        out.kernels.push_back(k);
        LandmarkSet ls = make_landmarks(slice_cols(rows.points, begin, end), k, rows.source_indices,
                                        cfg.seeds.landmarks);
        subs.emplace_back(std::move(ls), a.adaptive, init, a.out, derive_seed(cfg.seeds.init, 10 + g));
      }
      stack.emplace<MultiKernelLayer>(std::move(subs), slices);
      break;
    }
  }
  stack.emplace<DenseLayer>(stack.layer(stack.size() - 1).output_dim(), c, Activation::none,
                            derive_seed(cfg.seeds.init, 1));
  return out;
}

RunRecord run_once(const RunConfig& cfg, LayerStack* trained) {
  RunRecord rec;
  rec.run_id = cfg.run_id;
  rec.seeds = cfg.seeds;
  const PreparedData data = prepare_data(cfg);
  BuiltModel model = build_model(cfg, data);
  rec.trainable_params = param_count(model.stack);
  rec.landmark_mem = frozen_bytes(model.stack);
  rec.labeled_rows = data.train.x.rows();
  rec.notes = model.notes;
  for (std::size_t i = 0; i < model.kernels.size(); ++i)
    rec.kernel_text += (i ? "+" : "") + to_string(model.kernels[i]);
  if (cfg.arch.type == ArchType::deepfried) rec.kernel_text = "fastfood:sigma=" + format_double(model.sigma);

  TrainOptions opt;
  opt.adam.lr = cfg.optimizer.lr;
  opt.batch = cfg.optimizer.batch;
  opt.epochs = cfg.optimizer.epochs;
  opt.patience = cfg.optimizer.patience;
  opt.order_seed = derive_seed(cfg.seeds.data, kOrderStream);
  try {
    rec.result = train(model.stack, data.train, data.val, data.test, opt);
  } catch (const DivergenceError& e) {
    rec.failed = true;
    rec.error = e.what();
    rec.result.trace = e.trace();
  }
  if (trained) *trained = std::move(model.stack);
  return rec;
}

}  // namespace nys
