#include "nys/commands.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <random>

#include "nys/feature_maps.hpp"
#include "nys/linalg.hpp"
#include "nys/ops.hpp"

namespace nys {

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const KernelParseError*>(&e) ||
      dynamic_cast<const KernelDomainError*>(&e) || dynamic_cast<const InsufficientDataError*>(&e) ||
      dynamic_cast<const FormatError*>(&e) || dynamic_cast<const FileError*>(&e) ||
      dynamic_cast<const LabelError*>(&e))
    return kExitConfig;
  return kExitNumerical;
}

RunConfig with_base_seed(RunConfig cfg, std::optional<std::uint64_t> seed) {
  if (seed) cfg.seeds = {*seed, *seed, *seed};
  return cfg;
}

Summary summarize(std::vector<double> values) {
  Summary s;
  s.count = values.size();
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  std::sort(values.begin(), values.end());
  const std::size_t h = values.size() / 2;
  s.median = values.size() % 2 ? values[h] : 0.5 * (values[h - 1] + values[h]);
  return s;
}

namespace {

// Runs job(i) for i in [0, n). Each job owns its own stack and RNG streams,
// so jobs may run concurrently; results land in caller-owned slots.
template <typename Job>
void run_jobs(std::size_t n, Job job) {
  std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic) if (max_threads() > 1)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    try {
      job(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::string status(const RunRecord& r) { return r.failed ? "diverged" : "ok"; }

std::string num(double v) { return format_double(v); }

void write_file(const std::filesystem::path& path, const std::string& what,
                const std::function<void(std::ostream&)>& body) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FileError("cannot write " + what + " " + path.string());
  body(os);
  if (!os) throw FileError("failed writing " + path.string());
}

RunConfig repeat_config(const RunConfig& base, std::size_t r) {
  RunConfig cfg = base;
  cfg.seeds = base.seeds.offset(r);
  return cfg;
}

}  // namespace

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

bool TrainOutput::any_failed() const {
  return std::any_of(runs.begin(), runs.end(), [](const RunRecord& r) { return r.failed; });
}

void write_metrics_csv(std::ostream& os, const std::vector<RunRecord>& runs) {
  os << "run_id,seed,epoch,train_loss,val_acc,test_acc,trainable_params,landmark_mem\n";
  for (const RunRecord& r : runs)
    for (const EpochMetrics& m : r.result.trace)
      os << r.run_id << ',' << r.seeds.text() << ',' << m.epoch << ',' << num(m.train_loss) << ','
         << num(m.val_acc) << ',' << num(m.test_acc) << ',' << r.trainable_params << ',' << r.landmark_mem
         << '\n';
}

void write_runs_csv(std::ostream& os, const std::vector<RunRecord>& runs) {
  os << "run_id,seed,kernel,status,best_epoch,best_val_acc,test_acc,trainable_params,landmark_mem,error\n";
  for (const RunRecord& r : runs)
    os << r.run_id << ',' << r.seeds.text() << ',' << r.kernel_text << ',' << status(r) << ','
       << r.result.best_epoch << ',' << num(r.result.best_val_acc) << ',' << num(r.result.test_acc) << ','
       << r.trainable_params << ',' << r.landmark_mem << ',' << '"' << r.error << '"' << '\n';
}

TrainOutput cmd_train(const RunConfig& cfg, std::size_t repeats, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  TrainOutput out;
  out.runs.resize(repeats);
  std::vector<LayerStack> stacks(repeats);
  run_jobs(repeats, [&](std::size_t r) { out.runs[r] = run_once(repeat_config(cfg, r), &stacks[r]); });
  write_file(out_dir / (cfg.run_id + "_metrics.csv"), "metrics", [&](std::ostream& os) {
    write_metrics_csv(os, out.runs);
  });
  write_file(out_dir / (cfg.run_id + "_runs.csv"), "run summary", [&](std::ostream& os) {
    write_runs_csv(os, out.runs);
  });
  for (std::size_t r = 0; r < repeats; ++r)
    if (!out.runs[r].failed)
      save_checkpoint(out_dir / (cfg.run_id + "_r" + std::to_string(r) + ".ckpt"), stacks[r]);
  return out;
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

SweepAxis parse_sweep_axis(const std::string& text) {
  if (text == "m") return SweepAxis::m;
  if (text == "hidden") return SweepAxis::hidden;
  if (text == "stacks") return SweepAxis::stacks;
  throw ConfigError(0, "--axis", "expected m, hidden or stacks, got '" + text + "'");
}

std::string to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::m:
      return "m";
    case SweepAxis::hidden:
      return "hidden";
    case SweepAxis::stacks:
      return "stacks";
  }
  return "m";
}

std::vector<double> default_sweep_values(SweepAxis a) {
  switch (a) {
    case SweepAxis::m:
      return {2, 4, 8, 16, 32, 64, 128};
    case SweepAxis::hidden:
      return {16, 64, 256, 1024};
    case SweepAxis::stacks:
      return {1, 3, 5, 7};
  }
  return {};
}

RunConfig apply_axis(const RunConfig& base, SweepAxis axis, double value) {
  if (!(value >= 1.0) || value != std::floor(value))
    throw ConfigError(0, "--values", "axis values must be positive integers, got " + num(value));
  const auto v = static_cast<std::size_t>(value);
  RunConfig cfg = base;
  const ArchType t = base.arch.type;
  switch (axis) {
    case SweepAxis::m:
      if (t != ArchType::nystrom && t != ArchType::multikernel && t != ArchType::multinystrom)
        throw ConfigError(0, "--axis", "axis m needs a Nyström architecture, not " + to_string(t));
      cfg.arch.m = v;
      break;
    case SweepAxis::hidden:
      if (t != ArchType::dense) throw ConfigError(0, "--axis", "axis hidden needs architecture.type=dense");
      cfg.arch.hidden = v;
      break;
    case SweepAxis::stacks:
      if (t != ArchType::deepfried) throw ConfigError(0, "--axis", "axis stacks needs architecture.type=deepfried");
      cfg.arch.stacks = v;
      break;
  }
  return cfg;
}

std::vector<SweepRow> run_sweep(const RunConfig& base, SweepAxis axis, const std::vector<double>& values,
                                std::size_t repeats) {
  std::vector<RunConfig> configs;
  for (double v : values) configs.push_back(apply_axis(base, axis, v));  // validate before any work
  std::vector<SweepRow> rows(values.size() * repeats);
  for (std::size_t i = 0; i < values.size(); ++i)
    for (std::size_t r = 0; r < repeats; ++r) rows[i * repeats + r] = {values[i], r, {}};
  run_jobs(rows.size(), [&](std::size_t k) {
    rows[k].run = run_once(repeat_config(configs[k / repeats], rows[k].repeat));
  });
  return rows;
}

void write_sweep_csv(std::ostream& os, SweepAxis axis, const std::vector<SweepRow>& rows) {
  os << "axis,value,repeat,run_id,seed,kernel,status,trainable_params,landmark_mem,best_epoch,val_acc,test_acc\n";
  for (const SweepRow& row : rows) {
    const RunRecord& r = row.run;
    os << to_string(axis) << ',' << num(row.value) << ',' << row.repeat << ',' << r.run_id << ','
       << r.seeds.text() << ',' << r.kernel_text << ',' << status(r) << ',' << r.trainable_params << ','
       << r.landmark_mem << ',' << r.result.best_epoch << ',' << num(r.result.best_val_acc) << ','
       << num(r.result.test_acc) << '\n';
  }
}

void write_sweep_summary(std::ostream& os, SweepAxis axis, const std::vector<SweepRow>& rows) {
  os << "axis,value,runs,failed,trainable_params,test_acc_mean,test_acc_std,test_acc_median\n";
  std::size_t i = 0;
  while (i < rows.size()) {
    std::size_t j = i;
    std::vector<double> acc;
    std::size_t failed = 0;
    for (; j < rows.size() && rows[j].value == rows[i].value; ++j) {
      if (rows[j].run.failed)
        ++failed;
      else
        acc.push_back(rows[j].run.result.test_acc);
    }
    const Summary s = summarize(acc);
    os << to_string(axis) << ',' << num(rows[i].value) << ',' << (j - i) << ',' << failed << ','
       << rows[i].run.trainable_params << ',' << num(s.mean) << ',' << num(s.std) << ',' << num(s.median) << '\n';
    i = j;
  }
}

// ---------------------------------------------------------------------------
// smallset
// ---------------------------------------------------------------------------

std::vector<std::string> smallset_architectures() {
  return {"dense-1024", "deepfried-adaptive", "nystrom-linear", "nystrom-rbf", "nystrom-chi2exp"};
}

RunConfig smallset_variant(const RunConfig& base, const std::string& arch, std::size_t per_class) {
  RunConfig cfg = base;
  cfg.run_id = base.run_id + "-" + arch;
  cfg.dataset.per_class = per_class;
  const bool base_is_nystrom = base.arch.type == ArchType::nystrom;
  ArchitectureConfig a;
  if (arch == "dense-1024") {
    a.type = ArchType::dense;
    a.hidden = 1024;
  } else if (arch == "deepfried-adaptive") {
    a.type = ArchType::deepfried;
    a.adaptive = true;
    a.stacks = base.arch.type == ArchType::deepfried ? base.arch.stacks : 1;
  } else if (arch.rfind("nystrom-", 0) == 0) {
    a.type = ArchType::nystrom;
    a.kernel = parse_kernel_choice(arch.substr(8));
    a.m = base_is_nystrom ? base.arch.m : 16;
    a.adaptive = true;
    // Labels are scarce; landmarks come from the unlabeled pool.
    a.landmarks = "uniform";
  } else {
    throw ConfigError(0, "architecture", "unknown smallset architecture '" + arch + "'");
  }
  cfg.arch = a;
  return cfg;
}

std::vector<SmallsetRow> run_smallset(const RunConfig& base, const std::vector<std::size_t>& per_class,
                                      std::size_t repeats) {
  const auto archs = smallset_architectures();
  std::vector<SmallsetRow> rows;
  std::vector<RunConfig> configs;
  for (const std::string& a : archs)
    for (std::size_t k : per_class) {
      if (k == 0) throw ConfigError(0, "--per-class", "must be positive");
      const RunConfig cfg = smallset_variant(base, a, k);
      for (std::size_t r = 0; r < repeats; ++r) {
        rows.push_back({a, k, r, {}});
        configs.push_back(repeat_config(cfg, r));
      }
    }
  run_jobs(rows.size(), [&](std::size_t i) { rows[i].run = run_once(configs[i]); });
  return rows;
}

void write_smallset_csv(std::ostream& os, const std::vector<SmallsetRow>& rows) {
  os << "architecture,per_class,repeat,run_id,seed,kernel,status,labeled_rows,trainable_params,best_epoch,test_acc\n";
  for (const SmallsetRow& row : rows) {
    const RunRecord& r = row.run;
    os << row.arch << ',' << row.per_class << ',' << row.repeat << ',' << r.run_id << ',' << r.seeds.text() << ','
       << r.kernel_text << ',' << status(r) << ',' << r.labeled_rows << ',' << r.trainable_params << ','
       << r.result.best_epoch << ',' << num(r.result.test_acc) << '\n';
  }
}

void write_smallset_summary(std::ostream& os, const std::vector<SmallsetRow>& rows) {
  os << "architecture,per_class,runs,failed,test_acc_mean,test_acc_std\n";
  std::size_t i = 0;
  while (i < rows.size()) {
    std::size_t j = i;
    std::vector<double> acc;
    std::size_t failed = 0;
    for (; j < rows.size() && rows[j].arch == rows[i].arch && rows[j].per_class == rows[i].per_class; ++j) {
      if (rows[j].run.failed)
        ++failed;
      else
        acc.push_back(rows[j].run.result.test_acc);
    }
    const Summary s = summarize(acc);
    os << rows[i].arch << ',' << rows[i].per_class << ',' << (j - i) << ',' << failed << ',' << num(s.mean) << ','
       << num(s.std) << '\n';
    i = j;
  }
}

// ---------------------------------------------------------------------------
// mkl
// ---------------------------------------------------------------------------

std::vector<double> default_sigma_grid(const RunConfig& base) {
  const PreparedData data = prepare_data(base);
  const double gamma = bandwidth_heuristic(data.pool.x, default_heuristic_pairs(data.pool.x.rows()),
                                           derive_seed(base.seeds.landmarks, 1));
  std::vector<double> grid;
  for (double mult : kMklMultipliers) grid.push_back(mult / gamma);
  return grid;
}

namespace {

RunConfig mkl_config(const RunConfig& base, std::size_t m, const std::vector<double>& sigmas) {
  RunConfig cfg = base;
  const ArchitectureConfig& b = base.arch;
  const bool nystrom_like = b.type == ArchType::nystrom || b.type == ArchType::multikernel;
  ArchitectureConfig a;
  a.m = m;
  a.adaptive = nystrom_like ? b.adaptive : true;
  a.landmarks = nystrom_like ? b.landmarks : "stratified";
  a.init = nystrom_like ? b.init : "exact";
  if (sigmas.size() == 1) {
    a.type = ArchType::nystrom;
    a.kernel = {KernelSpec::rbf(1.0 / sigmas[0]), false};
  } else {
    a.type = ArchType::multikernel;
    for (double s : sigmas) a.kernels.push_back({KernelSpec::rbf(1.0 / s), false});
  }
  cfg.arch = a;
  return cfg;
}

}  // namespace

std::vector<MklRow> run_mkl(const RunConfig& base, const std::vector<double>& sigmas,
                            const std::vector<std::size_t>& ms, std::size_t repeats) {
  if (sigmas.size() < 2) throw ConfigError(0, "--sigmas", "the grid needs at least two values");
  for (double s : sigmas)
    if (!(s > 0.0) || !std::isfinite(s)) throw ConfigError(0, "--sigmas", "sigma values must be positive");
  std::vector<MklRow> rows;
  std::vector<RunConfig> configs;
  for (std::size_t m : ms) {
    if (m == 0) throw ConfigError(0, "--m", "must be positive");
    for (std::size_t k = 0; k <= sigmas.size(); ++k) {
      const bool fused = k == sigmas.size();
      const RunConfig cfg = fused ? mkl_config(base, m, sigmas) : mkl_config(base, m, {sigmas[k]});
      for (std::size_t r = 0; r < repeats; ++r) {
        rows.push_back({m, fused ? "fused" : "single", fused ? 0.0 : sigmas[k], fused ? m * sigmas.size() : m, r, {}});
        configs.push_back(repeat_config(cfg, r));
      }
    }
  }
  run_jobs(rows.size(), [&](std::size_t i) { rows[i].run = run_once(configs[i]); });
  return rows;
}

void write_mkl_csv(std::ostream& os, const std::vector<MklRow>& rows) {
  os << "m,model,sigma,width,repeat,run_id,seed,kernel,status,trainable_params,best_epoch,test_acc\n";
  for (const MklRow& row : rows) {
    const RunRecord& r = row.run;
    os << row.m << ',' << row.model << ',' << num(row.sigma) << ',' << row.width << ',' << row.repeat << ','
       << r.run_id << ',' << r.seeds.text() << ',' << r.kernel_text << ',' << status(r) << ','
       << r.trainable_params << ',' << r.result.best_epoch << ',' << num(r.result.test_acc) << '\n';
  }
}

void write_mkl_summary(std::ostream& os, const std::vector<MklRow>& rows) {
  os << "m,model,sigma,width,runs,failed,test_acc_mean,test_acc_std,test_acc_median\n";
  std::size_t i = 0;
  while (i < rows.size()) {
    std::size_t j = i;
    std::vector<double> acc;
    std::size_t failed = 0;
    for (; j < rows.size() && rows[j].m == rows[i].m && rows[j].model == rows[i].model &&
           rows[j].sigma == rows[i].sigma;
         ++j) {
      if (rows[j].run.failed)
        ++failed;
      else
        acc.push_back(rows[j].run.result.test_acc);
    }
    const Summary s = summarize(acc);
    os << rows[i].m << ',' << rows[i].model << ',' << num(rows[i].sigma) << ',' << rows[i].width << ',' << (j - i)
       << ',' << failed << ',' << num(s.mean) << ',' << num(s.std) << ',' << num(s.median) << '\n';
    i = j;
  }
}

// ---------------------------------------------------------------------------
// embed2d
// ---------------------------------------------------------------------------

Embedding2d run_embed2d(const RunConfig& cfg, std::size_t max_rows) {
  if (cfg.arch.type != ArchType::nystrom) throw ConfigError(0, "architecture.type", "embed2d needs nystrom");
  if (cfg.arch.m != 2) throw ConfigError(0, "architecture.m", "embed2d needs m=2");
  const PreparedData data = prepare_data(cfg);
  const BuiltModel model = build_model(cfg, data);
  const auto& layer = dynamic_cast<const NystromLayer&>(model.stack.layer(0));

  Embedding2d out;
  const std::size_t n = data.test.x.rows();
  out.test_rows.resize(n);
  std::iota(out.test_rows.begin(), out.test_rows.end(), 0);
  if (n > max_rows) {
    std::mt19937_64 rng(derive_seed(cfg.seeds.data, 3));
    std::shuffle(out.test_rows.begin(), out.test_rows.end(), rng);
    out.test_rows.resize(max_rows);
    std::sort(out.test_rows.begin(), out.test_rows.end());
  } else if (n < max_rows) {
    out.note = "test split has " + std::to_string(n) + " rows; using all of them";
  }
  out.coords = nystrom_features(layer.landmarks(), gather_rows(data.test.x, out.test_rows));
  for (std::size_t i : out.test_rows) out.labels.push_back(data.test.y[i]);
  return out;
}

void write_embed2d_csv(std::ostream& os, const Embedding2d& e) {
  os << "phi1,phi2,label\n";
  for (std::size_t i = 0; i < e.coords.rows(); ++i)
    os << num(e.coords(i, 0)) << ',' << num(e.coords(i, 1)) << ',' << e.labels[i] << '\n';
}

}  // namespace nys
