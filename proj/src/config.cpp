#include "nys/config.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace nys {

ConfigError::ConfigError(std::size_t line, std::string key, const std::string& msg)
    : Error(line > 0 ? "config line " + std::to_string(line) + ": key '" + key + "': " + msg
                     : "config: key '" + key + "': " + msg),
      line_(line),
      key_(std::move(key)) {}

std::string to_string(ArchType t) {
  switch (t) {
    case ArchType::dense: return "dense";
    case ArchType::deepfried: return "deepfried";
    case ArchType::nystrom: return "nystrom";
    case ArchType::multikernel: return "multikernel";
    case ArchType::multinystrom: return "multinystrom";
  }
  return "nystrom";
}

KernelChoice parse_kernel_choice(std::string_view text) {
  if (text == "rbf") return {KernelSpec::rbf(1.0), true};
  if (text == "chi2exp") return {KernelSpec::chi2_exp(1.0), true};
  return {parse_kernel(text), false};
}

std::string to_string(const KernelChoice& k) {
  if (k.auto_gamma) return k.spec.kind == KernelKind::chi2_exp ? "chi2exp" : "rbf";
  return to_string(k.spec);
}

std::string Seeds::text() const {
  return std::to_string(data) + "/" + std::to_string(init) + "/" + std::to_string(landmarks);
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

struct Entry {
  std::string value;
  std::size_t line;
};

class Reader {
 public:
  explicit Reader(std::map<std::string, Entry> entries) : entries_(std::move(entries)) {}

  bool has(const std::string& key) const { return entries_.count(key) > 0; }

  const Entry* get(const std::string& key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return nullptr;
    used_.insert(key);
    return &it->second;
  }

  const Entry& require(const std::string& key, const std::string& why) {
    const Entry* e = get(key);
    if (!e) throw ConfigError(0, key, "missing required key (" + why + ")");
    return *e;
  }

  void str(const std::string& key, std::string& out) {
    if (const Entry* e = get(key)) {
      if (e->value.empty()) throw ConfigError(e->line, key, "empty value");
      out = e->value;
    }
  }

  template <typename T>
  void uint(const std::string& key, T& out) {
    if (const Entry* e = get(key)) {
      std::uint64_t v = 0;
      auto res = std::from_chars(e->value.data(), e->value.data() + e->value.size(), v);
      if (res.ec != std::errc() || res.ptr != e->value.data() + e->value.size())
        throw ConfigError(e->line, key, "expected a non-negative integer, got '" + e->value + "'");
      out = static_cast<T>(v);
    }
  }

  void real(const std::string& key, double& out) {
    if (const Entry* e = get(key)) out = parse_real(*e, key);
  }

  static double parse_real(const Entry& e, const std::string& key) {
    double v = 0.0;
    auto res = std::from_chars(e.value.data(), e.value.data() + e.value.size(), v);
    if (res.ec != std::errc() || res.ptr != e.value.data() + e.value.size())
      throw ConfigError(e.line, key, "expected a number, got '" + e.value + "'");
    return v;
  }

  void boolean(const std::string& key, bool& out) {
    if (const Entry* e = get(key)) {
      if (e->value == "true")
        out = true;
      else if (e->value == "false")
        out = false;
      else
        throw ConfigError(e->line, key, "expected true or false, got '" + e->value + "'");
    }
  }

  void reject_unused(const std::string& context) const {
    for (const auto& [k, e] : entries_)
      if (!used_.count(k)) throw ConfigError(e.line, k, "unknown key or not applicable to " + context);
  }

 private:
  std::map<std::string, Entry> entries_;
  std::set<std::string> used_;
};

KernelChoice kernel_at(const Entry& e, const std::string& key, std::string_view text) {
  try {
    return parse_kernel_choice(text);
  } catch (const KernelParseError& err) {
    throw ConfigError(e.line, key, err.what());
  }
}

}  // namespace

RunConfig parse_config(std::string_view text) {
  std::map<std::string, Entry> entries;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError(line_no, std::string(line), "expected key=value");
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) throw ConfigError(line_no, key, "empty key");
    if (entries.count(key)) throw ConfigError(line_no, key, "duplicate key");
    entries[key] = {value, line_no};
  }

  Reader r(std::move(entries));
  RunConfig cfg;
  r.str("run.id", cfg.run_id);
  r.str("output.dir", cfg.output_dir);

  r.str("dataset.kind", cfg.dataset.kind);
  if (cfg.dataset.kind == "blobs") {
    r.uint("dataset.n", cfg.dataset.n);
    r.uint("dataset.d", cfg.dataset.d);
    r.uint("dataset.classes", cfg.dataset.classes);
    r.real("dataset.sep", cfg.dataset.sep);
    if (cfg.dataset.classes < 2) throw ConfigError(0, "dataset.classes", "need at least two classes");
    if (cfg.dataset.n < cfg.dataset.classes) throw ConfigError(0, "dataset.n", "fewer rows than classes");
  } else if (cfg.dataset.kind == "csv") {
    cfg.dataset.path = r.require("dataset.path", "csv datasets").value;
  } else if (cfg.dataset.kind == "idx") {
    cfg.dataset.path = r.require("dataset.path", "idx images").value;
    cfg.dataset.labels = r.require("dataset.labels", "idx labels").value;
  } else {
    throw ConfigError(0, "dataset.kind", "expected blobs, csv or idx");
  }
  r.uint("dataset.per_class", cfg.dataset.per_class);

  r.uint("extractor.d_out", cfg.extractor.d_out);
  r.uint("extractor.seed", cfg.extractor.seed);
  r.real("extractor.shift", cfg.extractor.shift);

  const Entry& type = r.require("architecture.type", "selects the architecture");
  auto& a = cfg.arch;
  if (type.value == "dense")
    a.type = ArchType::dense;
  else if (type.value == "deepfried")
    a.type = ArchType::deepfried;
  else if (type.value == "nystrom")
    a.type = ArchType::nystrom;
  else if (type.value == "multikernel")
    a.type = ArchType::multikernel;
  else if (type.value == "multinystrom")
    a.type = ArchType::multinystrom;
  else
    throw ConfigError(type.line, "architecture.type",
                      "expected dense, deepfried, nystrom, multikernel or multinystrom");

  const bool nys_family = a.type == ArchType::nystrom || a.type == ArchType::multikernel ||
                          a.type == ArchType::multinystrom;
  if (a.type == ArchType::dense) {
    r.uint("architecture.hidden", a.hidden);
    if (a.hidden == 0) throw ConfigError(0, "architecture.hidden", "must be positive");
  }
  if (a.type == ArchType::deepfried) {
    r.uint("architecture.stacks", a.stacks);
    r.boolean("architecture.adaptive", a.adaptive);
    if (const Entry* e = r.get("architecture.sigma"))
      a.sigma = e->value == "auto" ? 0.0 : Reader::parse_real(*e, "architecture.sigma");
    if (a.stacks == 0) throw ConfigError(0, "architecture.stacks", "must be positive");
    if (a.sigma < 0.0) throw ConfigError(0, "architecture.sigma", "must be positive or auto");
  }
  if (nys_family) {
    if (a.type == ArchType::multikernel) {
      const Entry& e = r.require("architecture.kernels", "multikernel needs a kernel list");
      a.kernels.clear();
      std::string_view rest = e.value;
      while (true) {
        const auto comma = rest.find(',');
        const auto item = trim(rest.substr(0, comma));
        a.kernels.push_back(kernel_at(e, "architecture.kernels", item));
        if (comma == std::string_view::npos) break;
        rest.remove_prefix(comma + 1);
      }
    } else {
      const Entry& e = r.require("architecture.kernel", to_string(a.type) + " needs a kernel");
      a.kernel = kernel_at(e, "architecture.kernel", e.value);
    }
    r.uint("architecture.m", a.m);
    r.boolean("architecture.adaptive", a.adaptive);
    r.str("architecture.init", a.init);
    r.str("architecture.landmarks", a.landmarks);
    if (a.type == ArchType::nystrom) r.uint("architecture.out", a.out);
    if (a.type == ArchType::multinystrom) {
      r.uint("architecture.groups", a.groups);
      if (a.groups == 0) throw ConfigError(0, "architecture.groups", "must be positive");
    }
    if (a.m == 0) throw ConfigError(0, "architecture.m", "must be positive");
    if (a.init != "exact" && a.init != "random")
      throw ConfigError(0, "architecture.init", "expected exact or random");
    if (a.landmarks != "stratified" && a.landmarks != "uniform")
      throw ConfigError(0, "architecture.landmarks", "expected stratified or uniform");
    if (a.init == "exact" && a.out != 0 && a.out != a.m)
      throw ConfigError(0, "architecture.out", "exact initialization needs out = m");
    if (a.init == "random" && !a.adaptive)
      throw ConfigError(0, "architecture.init", "random initialization needs adaptive = true");
  }

  r.real("optimizer.lr", cfg.optimizer.lr);
  r.uint("optimizer.batch", cfg.optimizer.batch);
  r.uint("optimizer.epochs", cfg.optimizer.epochs);
  r.uint("optimizer.patience", cfg.optimizer.patience);
  if (!(cfg.optimizer.lr > 0.0)) throw ConfigError(0, "optimizer.lr", "must be positive");
  if (cfg.optimizer.batch == 0) throw ConfigError(0, "optimizer.batch", "must be positive");

  r.uint("seeds.data", cfg.seeds.data);
  r.uint("seeds.init", cfg.seeds.init);
  r.uint("seeds.landmarks", cfg.seeds.landmarks);
  for (const char* k : {"seeds.data", "seeds.init", "seeds.landmarks"})
    if (!r.has(k)) throw ConfigError(0, k, "missing required key (every run records its seed triple)");

  r.reject_unused("dataset.kind=" + cfg.dataset.kind + ", architecture.type=" + to_string(a.type));
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(0, "--config", "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string render_config(const RunConfig& cfg) {
  std::ostringstream o;
  auto kv = [&](const char* k, const std::string& v) { o << k << '=' << v << '\n'; };
  auto num = [](double v) { return format_double(v); };
  auto b = [](bool v) { return std::string(v ? "true" : "false"); };

  kv("run.id", cfg.run_id);
  kv("dataset.kind", cfg.dataset.kind);
  if (cfg.dataset.kind == "blobs") {
    kv("dataset.n", std::to_string(cfg.dataset.n));
    kv("dataset.d", std::to_string(cfg.dataset.d));
    kv("dataset.classes", std::to_string(cfg.dataset.classes));
    kv("dataset.sep", num(cfg.dataset.sep));
  } else {
    kv("dataset.path", cfg.dataset.path);
    if (cfg.dataset.kind == "idx") kv("dataset.labels", cfg.dataset.labels);
  }
  kv("dataset.per_class", std::to_string(cfg.dataset.per_class));
  kv("extractor.d_out", std::to_string(cfg.extractor.d_out));
  kv("extractor.seed", std::to_string(cfg.extractor.seed));
  kv("extractor.shift", num(cfg.extractor.shift));

  const auto& a = cfg.arch;
  kv("architecture.type", to_string(a.type));
  switch (a.type) {
    case ArchType::dense:
      kv("architecture.hidden", std::to_string(a.hidden));
      break;
    case ArchType::deepfried:
      kv("architecture.stacks", std::to_string(a.stacks));
      kv("architecture.adaptive", b(a.adaptive));
      kv("architecture.sigma", a.sigma == 0.0 ? "auto" : num(a.sigma));
      break;
    case ArchType::nystrom:
    case ArchType::multikernel:
    case ArchType::multinystrom: {
      if (a.type == ArchType::multikernel) {
        std::string list;
        for (std::size_t i = 0; i < a.kernels.size(); ++i) list += (i ? "," : "") + to_string(a.kernels[i]);
        kv("architecture.kernels", list);
      } else {
        kv("architecture.kernel", to_string(a.kernel));
      }
      kv("architecture.m", std::to_string(a.m));
      kv("architecture.adaptive", b(a.adaptive));
      kv("architecture.init", a.init);
      kv("architecture.landmarks", a.landmarks);
      if (a.type == ArchType::nystrom) kv("architecture.out", std::to_string(a.out));
      if (a.type == ArchType::multinystrom) kv("architecture.groups", std::to_string(a.groups));
      break;
    }
  }
  kv("optimizer.lr", num(cfg.optimizer.lr));
  kv("optimizer.batch", std::to_string(cfg.optimizer.batch));
  kv("optimizer.epochs", std::to_string(cfg.optimizer.epochs));
  kv("optimizer.patience", std::to_string(cfg.optimizer.patience));
  kv("seeds.data", std::to_string(cfg.seeds.data));
  kv("seeds.init", std::to_string(cfg.seeds.init));
  kv("seeds.landmarks", std::to_string(cfg.seeds.landmarks));
  kv("output.dir", cfg.output_dir);
  return o.str();
}

}  // namespace nys
