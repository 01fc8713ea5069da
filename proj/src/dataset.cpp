#include "nys/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "nys/kernels.hpp"
#include "nys/ops.hpp"

namespace nys {

std::vector<std::size_t> Dataset::indices(Split s) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < splits.size(); ++i)
    if (splits[i] == s) out.push_back(i);
  return out;
}

void Dataset::validate() const {
  require_dims(labels.size() == features.rows(), "dataset '" + name + "': label count != row count");
  require_dims(splits.size() == features.rows(), "dataset '" + name + "': split tags != row count");
  for (int y : labels)
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes)
      throw FormatError("dataset '" + name + "': label " + std::to_string(y) + " outside [0, " +
                        std::to_string(num_classes) + ")");
  if (!features.all_finite()) throw FormatError("dataset '" + name + "': non-finite feature value");
}

SplitView take(const Dataset& ds, Split s) {
  const auto idx = ds.indices(s);
  SplitView v{gather_rows(ds.features, idx), {}};
  v.y.reserve(idx.size());
  for (std::size_t i : idx) v.y.push_back(ds.labels[i]);
  return v;
}

SplitView landmark_pool(const Dataset& ds) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < ds.splits.size(); ++i)
    if (ds.splits[i] == Split::train || ds.splits[i] == Split::unlabeled) idx.push_back(i);
  SplitView v{gather_rows(ds.features, idx), {}};
  for (std::size_t i : idx) v.y.push_back(ds.labels[i]);
  return v;
}

void assign_stratified_splits(Dataset& ds, std::uint64_t seed) {
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < ds.labels.size(); ++i) by_class[ds.labels[i]].push_back(i);
  ds.splits.assign(ds.labels.size(), Split::train);
  std::mt19937_64 rng(seed ^ 0x5eed5117ULL);
  for (auto& [c, rows] : by_class) {
    std::shuffle(rows.begin(), rows.end(), rng);
    const auto k = static_cast<double>(rows.size());
    const auto n_val = static_cast<std::size_t>(std::llround(0.15 * k));
    const auto n_test = static_cast<std::size_t>(std::llround(0.15 * k));
    for (std::size_t t = 0; t < rows.size(); ++t) {
      if (t < n_val)
        ds.splits[rows[t]] = Split::val;
      else if (t < n_val + n_test)
        ds.splits[rows[t]] = Split::test;
    }
  }
}

Dataset make_blobs(std::size_t n, std::size_t d, std::size_t c, double cluster_sep, std::uint64_t seed) {
  require_dims(c >= 2 && n >= c, "make_blobs: need n >= c >= 2");
  require_dims(d >= 1, "make_blobs: need d >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  Matrix centers(c, d);
  if (c <= d) {
    // Scaled basis vectors sit exactly cluster_sep apart.
    std::vector<std::size_t> axes(d);
    std::iota(axes.begin(), axes.end(), 0);
    std::shuffle(axes.begin(), axes.end(), rng);
    for (std::size_t k = 0; k < c; ++k) centers(k, axes[k]) = cluster_sep / std::sqrt(2.0);
  } else {
    double radius = cluster_sep;
    for (std::size_t k = 0; k < c;) {
      for (std::size_t j = 0; j < d; ++j) centers(k, j) = radius * normal(rng);
      bool ok = true;
      for (std::size_t p = 0; p < k && ok; ++p) {
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) s += (centers(k, j) - centers(p, j)) * (centers(k, j) - centers(p, j));
        ok = std::sqrt(s) >= cluster_sep;
      }
      if (ok)
        ++k;
      else
        radius *= 1.01;
    }
  }

  Dataset ds;
  ds.name = "blobs";
  ds.seed = seed;
  ds.num_classes = c;
  ds.features = Matrix(n, d);
  ds.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = i % c;
    ds.labels[i] = static_cast<int>(k);
    for (std::size_t j = 0; j < d; ++j) ds.features(i, j) = centers(k, j) + normal(rng);
  }
  assign_stratified_splits(ds, seed);
  ds.validate();
  return ds;
}

Dataset subsample_per_class(const Dataset& ds, std::size_t k_per_class, std::uint64_t seed) {
  std::map<int, std::vector<std::size_t>> train_by_class;
  for (std::size_t i = 0; i < ds.size(); ++i)
    if (ds.splits[i] == Split::train) train_by_class[ds.labels[i]].push_back(i);
  Dataset out = ds;
  std::mt19937_64 rng(seed);
  for (std::size_t c = 0; c < ds.num_classes; ++c) {
    auto& rows = train_by_class[static_cast<int>(c)];
    if (rows.size() < k_per_class)
      throw InsufficientDataError("subsample_per_class: class " + std::to_string(c) + " has " +
                                  std::to_string(rows.size()) + " training rows, need " +
                                  std::to_string(k_per_class));
    std::shuffle(rows.begin(), rows.end(), rng);
    for (std::size_t t = k_per_class; t < rows.size(); ++t) out.splits[rows[t]] = Split::unlabeled;
  }
  return out;
}

// ---------------------------------------------------------------------------
// IDX
// ---------------------------------------------------------------------------

namespace {

std::uint32_t read_be32(std::istream& in, const char* what) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (in.gcount() != 4) throw TruncatedError(std::string("idx: truncated ") + what);
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
}

std::vector<std::uint32_t> read_idx_header(std::istream& in, std::uint32_t expected_magic, const char* what) {
  const std::uint32_t magic = read_be32(in, "magic");
  if (magic != expected_magic) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "0x%08x", magic);
    throw BadMagicError(std::string("idx ") + what + ": bad magic " + buf);
  }
  std::vector<std::uint32_t> dims(magic & 0xff);
  for (auto& d : dims) d = read_be32(in, "dimensions");
  return dims;
}

std::vector<unsigned char> read_payload(std::istream& in, std::size_t count, const char* what) {
  std::vector<unsigned char> bytes(count);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(count));
  if (in.gcount() != static_cast<std::streamsize>(count))
    throw TruncatedError(std::string("idx ") + what + ": payload is truncated");
  return bytes;
}

}  // namespace

Matrix read_idx_images(std::istream& in) {
  const auto dims = read_idx_header(in, 0x00000803, "images");
  const std::size_t n = dims[0];
  const std::size_t d = std::size_t{dims[1]} * dims[2];
  const auto bytes = read_payload(in, n * d, "images");
  Matrix x(n, d);
  for (std::size_t k = 0; k < bytes.size(); ++k) x.data()[k] = bytes[k] / 255.0;
  return x;
}

std::vector<int> read_idx_labels(std::istream& in) {
  const auto dims = read_idx_header(in, 0x00000801, "labels");
  const auto bytes = read_payload(in, dims[0], "labels");
  return {bytes.begin(), bytes.end()};
}

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels, std::uint64_t seed) {
  std::ifstream fi(images, std::ios::binary), fl(labels, std::ios::binary);
  if (!fi) throw FileError("cannot open " + images.string());
  if (!fl) throw FileError("cannot open " + labels.string());
  Dataset ds;
  ds.features = read_idx_images(fi);
  ds.labels = read_idx_labels(fl);
  require_dims(ds.labels.size() == ds.features.rows(), "idx: image and label counts differ");
  if (ds.labels.empty()) throw EmptyDatasetError("idx: no samples");
  ds.num_classes = static_cast<std::size_t>(*std::max_element(ds.labels.begin(), ds.labels.end())) + 1;
  ds.name = images.stem().string();
  ds.seed = seed;
  assign_stratified_splits(ds, seed);
  ds.validate();
  return ds;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_number(std::string_view field, std::size_t line_no) {
  field = trim(field);
  double v = 0.0;
  auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (field.empty() || res.ec != std::errc() || res.ptr != field.data() + field.size() || !std::isfinite(v))
    throw NonNumericError("csv line " + std::to_string(line_no) + ": non-numeric field '" + std::string(field) + "'");
  return v;
}

}  // namespace

Dataset parse_csv(std::istream& in, const std::string& name, std::uint64_t seed) {
  std::string line;
  if (!std::getline(in, line)) throw EmptyDatasetError("csv '" + name + "': missing header");
  const auto header = split_commas(trim(line));
  if (header.empty() || trim(header[0]) != "label")
    throw FormatError("csv '" + name + "': header must start with 'label'");
  const std::size_t d = header.size() - 1;

  std::vector<double> values;
  std::vector<int> labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_commas(trim(line));
    if (fields.size() != d + 1)
      throw FormatError("csv line " + std::to_string(line_no) + ": expected " + std::to_string(d + 1) + " fields");
    const double y = parse_number(fields[0], line_no);
    if (y < 0 || y != std::floor(y))
      throw NonNumericError("csv line " + std::to_string(line_no) + ": label must be a non-negative integer");
    labels.push_back(static_cast<int>(y));
    for (std::size_t j = 1; j <= d; ++j) values.push_back(parse_number(fields[j], line_no));
  }
  if (labels.empty()) throw EmptyDatasetError("csv '" + name + "': no data rows");

  Dataset ds;
  ds.features = Matrix(labels.size(), d, std::move(values));
  ds.labels = std::move(labels);
  ds.num_classes = static_cast<std::size_t>(*std::max_element(ds.labels.begin(), ds.labels.end())) + 1;
  ds.name = name;
  ds.seed = seed;
  assign_stratified_splits(ds, seed);
  ds.validate();
  return ds;
}

Dataset load_csv(const std::filesystem::path& path, std::uint64_t seed) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot open " + path.string());
  return parse_csv(in, path.stem().string(), seed);
}

void write_csv(const std::filesystem::path& path, const Dataset& ds) {
  std::ofstream out(path);
  if (!out) throw FileError("cannot write " + path.string());
  out << "label";
  for (std::size_t j = 0; j < ds.dim(); ++j) out << ",f" << j;
  out << '\n';
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out << ds.labels[i];
    for (double v : ds.features.row(i)) out << ',' << format_double(v);
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

namespace {
char split_char(Split s) {
  switch (s) {
    case Split::train: return 'T';
    case Split::val: return 'V';
    case Split::test: return 'E';
    case Split::unlabeled: return 'U';
  }
  return '?';
}
}  // namespace

void write_manifest(const std::filesystem::path& path, const Dataset& ds) {
  std::ofstream out(path);
  if (!out) throw FileError("cannot write " + path.string());
  out << "name=" << ds.name << '\n'
      << "seed=" << ds.seed << '\n'
      << "rows=" << ds.size() << '\n'
      << "features=" << ds.dim() << '\n'
      << "classes=" << ds.num_classes << '\n'
      << "train_rows=" << ds.indices(Split::train).size() << '\n'
      << "val_rows=" << ds.indices(Split::val).size() << '\n'
      << "test_rows=" << ds.indices(Split::test).size() << '\n'
      << "unlabeled_rows=" << ds.indices(Split::unlabeled).size() << '\n'
      << "splits=";
  for (Split s : ds.splits) out << split_char(s);
  out << '\n';
}

void apply_manifest(const std::filesystem::path& path, Dataset& ds) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot open " + path.string());
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("splits=", 0) != 0) continue;
    const std::string tags = line.substr(7);
    require_dims(tags.size() == ds.size(), "manifest: split tag count != dataset rows");
    for (std::size_t i = 0; i < tags.size(); ++i) {
      switch (tags[i]) {
        case 'T': ds.splits[i] = Split::train; break;
        case 'V': ds.splits[i] = Split::val; break;
        case 'E': ds.splits[i] = Split::test; break;
        case 'U': ds.splits[i] = Split::unlabeled; break;
        default: throw FormatError("manifest: unknown split tag");
      }
    }
    return;
  }
  throw FormatError("manifest: no splits line");
}

// ---------------------------------------------------------------------------
// FrozenExtractor
// ---------------------------------------------------------------------------

FrozenExtractor::FrozenExtractor(std::size_t d_raw, std::size_t d_feat, std::uint64_t seed, double shift)
    : projection_(d_raw, d_feat), shift_(shift) {
  require_dims(d_raw > 0 && d_feat > 0, "FrozenExtractor: zero dimension");
  if (!(shift >= 0.0)) throw Error("FrozenExtractor: shift must be non-negative");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(d_raw)));
  for (double& v : projection_.data()) v = normal(rng);
}

Matrix extract(const FrozenExtractor& fx, const Matrix& raw) {
  require_dims(raw.cols() == fx.input_dim(), "extract: input has " + std::to_string(raw.cols()) +
                                                  " columns, extractor expects " + std::to_string(fx.input_dim()));
  Matrix out = matmul(raw, fx.projection());
  for (double& v : out.data()) v = std::max(0.0, v) + fx.shift();
  return out;
}

Dataset extract(const FrozenExtractor& fx, const Dataset& ds) {
  Dataset out = ds;
  out.features = extract(fx, ds.features);
  return out;
}

}  // namespace nys
