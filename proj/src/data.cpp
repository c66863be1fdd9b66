#include "sga/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

namespace sga {

const char* to_string(DatasetFamily family) noexcept {
  switch (family) {
    case DatasetFamily::gaussian_blobs: return "gaussian-blobs";
    case DatasetFamily::two_moons: return "two-moons";
  }
  return "unknown";
}

DatasetFamily parse_family(const std::string& name) {
  if (name == "gaussian-blobs") return DatasetFamily::gaussian_blobs;
  if (name == "two-moons") return DatasetFamily::two_moons;
  throw ConfigError("family: unknown dataset family '" + name + "'");
}

void DatasetSpec::validate() const {
  if (classes < 2) throw ConfigError("classes: need at least 2 classes");
  if (family == DatasetFamily::two_moons && classes != 2) {
    throw ConfigError("classes: two-moons has exactly 2 classes");
  }
  if (points_per_domain < 2 * classes) {
    throw ConfigError("points_per_domain: need at least 2 points per class");
  }
  if (dimension < 2) throw ConfigError("dimension: need at least 2 features");
  if (!(noise >= 0.0) || !std::isfinite(noise)) throw ConfigError("noise: must be >= 0");
  if (!(shift.rotation_degrees >= 0.0 && shift.rotation_degrees <= 180.0)) {
    throw ConfigError("shift.rotation_degrees: must lie in [0, 180]");
  }
  if (!(shift.noise_sigma >= 0.0) || !std::isfinite(shift.noise_sigma)) {
    throw ConfigError("shift.noise_sigma: must be >= 0");
  }
  for (double t : shift.translation) {
    if (!std::isfinite(t)) throw ConfigError("shift.translation: must be finite");
  }
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over the combined words
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// DomainDataset ---------------------------------------------------------------

DomainDataset::DomainDataset(Tensor source_x, std::vector<int> source_y, Tensor target_x,
                             std::optional<std::vector<int>> target_eval_labels)
    : source_x_(std::move(source_x)),
      source_y_(std::move(source_y)),
      target_x_(std::move(target_x)),
      target_y_(std::move(target_eval_labels)),
      reads_(std::make_shared<std::atomic<std::size_t>>(0)) {
  if (source_x_.rank() != 2 || target_x_.rank() != 2) {
    throw ShapeError("dataset features must be matrices");
  }
  if (source_x_.rows() == 0 || target_x_.rows() == 0) {
    throw EmptyInputError("dataset needs at least one source and one target row");
  }
  if (source_x_.cols() != target_x_.cols()) {
    throw ShapeError("source and target feature dimensions differ: " +
                     shape_to_string(source_x_.shape()) + " vs " +
                     shape_to_string(target_x_.shape()));
  }
  if (source_y_.size() != source_x_.rows()) {
    throw DataError("source label count does not match source rows");
  }
  if (target_y_ && target_y_->size() != target_x_.rows()) {
    throw DataError("target label count does not match target rows");
  }
  for (int y : source_y_) {
    if (y < 0) throw DataError("negative source label");
  }
}

const std::vector<int>& DomainDataset::target_labels_for_evaluation() const {
  if (!target_y_) throw DataError("dataset carries no held-out target labels");
  ++*reads_;
  return *target_y_;
}

std::size_t DomainDataset::classes() const noexcept {
  int top = 0;
  for (int y : source_y_) top = std::max(top, y);
  return static_cast<std::size_t>(top) + 1;
}

// Generation ------------------------------------------------------------------

namespace {

struct Points {
  std::vector<double> x;  // row-major n x d
  std::vector<int> y;
};

Points sample_domain(const DatasetSpec& spec, double noise, std::mt19937_64& rng) {
  const std::size_t n = spec.points_per_domain;
  const std::size_t d = spec.dimension;
  Points p;
  p.x.assign(n * d, 0.0);
  p.y.resize(n);
  std::normal_distribution<double> jitter(0.0, 1.0);
  std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);

  for (std::size_t i = 0; i < n; ++i) {
    double* row = &p.x[i * d];
    if (spec.family == DatasetFamily::two_moons) {
      const int label = i < n / 2 ? 0 : 1;
      const double t = angle(rng);
      if (label == 0) {
        row[0] = std::cos(t) - 0.5;
        row[1] = std::sin(t) - 0.25;
      } else {
        row[0] = 0.5 - std::cos(t);
        row[1] = 0.25 - std::sin(t);
      }
      p.y[i] = label;
    } else {
      const std::size_t c = spec.classes;
      const std::size_t base = n / c, extra = n % c;
      // first `extra` classes hold base + 1 points
      std::size_t label = 0, edge = base + (extra > 0 ? 1 : 0);
      while (i >= edge) {
        ++label;
        edge += base + (label < extra ? 1 : 0);
      }
      const double theta = 2.0 * std::numbers::pi * static_cast<double>(label) /
                           static_cast<double>(c);
      row[0] = 3.0 * std::cos(theta);
      row[1] = 3.0 * std::sin(theta);
      p.y[i] = static_cast<int>(label);
    }
    for (std::size_t k = 0; k < d; ++k) row[k] += noise * jitter(rng);
  }
  return p;
}

void apply_shift(Points& p, std::size_t d, const DomainShift& shift) {
  const std::size_t n = p.y.size();
  double cx = 0.0, cy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    cx += p.x[i * d];
    cy += p.x[i * d + 1];
  }
  cx /= static_cast<double>(n);
  cy /= static_cast<double>(n);
  const double rad = shift.rotation_degrees * std::numbers::pi / 180.0;
  const double c = std::cos(rad), s = std::sin(rad);
  for (std::size_t i = 0; i < n; ++i) {
    double& x = p.x[i * d];
    double& y = p.x[i * d + 1];
    const double dx = x - cx, dy = y - cy;
    x = cx + c * dx - s * dy + shift.translation[0];
    y = cy + s * dx + c * dy + shift.translation[1];
  }
}

}  // namespace

DomainDataset generate(const DatasetSpec& spec) {
  spec.validate();
  const std::size_t n = spec.points_per_domain, d = spec.dimension;
  std::mt19937_64 source_rng(derive_seed(spec.seed, 1));
  std::mt19937_64 target_rng(derive_seed(spec.seed, 2));

  Points src = sample_domain(spec, spec.noise, source_rng);
  Points tgt = sample_domain(spec, spec.shift.noise_sigma, target_rng);
  apply_shift(tgt, d, spec.shift);

  return DomainDataset(Tensor({n, d}, std::move(src.x)), std::move(src.y),
                       Tensor({n, d}, std::move(tgt.x)), std::move(tgt.y));
}

// CSV -------------------------------------------------------------------------

void save(const DomainDataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  const std::size_t d = data.dimension();
  out << "domain,label";
  for (std::size_t k = 0; k < d; ++k) out << ",f" << k;
  out << '\n';

  char buf[32];
  auto write_rows = [&](const char* domain, const Tensor& x, const std::vector<int>* y) {
    for (std::size_t i = 0; i < x.rows(); ++i) {
      out << domain << ',';
      if (y) out << (*y)[i];
      for (std::size_t k = 0; k < d; ++k) {
        std::snprintf(buf, sizeof buf, "%.17g", x.at(i, k));
        out << ',' << buf;
      }
      out << '\n';
    }
  };
  write_rows("source", data.source_features(), &data.source_labels());
  // Persisting held-out labels is not a training read, so skip the counter.
  const std::vector<int>* target_y = data.target_y_ ? &*data.target_y_ : nullptr;
  write_rows("target", data.target_features(), target_y);
  if (!out) throw IoError("failed writing " + path.string());
}

namespace {

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

[[noreturn]] void fail(std::size_t line_no, const std::string& msg) {
  throw ParseError("line " + std::to_string(line_no) + ": " + msg);
}

double parse_double(std::string_view s, std::size_t line_no) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    fail(line_no, "invalid number '" + std::string(s) + "'");
  }
  return v;
}

int parse_label(std::string_view s, std::size_t line_no) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || v < 0) {
    fail(line_no, "invalid label '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

DomainDataset load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());

  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) fail(line_no, "missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv(line);
  if (header.size() < 3 || header[0] != "domain" || header[1] != "label") {
    fail(line_no, "header must start with 'domain,label,f0'");
  }
  const std::size_t d = header.size() - 2;
  for (std::size_t k = 0; k < d; ++k) {
    if (header[k + 2] != "f" + std::to_string(k)) {
      fail(line_no, "expected column f" + std::to_string(k));
    }
  }

  std::vector<double> sx, tx;
  std::vector<int> sy, ty;
  std::size_t target_rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != d + 2) {
      fail(line_no, "expected " + std::to_string(d + 2) + " fields, got " +
                        std::to_string(fields.size()));
    }
    std::vector<double>* xs;
    if (fields[0] == "source") {
      if (fields[1].empty()) fail(line_no, "source row without a label");
      sy.push_back(parse_label(fields[1], line_no));
      xs = &sx;
    } else if (fields[0] == "target") {
      ++target_rows;
      if (!fields[1].empty()) {
        if (ty.size() + 1 != target_rows) fail(line_no, "target labels must be all present or all blank");
        ty.push_back(parse_label(fields[1], line_no));
      } else if (!ty.empty()) {
        fail(line_no, "target labels must be all present or all blank");
      }
      xs = &tx;
    } else {
      fail(line_no, "unknown domain '" + std::string(fields[0]) + "'");
    }
    for (std::size_t k = 0; k < d; ++k) xs->push_back(parse_double(fields[k + 2], line_no));
  }
  if (sy.empty() || target_rows == 0) {
    fail(line_no, "file needs at least one source and one target row");
  }

  std::optional<std::vector<int>> labels;
  if (!ty.empty()) labels = std::move(ty);
  const std::size_t ns = sy.size();
  return DomainDataset(Tensor({ns, d}, std::move(sx)), std::move(sy),
                       Tensor({target_rows, d}, std::move(tx)), std::move(labels));
}

// BatchIterator ---------------------------------------------------------------

BatchIterator::BatchIterator(const DomainDataset& data, std::size_t batch_size,
                             std::uint64_t seed)
    : data_(&data), batch_(batch_size) {
  const std::size_t ns = data.source_features().rows();
  const std::size_t nt = data.target_features().rows();
  const std::size_t n = std::min(ns, nt);
  if (batch_size == 0) throw ConfigError("batch_size: must be at least 1");
  if (batch_size > n) {
    throw ConfigError("batch_size: " + std::to_string(batch_size) +
                      " exceeds the smaller domain (" + std::to_string(n) + " rows)");
  }
  batches_ = n / batch_size;
  source_order_.resize(ns);
  target_order_.resize(nt);
  for (std::size_t i = 0; i < ns; ++i) source_order_[i] = i;
  for (std::size_t i = 0; i < nt; ++i) target_order_[i] = i;
  std::mt19937_64 rs(derive_seed(seed, 11));
  std::mt19937_64 rt(derive_seed(seed, 12));
  std::shuffle(source_order_.begin(), source_order_.end(), rs);
  std::shuffle(target_order_.begin(), target_order_.end(), rt);
}

std::optional<DomainBatch> BatchIterator::next() {
  if (cursor_ >= batches_) return std::nullopt;
  const std::size_t d = data_->dimension();
  const std::size_t begin = cursor_ * batch_;
  ++cursor_;

  auto gather = [&](const Tensor& x, const std::vector<std::size_t>& order) {
    std::vector<double> rows(batch_ * d);
    for (std::size_t i = 0; i < batch_; ++i) {
      const auto src = x.data().subspan(order[begin + i] * d, d);
      std::copy(src.begin(), src.end(), rows.begin() + static_cast<std::ptrdiff_t>(i * d));
    }
    return Tensor({batch_, d}, std::move(rows));
  };

  DomainBatch b;
  b.source_x = gather(data_->source_features(), source_order_);
  b.target_x = gather(data_->target_features(), target_order_);
  b.source_y.resize(batch_);
  for (std::size_t i = 0; i < batch_; ++i) {
    b.source_y[i] = data_->source_labels()[source_order_[begin + i]];
  }
  return b;
}

}  // namespace sga
