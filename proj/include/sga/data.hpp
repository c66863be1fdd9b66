#pragma once

// Synthetic two-domain datasets with a controlled covariate shift, CSV
// persistence and seeded paired mini-batch iteration.

#include <array>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sga/autodiff.hpp"

namespace sga {

enum class DatasetFamily { gaussian_blobs, two_moons };

const char* to_string(DatasetFamily family) noexcept;
DatasetFamily parse_family(const std::string& name);

struct DomainShift {
  double rotation_degrees = 0.0;             // about the target centroid
  std::array<double, 2> translation{0.0, 0.0};
  double noise_sigma = 0.1;                  // target-domain sample noise
};

struct DatasetSpec {
  DatasetFamily family = DatasetFamily::two_moons;
  std::size_t classes = 2;
  std::size_t points_per_domain = 1000;
  std::size_t dimension = 2;
  double noise = 0.1;                        // source-domain sample noise
  DomainShift shift;
  std::uint64_t seed = 0;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Paired mini-batch: labeled source rows and unlabeled target rows.
struct DomainBatch {
  Tensor source_x;                 // [n_s x d]
  std::vector<int> source_y;       // class per source row
  Tensor target_x;                 // [n_t x d]
};

/// Labeled source domain plus a target domain whose labels are held back for
/// evaluation. Training code only sees target features.
class DomainDataset {
 public:
  DomainDataset(Tensor source_x, std::vector<int> source_y, Tensor target_x,
                std::optional<std::vector<int>> target_eval_labels);

  const Tensor& source_features() const noexcept { return source_x_; }
  const std::vector<int>& source_labels() const noexcept { return source_y_; }
  const Tensor& target_features() const noexcept { return target_x_; }

  bool has_target_labels() const noexcept { return target_y_.has_value(); }
  /// Held-out target labels. Every call is counted so tests can assert that
  /// training never reads them.
  const std::vector<int>& target_labels_for_evaluation() const;
  std::size_t target_label_reads() const noexcept { return *reads_; }

  std::size_t dimension() const noexcept { return source_x_.cols(); }
  /// Number of classes seen in the source labels (max label + 1).
  std::size_t classes() const noexcept;

 private:
  friend void save(const DomainDataset& data, const std::filesystem::path& path);

  Tensor source_x_;
  std::vector<int> source_y_;
  Tensor target_x_;
  std::optional<std::vector<int>> target_y_;
  std::shared_ptr<std::atomic<std::size_t>> reads_;
};

/// Deterministic in `spec` (including its seed).
DomainDataset generate(const DatasetSpec& spec);

/// CSV with header `domain,label,f0,f1,...`; domain is `source` or `target`;
/// target labels may be blank. Values are written with 17 significant digits.
void save(const DomainDataset& data, const std::filesystem::path& path);
DomainDataset load(const std::filesystem::path& path);

/// One pass over the data in shuffled paired mini-batches. Source and target
/// are permuted independently from `seed`, and each of the floor(n / batch)
/// batches pairs `batch` source rows with `batch` target rows.
class BatchIterator {
 public:
  BatchIterator(const DomainDataset& data, std::size_t batch_size, std::uint64_t seed);

  std::optional<DomainBatch> next();
  std::size_t batches_per_epoch() const noexcept { return batches_; }

 private:
  const DomainDataset* data_;
  std::size_t batch_;
  std::size_t batches_;
  std::size_t cursor_ = 0;
  std::vector<std::size_t> source_order_;
  std::vector<std::size_t> target_order_;
};

/// Seed for a derived random stream, so that epochs, domains and held-out
/// splits draw from distinct deterministic sequences.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace sga
