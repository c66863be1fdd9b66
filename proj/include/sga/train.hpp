#pragma once

// End-to-end progressive alignment training, evaluation, JSONL metrics and
// multi-seed variant comparison.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "sga/alignment.hpp"
#include "sga/data.hpp"
#include "sga/kernel.hpp"
#include "sga/model.hpp"
#include "sga/sps.hpp"

namespace sga {

/// Ablation ladder, each rung adding one switch to the previous:
/// cross-entropy adversary, fixed focal exponent, hardness focal exponent,
/// hardness loss, progressive sampling.
enum class Variant { source_only, baseline_a, baseline_b, sga_g, sga_l, sga_s };

const char* to_string(Variant v) noexcept;
Variant parse_variant(const std::string& name);
bool uses_progressive_sampling(Variant v) noexcept;

enum class RetrainMode { reset, continue_training };

struct LearningRateSchedule {
  double initial = 0.05;
  double drop_factor = 0.1;
  double drop_point = 0.5;  // fraction of gated-phase iterations before the drop

  double at(std::size_t iteration, std::size_t total) const;
};

struct TrainConfig {
  std::optional<DatasetSpec> dataset;
  std::optional<std::filesystem::path> dataset_path;
  std::size_t epochs = 40;
  std::size_t steps_per_epoch = 200;  // 0: one pass over the training data
  std::size_t batch_size = 16;
  LearningRateSchedule learning_rate;
  double beta = 0.25;
  double grl_lambda = 1.0;
  KernelConfig kernel;
  Variant variant = Variant::sga_s;
  std::size_t stages = 3;
  std::size_t width = 16;
  std::size_t disc_hidden = 32;
  double fixed_focal_exponent = 5.0;
  StageReduction stage_reduction = StageReduction::sum;
  RetrainMode retrain = RetrainMode::reset;
  std::uint64_t seed = 0;

  /// Throws ConfigError naming the offending field.
  void validate() const;
  /// Rejects unknown keys. Missing keys keep their defaults.
  static TrainConfig from_json(const nlohmann::json& j);
  static TrainConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  LossOptions loss_options() const;
};

nlohmann::json dataset_spec_to_json(const DatasetSpec& spec);
DatasetSpec dataset_spec_from_json(const nlohmann::json& j);

enum class Phase { pre_epoch, main };

struct IterationRecord {
  Phase phase = Phase::main;
  std::size_t epoch = 0;
  std::size_t step = 0;
  std::vector<double> gamma;
  double avg_gamma = 0.0;
  std::optional<double> alpha;
  bool selected = true;
  LossBreakdown loss;
  double learning_rate = 0.0;

  nlohmann::json to_json() const;
};

struct EvalReport {
  double source_accuracy = 0.0;
  double target_accuracy = 0.0;
  double domain_confusion_degree = 0.0;
  std::optional<double> final_epoch_mean_hardness;

  nlohmann::json to_json() const;
};

/// Fraction of probabilities with max(p, 1 - p) <= 0.6.
double domain_confusion_degree(std::span<const double> probabilities);

/// Accuracy on source labels and held-out target labels, plus the confusion
/// degree of the last stage's discriminator over the pooled domains.
EvalReport evaluate(const Model& model, const DomainDataset& data);

struct EpochResult {
  std::size_t epoch = 0;
  EvalReport eval;
  double mean_hardness = 0.0;  // mean recorded avg_gamma over the epoch
  std::optional<EpochSummary> sampling;
};

struct TrainResult {
  Model model;
  std::vector<IterationRecord> records;
  std::optional<EpochSummary> pre_epoch;
  std::vector<EpochResult> epochs;
  EvalReport final_eval;
};

/// Writes one JSON object per line: a versioned header, then iteration and
/// epoch records.
class MetricsLog {
 public:
  explicit MetricsLog(std::ostream& out) : out_(&out) {}

  void header(const TrainConfig& config);
  void iteration(const IterationRecord& r);
  void epoch(Phase phase, const EpochResult& e);

 private:
  void write(const nlohmann::json& j);
  std::ostream* out_;
};

inline constexpr const char* kMetricsSchema = "sga-metrics";
inline constexpr int kMetricsVersion = 1;

/// Raised when training hits a non-finite value; carries the iteration.
class TrainingNumericError : public NumericError {
 public:
  TrainingNumericError(const std::string& what, IterationRecord record)
      : NumericError(what), record_(std::move(record)) {}
  const IterationRecord& record() const noexcept { return record_; }

 private:
  IterationRecord record_;
};

/// Training and held-out data for a config: a generated spec uses a derived
/// seed for the held-out draw; a dataset file serves as both.
struct DataSplit {
  DomainDataset train;
  DomainDataset heldout;
};
DataSplit prepare_data(const TrainConfig& config);

/// Runs the variant's pipeline (pre-epoch first when progressive sampling is
/// on). `log` receives every record if given.
TrainResult train(const TrainConfig& config, const DataSplit& data, MetricsLog* log = nullptr);
TrainResult train(const TrainConfig& config, MetricsLog* log = nullptr);

struct RunArtifacts {
  std::filesystem::path metrics;
  std::filesystem::path checkpoint;
};

/// Trains and writes metrics.jsonl and model.json into `out_dir`.
RunArtifacts train_to_directory(const TrainConfig& config, const std::filesystem::path& out_dir,
                                TrainResult* result = nullptr);

struct VariantSummary {
  std::string label;
  Variant variant = Variant::sga_s;
  std::size_t runs = 0;
  double mean_final_target_accuracy = 0.0;
  double mean_avg_target_accuracy = 0.0;  // final-quarter epoch average, then over seeds
  double best_target_accuracy = 0.0;      // max over seeds and epochs
  double mean_hardness_slope = 0.0;       // least-squares slope of epoch mean hardness
  double mean_first_quarter_hardness = 0.0;
  double mean_final_quarter_hardness = 0.0;
  std::vector<double> confusion_curve;    // per-epoch confusion degree, seed mean
  std::vector<double> hardness_curve;     // per-epoch mean hardness, seed mean
};

struct ComparisonRun {
  std::string label;
  std::uint64_t seed = 0;
  TrainResult result;
};

/// Summary statistics over the runs of one variant.
VariantSummary summarize(const std::string& label, Variant variant,
                         std::span<const TrainResult> runs);

/// Trains every config under every seed. Configs must share a dataset.
std::vector<VariantSummary> compare_variants(std::span<const TrainConfig> configs,
                                             std::span<const std::uint64_t> seeds,
                                             std::vector<ComparisonRun>* runs = nullptr);

void write_summary_csv(std::span<const VariantSummary> rows, std::ostream& out);
std::string format_summary_table(std::span<const VariantSummary> rows);

/// Final-quarter slice bounds [begin, end) of a length-n sequence, and the
/// first-quarter bound; both quarters hold at least one element when n > 0.
std::size_t final_quarter_begin(std::size_t n);
std::size_t first_quarter_end(std::size_t n);

}  // namespace sga
