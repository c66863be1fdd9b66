#pragma once

// Self-guided progressive sampling. Each iteration's average hardness is
// recorded; in gated mode an iteration trains only when its average hardness
// is at most the threshold alpha, and alpha becomes the median of the
// previous epoch's records at every epoch end.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace sga {

/// Median; even-length input averages the two central values.
/// Throws EmptyInputError on an empty list.
double median(std::span<const double> values);

enum class SpsMode { pre_epoch, gated };

struct GateDecision {
  bool selected = false;
  double avg_gamma = 0.0;
  double alpha_used = 0.0;
};

struct EpochSummary {
  std::size_t epoch_index = 0;   // index of the epoch that just ended
  std::size_t iterations = 0;
  std::size_t selected = 0;      // gated iterations that trained
  double alpha = 0.0;            // threshold for the next epoch
  bool all_gated_out = false;    // gated epoch in which nothing trained
};

class SpsState {
 public:
  SpsMode mode() const noexcept { return alpha_ ? SpsMode::gated : SpsMode::pre_epoch; }
  std::optional<double> alpha() const noexcept { return alpha_; }
  std::size_t epoch_index() const noexcept { return epoch_; }
  const std::vector<double>& records() const noexcept { return records_; }

  /// Appends one iteration's average hardness. Throws DataError for a
  /// negative or non-finite value.
  void record(double avg_gamma);

  /// selected = avg_gamma <= alpha. Throws StateError before the first
  /// epoch_end; the decision is counted for the epoch summary.
  GateDecision gate(double avg_gamma);

  /// alpha <- median(records), records cleared, epoch index advanced.
  /// Throws StateError if no iteration was recorded this epoch.
  EpochSummary epoch_end();

 private:
  std::optional<double> alpha_;
  std::vector<double> records_;
  std::size_t epoch_ = 0;
  std::size_t selected_ = 0;
  std::size_t gated_ = 0;
};

/// Runs `steps` ungated iterations, recording the average hardness that
/// `train_step(step)` returns, then closes the epoch to set the initial alpha.
/// Requires a fresh state.
EpochSummary run_pre_epoch(SpsState& state, std::size_t steps,
                           const std::function<double(std::size_t)>& train_step);

}  // namespace sga
