#include "sga/sps.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sga/errors.hpp"

namespace sga {

double median(std::span<const double> values) {
  if (values.empty()) throw EmptyInputError("median of an empty list");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  return n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
}

void SpsState::record(double avg_gamma) {
  if (!std::isfinite(avg_gamma) || avg_gamma < 0.0) {
    throw DataError("recorded hardness must be finite and >= 0, got " +
                    std::to_string(avg_gamma));
  }
  records_.push_back(avg_gamma);
}

GateDecision SpsState::gate(double avg_gamma) {
  if (!alpha_) throw StateError("gate() called before the pre-epoch set alpha");
  GateDecision d{avg_gamma <= *alpha_, avg_gamma, *alpha_};
  ++gated_;
  if (d.selected) ++selected_;
  return d;
}

EpochSummary SpsState::epoch_end() {
  if (records_.empty()) {
    throw StateError("epoch " + std::to_string(epoch_) + " recorded no iterations");
  }
  EpochSummary s;
  s.epoch_index = epoch_;
  s.iterations = records_.size();
  s.selected = selected_;
  s.all_gated_out = gated_ > 0 && selected_ == 0;
  alpha_ = median(records_);
  s.alpha = *alpha_;
  records_.clear();
  selected_ = 0;
  gated_ = 0;
  ++epoch_;
  return s;
}

EpochSummary run_pre_epoch(SpsState& state, std::size_t steps,
                           const std::function<double(std::size_t)>& train_step) {
  if (state.mode() != SpsMode::pre_epoch || state.epoch_index() != 0 ||
      !state.records().empty()) {
    throw StateError("pre-epoch needs a fresh scheduler state");
  }
  for (std::size_t step = 0; step < steps; ++step) state.record(train_step(step));
  return state.epoch_end();
}

}  // namespace sga
