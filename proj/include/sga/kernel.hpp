#pragma once

// RBF-kernel maximum mean discrepancy between source and target feature
// batches. The square root of the biased estimator is the per-stage
// "hardness" that drives the focal exponent, the hardness loss and the
// progressive sampler.

#include <span>
#include <utility>
#include <vector>

#include "sga/autodiff.hpp"

namespace sga {

enum class BandwidthMode { median_heuristic, fixed };

struct KernelConfig {
  BandwidthMode mode = BandwidthMode::median_heuristic;
  double fixed_sigma = 1.0;  // used only in fixed mode

  void validate() const;
};

struct HardnessReport {
  std::vector<double> per_stage;
  double average = 0.0;
};

/// K[i][j] = exp(-|A_i - B_j|^2 / (2 sigma^2)). Differentiable in A and B.
Tensor rbf_kernel_matrix(const Tensor& a, const Tensor& b, double sigma);

/// sqrt(median squared distance over distinct pairs of the pooled rows / 2),
/// or 1.0 when that median is zero. Ignores any tape.
double median_heuristic_sigma(const Tensor& a, const Tensor& b);

/// Bandwidth selected by `cfg` for this pair of batches.
double select_bandwidth(const Tensor& source, const Tensor& target, const KernelConfig& cfg);

/// Biased MMD estimate with an explicit bandwidth, as a scalar tensor.
/// Symmetric in its arguments bit for bit.
Tensor mmd_hardness(const Tensor& source, const Tensor& target, double sigma);
Tensor mmd_hardness(const Tensor& source, const Tensor& target, const KernelConfig& cfg);

struct StageFeatures {
  Tensor source;
  Tensor target;
};

struct MultiStageHardness {
  HardnessReport report;
  std::vector<Tensor> gamma;   // differentiable, one per stage
  std::vector<double> sigma;   // bandwidth used per stage
};

/// Hardness for every stage. `sigma_override`, when non-empty, supplies one
/// bandwidth per stage instead of `cfg`.
MultiStageHardness multi_stage_hardness(std::span<const StageFeatures> stages,
                                        const KernelConfig& cfg,
                                        std::span<const double> sigma_override = {});

/// Arithmetic mean; throws EmptyInputError on an empty list.
HardnessReport make_report(std::vector<double> per_stage);

}  // namespace sga
