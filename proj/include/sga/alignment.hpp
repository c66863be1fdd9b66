#pragma once

// Hardness-guided adversarial alignment: focal domain loss behind gradient
// reversal, the source classification loss, and the per-batch composite
//
//   total = l_det + l_adv + beta * l_gamma
//
// where l_adv and l_gamma aggregate over generator stages.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sga/autodiff.hpp"
#include "sga/data.hpp"
#include "sga/kernel.hpp"
#include "sga/model.hpp"

namespace sga {

/// Probability clamp applied before every log in the domain losses.
inline constexpr double kProbabilityEpsilon = 1e-12;

/// Mean over rows of -(1 - p_t)^gamma * log(p_t), with p_t = p for y = 1 and
/// 1 - p for y = 0. gamma = 0 gives binary cross-entropy.
Tensor focal_domain_loss(const Tensor& p, int domain_label, double gamma);

/// focal(D(R(Fs)), 1, gamma) + focal(D(R(Ft)), 0, gamma), where R is gradient
/// reversal with the module's lambda, or the identity when `reverse` is false.
Tensor adversarial_stage_loss(const SgaModule& module, std::span<const Tensor> params,
                              const Tensor& source_features, const Tensor& target_features,
                              double gamma, bool reverse = true);

/// Mean softmax cross-entropy of `logits` [n x C] against `labels`.
/// Throws DataError for a label outside [0, C).
Tensor detection_stand_in_loss(const Tensor& logits, std::span<const int> labels);

/// Where the focal exponent of the domain loss comes from.
enum class FocalExponent {
  zero,      // plain cross-entropy
  fixed,     // constant exponent
  hardness   // the stage's detached MMD hardness
};

enum class StageReduction { sum, mean };

struct LossOptions {
  bool adversarial = true;
  FocalExponent exponent = FocalExponent::hardness;
  double fixed_exponent = 5.0;
  bool hardness_loss = true;
  double beta = 0.25;
  StageReduction reduction = StageReduction::sum;
  KernelConfig kernel;
  /// Route stage features through gradient reversal before each
  /// discriminator. Off, the tape yields the plain gradient of `total`.
  bool reverse_gradients = true;
};

struct LossBreakdown {
  double l_det = 0.0;
  std::optional<double> l_adv;     // absent when no adversarial term is active
  std::optional<double> l_gamma;   // absent when the hardness loss is inactive
  double beta = 0.0;
  double total = 0.0;
  std::vector<double> focal_exponents;  // per stage; empty without l_adv

  /// l_det + l_adv + beta * l_gamma, treating absent terms as zero.
  double recomposed() const;
  std::string describe() const;
};

/// Per-iteration constants that batch_loss would otherwise compute from the
/// batch. Supplying them freezes the loss surface for gradient checks.
struct FrozenConstants {
  std::vector<double> sigma;           // one RBF bandwidth per stage
  std::vector<double> focal_exponent;  // one exponent per stage
};

struct BatchLoss {
  Tensor total;
  LossBreakdown breakdown;
  HardnessReport hardness;
  FrozenConstants constants;  // the values actually used
};

/// Runs the generator on both domains, measures per-stage hardness and builds
/// the composite loss. `params` may be taped (training) or plain values.
/// Throws NumericLossError when any component is non-finite.
BatchLoss batch_loss(const DomainBatch& batch, const Model& model,
                     std::span<const Tensor> params, const LossOptions& options,
                     const FrozenConstants* frozen = nullptr);

class NumericLossError : public NumericError {
 public:
  explicit NumericLossError(LossBreakdown breakdown)
      : NumericError("non-finite loss component: " + breakdown.describe()),
        breakdown_(std::move(breakdown)) {}

  const LossBreakdown& breakdown() const noexcept { return breakdown_; }

 private:
  LossBreakdown breakdown_;
};

}  // namespace sga
