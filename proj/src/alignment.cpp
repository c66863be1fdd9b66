#include "sga/alignment.hpp"

#include <cmath>
#include <sstream>

namespace sga {

Tensor focal_domain_loss(const Tensor& p, int domain_label, double gamma) {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
    throw ConfigError("focal exponent must be >= 0, got " + std::to_string(gamma));
  }
  if (domain_label != 0 && domain_label != 1) {
    throw ConfigError("domain label must be 0 or 1, got " + std::to_string(domain_label));
  }
  const Tensor raw = domain_label == 1 ? p : add_scalar(neg(p), 1.0);
  const Tensor pt = clamp(raw, kProbabilityEpsilon, 1.0 - kProbabilityEpsilon);
  const Tensor modulation = pow_scalar(add_scalar(neg(pt), 1.0), gamma);
  return mean(neg(mul(modulation, log(pt))));
}

Tensor adversarial_stage_loss(const SgaModule& module, std::span<const Tensor> params,
                              const Tensor& source_features, const Tensor& target_features,
                              double gamma, bool reverse) {
  auto route = [&](const Tensor& f) {
    return reverse ? gradient_reverse(f, module.grl_lambda) : f;
  };
  const Tensor ps = module.discriminate(params, route(source_features));
  const Tensor pt = module.discriminate(params, route(target_features));
  return add(focal_domain_loss(ps, 1, gamma), focal_domain_loss(pt, 0, gamma));
}

Tensor detection_stand_in_loss(const Tensor& logits, std::span<const int> labels) {
  if (logits.rank() != 2) {
    throw ShapeError("logits must be a matrix, got " + shape_to_string(logits.shape()));
  }
  const std::size_t n = logits.rows(), c = logits.cols();
  if (n == 0) throw EmptyInputError("cross-entropy over an empty batch");
  if (labels.size() != n) {
    throw ShapeError("cross-entropy: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(n) + " rows");
  }
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= c) {
      throw DataError("class label " + std::to_string(y) + " outside [0, " +
                      std::to_string(c) + ")");
    }
  }

  const auto& z = logits.values();
  std::vector<double> softmax(n * c);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double top = z[i * c];
    for (std::size_t k = 1; k < c; ++k) top = std::max(top, z[i * c + k]);
    double norm = 0.0;
    for (std::size_t k = 0; k < c; ++k) norm += std::exp(z[i * c + k] - top);
    const double log_norm = top + std::log(norm);
    for (std::size_t k = 0; k < c; ++k) softmax[i * c + k] = std::exp(z[i * c + k] - log_norm);
    total += log_norm - z[i * c + static_cast<std::size_t>(labels[i])];
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  Tensor out = Tensor::scalar(total * inv_n);
  require_finite(out, "cross-entropy");

  std::vector<int> ys(labels.begin(), labels.end());
  return make_result(std::move(out), std::span<const Tensor>(&logits, 1),
                     [softmax = std::move(softmax), ys = std::move(ys), n, c, inv_n](
                         std::span<const double> g, std::span<const std::span<double>> gi) {
                       if (gi[0].empty()) return;
                       const double w = g[0] * inv_n;
                       for (std::size_t i = 0; i < n; ++i)
                         for (std::size_t k = 0; k < c; ++k) {
                           const double onehot =
                               static_cast<std::size_t>(ys[i]) == k ? 1.0 : 0.0;
                           gi[0][i * c + k] += w * (softmax[i * c + k] - onehot);
                         }
                     });
}

double LossBreakdown::recomposed() const {
  return l_det + l_adv.value_or(0.0) + beta * l_gamma.value_or(0.0);
}

std::string LossBreakdown::describe() const {
  std::ostringstream os;
  os << "l_det=" << l_det;
  os << " l_adv=";
  if (l_adv) os << *l_adv; else os << "absent";
  os << " l_gamma=";
  if (l_gamma) os << *l_gamma; else os << "absent";
  os << " beta=" << beta << " total=" << total;
  return os.str();
}

BatchLoss batch_loss(const DomainBatch& batch, const Model& model,
                     std::span<const Tensor> params, const LossOptions& options,
                     const FrozenConstants* frozen) {
  const auto& mods = model.modules();
  const std::size_t stages = model.architecture().stages;
  if (mods.size() != stages) throw ConfigError("one SGA module is needed per generator stage");
  if (frozen && frozen->sigma.size() != stages) {
    throw ConfigError("frozen constants need one bandwidth per stage");
  }
  if (frozen && options.adversarial && frozen->focal_exponent.size() != stages) {
    throw ConfigError("frozen constants need one focal exponent per stage");
  }

  BatchLoss out;
  try {
    const std::vector<Tensor> fs = model.features(params, batch.source_x);
    const std::vector<Tensor> ft = model.features(params, batch.target_x);
    std::vector<StageFeatures> pairs;
    pairs.reserve(stages);
    for (std::size_t k = 0; k < stages; ++k) pairs.push_back({fs[k], ft[k]});

    const MultiStageHardness hard = multi_stage_hardness(
        pairs, options.kernel,
        frozen ? std::span<const double>(frozen->sigma) : std::span<const double>());

    out.hardness = hard.report;
    out.constants.sigma = hard.sigma;
    out.breakdown.beta = options.beta;

    const double stage_weight =
        options.reduction == StageReduction::mean ? 1.0 / static_cast<double>(stages) : 1.0;
    auto reduce_stages = [&](const Tensor& summed) {
      return options.reduction == StageReduction::mean ? scale(summed, stage_weight) : summed;
    };

    const Tensor l_det = detection_stand_in_loss(model.classify(params, fs.back()), batch.source_y);
    out.breakdown.l_det = l_det.item();
    Tensor total = l_det;

    if (options.adversarial) {
      std::optional<Tensor> summed;
      for (std::size_t k = 0; k < stages; ++k) {
        double exponent = 0.0;
        if (frozen) {
          exponent = frozen->focal_exponent[k];
        } else if (options.exponent == FocalExponent::fixed) {
          exponent = options.fixed_exponent;
        } else if (options.exponent == FocalExponent::hardness) {
          exponent = hard.report.per_stage[k];
        }
        out.constants.focal_exponent.push_back(exponent);
        Tensor l = adversarial_stage_loss(mods[k], params, fs[k], ft[k], exponent,
                                          options.reverse_gradients);
        summed = summed ? add(*summed, l) : l;
      }
      const Tensor l_adv = reduce_stages(*summed);
      out.breakdown.l_adv = l_adv.item();
      out.breakdown.focal_exponents = out.constants.focal_exponent;
      total = add(total, l_adv);
    }

    if (options.hardness_loss) {
      Tensor summed = hard.gamma.front();
      for (std::size_t k = 1; k < stages; ++k) summed = add(summed, hard.gamma[k]);
      const Tensor l_gamma = reduce_stages(summed);
      out.breakdown.l_gamma = l_gamma.item();
      total = add(total, scale(l_gamma, options.beta));
    }

    out.breakdown.total = total.item();
    out.total = std::move(total);
  } catch (const NumericLossError&) {
    throw;
  } catch (const NumericError&) {
    throw NumericLossError(out.breakdown);
  }
  return out;
}

}  // namespace sga
