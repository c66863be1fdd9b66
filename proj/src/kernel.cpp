#include "sga/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sga {

void KernelConfig::validate() const {
  if (mode == BandwidthMode::fixed && !(fixed_sigma > 0.0 && std::isfinite(fixed_sigma))) {
    throw ConfigError("kernel.sigma must be positive in fixed bandwidth mode");
  }
}

namespace {

void require_batch(const Tensor& t, const char* what) {
  if (t.rank() != 2) {
    throw ShapeError(std::string(what) + " must be a matrix, got shape " +
                     shape_to_string(t.shape()));
  }
  if (t.rows() == 0) throw EmptyInputError(std::string(what) + " batch is empty");
}

void require_sigma(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw ConfigError("RBF bandwidth must be positive, got " + std::to_string(sigma));
  }
}

// Total order on batches used to orient the estimator so that swapping its
// arguments reproduces the same floating-point operations.
bool precedes(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows()) return a.rows() < b.rows();
  const auto& x = a.values();
  const auto& y = b.values();
  return std::lexicographical_compare(x.begin(), x.end(), y.begin(), y.end());
}

}  // namespace

Tensor rbf_kernel_matrix(const Tensor& a, const Tensor& b, double sigma) {
  require_sigma(sigma);
  return exp(scale(pairwise_sq_dist(a, b), -1.0 / (2.0 * sigma * sigma)));
}

double median_heuristic_sigma(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.cols()) {
    throw ShapeError("median_heuristic_sigma: incompatible shapes " +
                     shape_to_string(a.shape()) + " and " + shape_to_string(b.shape()));
  }
  const std::size_t n = a.rows() + b.rows();
  const std::size_t d = a.cols();
  if (n < 2) throw ConfigError("median heuristic needs at least 2 pooled points");

  auto row = [&](std::size_t i) {
    return i < a.rows() ? a.data().subspan(i * d, d) : b.data().subspan((i - a.rows()) * d, d);
  };
  std::vector<double> sq;
  sq.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    const auto ri = row(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto rj = row(j);
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = ri[k] - rj[k];
        s += diff * diff;
      }
      sq.push_back(s);
    }
  }
  std::sort(sq.begin(), sq.end());
  const std::size_t m = sq.size();
  const double median = m % 2 ? sq[m / 2] : 0.5 * (sq[m / 2 - 1] + sq[m / 2]);
  if (median <= 0.0) return 1.0;
  return std::sqrt(median / 2.0);
}

double select_bandwidth(const Tensor& source, const Tensor& target, const KernelConfig& cfg) {
  cfg.validate();
  if (cfg.mode == BandwidthMode::fixed) return cfg.fixed_sigma;
  return median_heuristic_sigma(source.detach(), target.detach());
}

Tensor mmd_hardness(const Tensor& source, const Tensor& target, double sigma) {
  require_batch(source, "source");
  require_batch(target, "target");
  if (source.cols() != target.cols()) {
    throw ShapeError("mmd_hardness: feature dimensions differ: " +
                     shape_to_string(source.shape()) + " vs " +
                     shape_to_string(target.shape()));
  }
  require_sigma(sigma);

  const bool swap = precedes(target, source);
  const Tensor& fs = swap ? target : source;
  const Tensor& ft = swap ? source : target;
  const double ns = static_cast<double>(fs.rows());
  const double nt = static_cast<double>(ft.rows());

  const Tensor within_s = scale(sum(rbf_kernel_matrix(fs, fs, sigma)), 1.0 / (ns * ns));
  const Tensor within_t = scale(sum(rbf_kernel_matrix(ft, ft, sigma)), 1.0 / (nt * nt));
  const Tensor cross = scale(sum(rbf_kernel_matrix(fs, ft, sigma)), 2.0 / (ns * nt));
  return sqrt_clamped(sub(add(within_s, within_t), cross));
}

Tensor mmd_hardness(const Tensor& source, const Tensor& target, const KernelConfig& cfg) {
  require_batch(source, "source");
  require_batch(target, "target");
  return mmd_hardness(source, target, select_bandwidth(source, target, cfg));
}

HardnessReport make_report(std::vector<double> per_stage) {
  if (per_stage.empty()) throw EmptyInputError("hardness report needs at least one stage");
  double s = 0.0;
  for (double g : per_stage) s += g;
  HardnessReport r;
  r.average = s / static_cast<double>(per_stage.size());
  r.per_stage = std::move(per_stage);
  return r;
}

MultiStageHardness multi_stage_hardness(std::span<const StageFeatures> stages,
                                        const KernelConfig& cfg,
                                        std::span<const double> sigma_override) {
  if (stages.empty()) throw EmptyInputError("multi_stage_hardness: no stages");
  if (!sigma_override.empty() && sigma_override.size() != stages.size()) {
    throw ConfigError("multi_stage_hardness: " + std::to_string(sigma_override.size()) +
                      " bandwidths for " + std::to_string(stages.size()) + " stages");
  }
  MultiStageHardness out;
  std::vector<double> values;
  for (std::size_t k = 0; k < stages.size(); ++k) {
    try {
      const auto& st = stages[k];
      const double sigma =
          sigma_override.empty() ? select_bandwidth(st.source, st.target, cfg) : sigma_override[k];
      Tensor g = mmd_hardness(st.source, st.target, sigma);
      values.push_back(g.item());
      out.gamma.push_back(std::move(g));
      out.sigma.push_back(sigma);
    } catch (const Error& e) {
      throw Error(e.kind(), "stage " + std::to_string(k) + ": " + e.what());
    }
  }
  out.report = make_report(std::move(values));
  return out;
}

}  // namespace sga
