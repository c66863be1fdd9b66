#pragma once

#include <algorithm>
#include <functional>
#include <span>
#include <vector>

#include "oracles.hpp"
#include "sga/autodiff.hpp"

namespace gradcheck {

using Builder = std::function<sga::Tensor(std::span<const sga::Tensor>)>;

/// Worst relative error between reverse-mode gradients of `build` and central
/// differences, over every element of every input.
inline double worst_error(const std::vector<sga::Tensor>& inputs, const Builder& build,
                          double h = 1e-5, double floor = 1e-8) {
  sga::Tape tape;
  std::vector<sga::Tensor> vars;
  for (const auto& x : inputs) vars.push_back(tape.variable(x));
  const sga::Gradients grads = tape.backward(build(vars));

  double worst = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const auto analytic = grads.wrt(vars[k]).values();
    auto f = [&](const std::vector<double>& values) {
      std::vector<sga::Tensor> plain = inputs;
      plain[k] = sga::Tensor(inputs[k].shape(), values);
      return build(plain).item();
    };
    for (std::size_t i = 0; i < inputs[k].size(); ++i) {
      const double fd = oracle::central_difference(f, inputs[k].values(), i, h);
      worst = std::max(worst, oracle::relative_error(analytic[i], fd, floor));
    }
  }
  return worst;
}

}  // namespace gradcheck
