#pragma once

// Multi-stage feed-forward feature generator, source task head, and one
// domain discriminator (SGA module) per generator stage.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "sga/autodiff.hpp"

namespace sga {

struct Architecture {
  std::size_t input_dim = 2;
  std::size_t classes = 2;
  std::size_t stages = 3;
  std::size_t width = 16;         // generator stage width
  std::size_t disc_hidden = 32;   // discriminator hidden width
  double grl_lambda = 1.0;

  void validate() const;
};

/// Indices of a dense layer's weight [in x out] and bias [out] in the
/// parameter list.
struct Linear {
  std::size_t weight = 0;
  std::size_t bias = 0;

  Tensor forward(std::span<const Tensor> params, const Tensor& x) const;
};

/// Domain discriminator bound to one generator stage:
/// features -> hidden (relu) -> 1 (sigmoid).
struct SgaModule {
  std::size_t stage_index = 0;
  Linear hidden;
  Linear output;
  double grl_lambda = 1.0;

  /// Domain probability p(source) per row, shape [n x 1]. No reversal node.
  Tensor discriminate(std::span<const Tensor> params, const Tensor& features) const;
};

class Model {
 public:
  /// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero.
  static Model init(const Architecture& arch, std::uint64_t seed);

  const Architecture& architecture() const noexcept { return arch_; }
  const std::vector<SgaModule>& modules() const noexcept { return modules_; }

  std::vector<Tensor>& parameters() noexcept { return params_; }
  const std::vector<Tensor>& parameters() const noexcept { return params_; }
  const std::vector<std::string>& parameter_names() const noexcept { return names_; }
  /// Indices of the generator's parameters (the stages only).
  std::vector<std::size_t> generator_parameters() const;

  /// Output of every generator stage (tanh activations), first to last.
  std::vector<Tensor> features(std::span<const Tensor> params, const Tensor& x) const;
  /// Class logits from the last stage's features.
  Tensor classify(std::span<const Tensor> params, const Tensor& last_stage) const;

  /// Predicted class per row using the stored parameters.
  std::vector<int> predict(const Tensor& x) const;

  nlohmann::json to_json() const;
  static Model from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static Model load(const std::filesystem::path& path);

 private:
  std::size_t add_parameter(std::string name, Tensor value);
  Linear add_linear(const std::string& name, std::size_t in, std::size_t out);

  Architecture arch_;
  std::vector<Tensor> params_;
  std::vector<std::string> names_;
  std::vector<Linear> stages_;
  Linear head_;
  std::vector<SgaModule> modules_;
};

}  // namespace sga
