#include "sga/model.hpp"

#include <cmath>
#include <fstream>
#include <random>

namespace sga {

namespace {
constexpr const char* kCheckpointFormat = "sga-checkpoint";
constexpr int kCheckpointVersion = 1;
}  // namespace

void Architecture::validate() const {
  if (input_dim == 0) throw ConfigError("input_dim: must be positive");
  if (classes < 2) throw ConfigError("classes: need at least 2");
  if (stages == 0) throw ConfigError("stages: need at least one stage");
  if (width == 0) throw ConfigError("width: must be positive");
  if (disc_hidden == 0) throw ConfigError("disc_hidden: must be positive");
  if (!(grl_lambda > 0.0) || !std::isfinite(grl_lambda)) {
    throw ConfigError("grl_lambda: must be positive");
  }
}

Tensor Linear::forward(std::span<const Tensor> params, const Tensor& x) const {
  return add_rowwise(matmul(x, params[weight]), params[bias]);
}

Tensor SgaModule::discriminate(std::span<const Tensor> params, const Tensor& features) const {
  return sigmoid(output.forward(params, relu(hidden.forward(params, features))));
}

std::size_t Model::add_parameter(std::string name, Tensor value) {
  names_.push_back(std::move(name));
  params_.push_back(std::move(value));
  return params_.size() - 1;
}

Linear Model::add_linear(const std::string& name, std::size_t in, std::size_t out) {
  Linear l;
  l.weight = add_parameter(name + ".weight", Tensor::zeros({in, out}));
  l.bias = add_parameter(name + ".bias", Tensor::zeros({out}));
  return l;
}

Model Model::init(const Architecture& arch, std::uint64_t seed) {
  arch.validate();
  Model m;
  m.arch_ = arch;
  std::size_t in = arch.input_dim;
  for (std::size_t s = 0; s < arch.stages; ++s) {
    m.stages_.push_back(m.add_linear("generator.stage" + std::to_string(s + 1), in, arch.width));
    in = arch.width;
  }
  m.head_ = m.add_linear("head", arch.width, arch.classes);
  for (std::size_t s = 0; s < arch.stages; ++s) {
    SgaModule mod;
    mod.stage_index = s;
    const std::string prefix = "sga" + std::to_string(s + 1);
    mod.hidden = m.add_linear(prefix + ".hidden", arch.width, arch.disc_hidden);
    mod.output = m.add_linear(prefix + ".output", arch.disc_hidden, 1);
    mod.grl_lambda = arch.grl_lambda;
    m.modules_.push_back(mod);
  }

  std::mt19937_64 rng(seed);
  for (auto& p : m.params_) {
    if (p.rank() != 2) continue;  // biases stay zero
    const double bound = 1.0 / std::sqrt(static_cast<double>(p.rows()));
    std::uniform_real_distribution<double> dist(-bound, bound);
    std::vector<double> w(p.size());
    for (auto& v : w) v = dist(rng);
    p = Tensor(p.shape(), std::move(w));
  }
  return m;
}

std::vector<std::size_t> Model::generator_parameters() const {
  std::vector<std::size_t> idx;
  for (const auto& l : stages_) {
    idx.push_back(l.weight);
    idx.push_back(l.bias);
  }
  return idx;
}

std::vector<Tensor> Model::features(std::span<const Tensor> params, const Tensor& x) const {
  std::vector<Tensor> out;
  out.reserve(stages_.size());
  Tensor h = x;
  for (const auto& l : stages_) {
    h = tanh(l.forward(params, h));
    out.push_back(h);
  }
  return out;
}

Tensor Model::classify(std::span<const Tensor> params, const Tensor& last_stage) const {
  return head_.forward(params, last_stage);
}

std::vector<int> Model::predict(const Tensor& x) const {
  const Tensor logits = classify(params_, features(params_, x).back());
  std::vector<int> out(logits.rows());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < logits.cols(); ++c) {
      if (logits.at(i, c) > logits.at(i, best)) best = c;
    }
    out[i] = static_cast<int>(best);
  }
  return out;
}

nlohmann::json Model::to_json() const {
  nlohmann::json params = nlohmann::json::array();
  for (std::size_t i = 0; i < params_.size(); ++i) {
    params.push_back({{"name", names_[i]},
                      {"shape", params_[i].shape()},
                      {"data", params_[i].values()}});
  }
  return {{"format", kCheckpointFormat},
          {"version", kCheckpointVersion},
          {"architecture",
           {{"input_dim", arch_.input_dim},
            {"classes", arch_.classes},
            {"stages", arch_.stages},
            {"width", arch_.width},
            {"disc_hidden", arch_.disc_hidden},
            {"grl_lambda", arch_.grl_lambda}}},
          {"parameters", std::move(params)}};
}

Model Model::from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != kCheckpointFormat) throw ParseError("not an sga checkpoint");
    if (j.at("version") != kCheckpointVersion) {
      throw ParseError("unsupported checkpoint version " + j.at("version").dump());
    }
    const auto& a = j.at("architecture");
    Architecture arch;
    arch.input_dim = a.at("input_dim").get<std::size_t>();
    arch.classes = a.at("classes").get<std::size_t>();
    arch.stages = a.at("stages").get<std::size_t>();
    arch.width = a.at("width").get<std::size_t>();
    arch.disc_hidden = a.at("disc_hidden").get<std::size_t>();
    arch.grl_lambda = a.at("grl_lambda").get<double>();
    Model m = init(arch, 0);

    const auto& params = j.at("parameters");
    if (params.size() != m.params_.size()) {
      throw ParseError("checkpoint holds " + std::to_string(params.size()) +
                       " tensors, architecture needs " + std::to_string(m.params_.size()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto& p = params[i];
      if (p.at("name").get<std::string>() != m.names_[i]) {
        throw ParseError("checkpoint tensor " + std::to_string(i) + " is '" +
                         p.at("name").get<std::string>() + "', expected '" + m.names_[i] + "'");
      }
      auto shape = p.at("shape").get<Shape>();
      if (shape != m.params_[i].shape()) {
        throw ParseError("checkpoint tensor '" + m.names_[i] + "' has shape " +
                         shape_to_string(shape));
      }
      m.params_[i] = Tensor(std::move(shape), p.at("data").get<std::vector<double>>());
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed checkpoint: ") + e.what());
  }
}

void Model::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << to_json().dump() << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

Model Model::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return from_json(j);
}

}  // namespace sga
