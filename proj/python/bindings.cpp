#include <optional>
#include <string>
#include <vector>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "json.hpp"

#include "sga/alignment.hpp"
#include "sga/data.hpp"
#include "sga/kernel.hpp"
#include "sga/model.hpp"
#include "sga/sps.hpp"
#include "sga/train.hpp"

namespace py = pybind11;
using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

namespace {

sga::Tensor to_tensor(const Array& a) {
  if (a.ndim() != 2) throw sga::ShapeError("expected a 2-D array, got " + std::to_string(a.ndim()) + "-D");
  const auto rows = static_cast<std::size_t>(a.shape(0));
  const auto cols = static_cast<std::size_t>(a.shape(1));
  return sga::Tensor({rows, cols}, std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const sga::Tensor& t) {
  Array out({t.rows(), t.cols()});
  std::copy(t.values().begin(), t.values().end(), out.mutable_data());
  return out;
}

py::dict gate_dict(const sga::GateDecision& d) {
  py::dict out;
  out["selected"] = d.selected;
  out["avg_gamma"] = d.avg_gamma;
  out["alpha"] = d.alpha_used;
  return out;
}

py::dict summary_dict(const sga::EpochSummary& s) {
  py::dict out;
  out["epoch_index"] = s.epoch_index;
  out["iterations"] = s.iterations;
  out["selected"] = s.selected;
  out["alpha"] = s.alpha;
  out["all_gated_out"] = s.all_gated_out;
  return out;
}

nlohmann::json result_json(const sga::TrainResult& r) {
  nlohmann::json epochs = nlohmann::json::array();
  for (const auto& e : r.epochs) {
    nlohmann::json row = e.eval.to_json();
    row["epoch"] = e.epoch;
    row["mean_hardness"] = e.mean_hardness;
    if (e.sampling) {
      row["alpha"] = e.sampling->alpha;
      row["selected"] = e.sampling->selected;
    }
    epochs.push_back(row);
  }
  return {{"iterations", r.records.size()},
          {"epochs", epochs},
          {"final", r.final_eval.to_json()}};
}

}  // namespace

PYBIND11_MODULE(_sga, m) {
  m.doc() = "Hardness-aware adversarial domain alignment (C++ core)";

  auto base = py::register_exception<sga::Error>(m, "SgaError", PyExc_RuntimeError);
  py::register_exception<sga::ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<sga::ShapeError>(m, "ShapeError", base.ptr());
  py::register_exception<sga::DomainError>(m, "DomainError", base.ptr());
  py::register_exception<sga::NumericError>(m, "NumericError", base.ptr());
  py::register_exception<sga::EmptyInputError>(m, "EmptyInputError", base.ptr());
  py::register_exception<sga::DataError>(m, "DataError", base.ptr());
  py::register_exception<sga::StateError>(m, "StateError", base.ptr());
  py::register_exception<sga::ParseError>(m, "ParseError", base.ptr());
  py::register_exception<sga::IoError>(m, "IoError", base.ptr());

  m.def("rbf_kernel_matrix",
        [](const Array& a, const Array& b, double sigma) {
          return to_array(sga::rbf_kernel_matrix(to_tensor(a), to_tensor(b), sigma));
        },
        py::arg("a"), py::arg("b"), py::arg("sigma"));

  m.def("median_heuristic_sigma",
        [](const Array& a, const Array& b) {
          return sga::median_heuristic_sigma(to_tensor(a), to_tensor(b));
        },
        py::arg("a"), py::arg("b"));

  m.def("mmd_hardness",
        [](const Array& source, const Array& target, std::optional<double> sigma) {
          const sga::Tensor s = to_tensor(source), t = to_tensor(target);
          if (sigma) return sga::mmd_hardness(s, t, *sigma).item();
          return sga::mmd_hardness(s, t, sga::KernelConfig{}).item();
        },
        py::arg("source"), py::arg("target"), py::arg("sigma") = py::none(),
        "Biased RBF MMD between two feature batches; sigma defaults to the median heuristic.");

  m.def("focal_domain_loss",
        [](const std::vector<double>& p, int domain_label, double gamma) {
          return sga::focal_domain_loss(sga::Tensor::vector(p), domain_label, gamma).item();
        },
        py::arg("p"), py::arg("domain_label"), py::arg("gamma"));

  m.def("domain_confusion_degree",
        [](const std::vector<double>& p) { return sga::domain_confusion_degree(p); },
        py::arg("probabilities"));

  m.def("median", [](const std::vector<double>& v) { return sga::median(v); }, py::arg("values"));

  py::class_<sga::SpsState>(m, "SpsState")
      .def(py::init<>())
      .def_property_readonly("gated",
                             [](const sga::SpsState& s) { return s.mode() == sga::SpsMode::gated; })
      .def_property_readonly("alpha", &sga::SpsState::alpha)
      .def_property_readonly("epoch_index", &sga::SpsState::epoch_index)
      .def_property_readonly("records", &sga::SpsState::records)
      .def("record", &sga::SpsState::record, py::arg("avg_gamma"))
      .def("gate", [](sga::SpsState& s, double g) { return gate_dict(s.gate(g)); },
           py::arg("avg_gamma"))
      .def("epoch_end", [](sga::SpsState& s) { return summary_dict(s.epoch_end()); });

  m.def("_generate_dataset",
        [](const std::string& spec_json) {
          const auto spec = sga::dataset_spec_from_json(nlohmann::json::parse(spec_json));
          const sga::DomainDataset data = sga::generate(spec);
          py::dict out;
          out["source_x"] = to_array(data.source_features());
          out["source_y"] = data.source_labels();
          out["target_x"] = to_array(data.target_features());
          out["target_y"] = data.target_labels_for_evaluation();
          return out;
        },
        py::arg("spec_json"));

  m.def("_train",
        [](const std::string& config_json, std::optional<std::string> out_dir) {
          const auto config = sga::TrainConfig::from_json(nlohmann::json::parse(config_json));
          sga::TrainResult result;
          {
            py::gil_scoped_release release;
            if (out_dir) {
              sga::train_to_directory(config, *out_dir, &result);
            } else {
              result = sga::train(config);
            }
          }
          return result_json(result).dump();
        },
        py::arg("config_json"), py::arg("out_dir") = py::none());

  m.def("_evaluate",
        [](const std::string& model_path, const std::string& data_path) {
          const sga::Model model = sga::Model::load(model_path);
          return sga::evaluate(model, sga::load(data_path)).to_json().dump();
        },
        py::arg("model_path"), py::arg("data_path"));

  m.def("_save_dataset",
        [](const std::string& spec_json, const std::string& path) {
          sga::save(sga::generate(sga::dataset_spec_from_json(nlohmann::json::parse(spec_json))),
                    path);
        },
        py::arg("spec_json"), py::arg("path"));
}
