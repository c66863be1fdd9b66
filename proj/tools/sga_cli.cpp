// Command-line front end: dataset generation, training, evaluation and
// multi-seed variant comparison.
//
// Exit codes: 0 success, 2 config error, 3 numeric error, 4 I/O error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "sga/data.hpp"
#include "sga/model.hpp"
#include "sga/train.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIo = 4;

int exit_code(sga::ErrorKind kind) {
  switch (kind) {
    case sga::ErrorKind::numeric: return kExitNumeric;
    case sga::ErrorKind::io:
    case sga::ErrorKind::parse: return kExitIo;
    default: return kExitConfig;
  }
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw sga::IoError("cannot open " + path.string());
  try {
    nlohmann::json j;
    in >> j;
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw sga::ConfigError(path.string() + ": " + e.what());
  }
}

int cmd_gen_data(const std::string& spec_path, const std::string& out_path) {
  const sga::DatasetSpec spec = sga::dataset_spec_from_json(read_json(spec_path));
  sga::save(sga::generate(spec), out_path);
  std::cout << "wrote " << out_path << " (" << spec.points_per_domain
            << " points per domain)\n";
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& out_dir) {
  const sga::TrainConfig config = sga::TrainConfig::load(config_path);
  sga::TrainResult result;
  const auto art = sga::train_to_directory(config, out_dir, &result);
  std::cout << "variant " << sga::to_string(config.variant) << ": "
            << result.records.size() << " iterations\n"
            << result.final_eval.to_json().dump(2) << '\n'
            << "metrics: " << art.metrics.string() << '\n'
            << "checkpoint: " << art.checkpoint.string() << '\n';
  return 0;
}

int cmd_eval(const std::string& model_path, const std::string& data_path) {
  const sga::Model model = sga::Model::load(model_path);
  const sga::DomainDataset data = sga::load(data_path);
  if (data.dimension() != model.architecture().input_dim) {
    throw sga::ConfigError("dataset has " + std::to_string(data.dimension()) +
                           " features, model expects " +
                           std::to_string(model.architecture().input_dim));
  }
  std::cout << sga::evaluate(model, data).to_json().dump(2) << '\n';
  return 0;
}

int cmd_compare(const std::vector<std::string>& config_paths,
                const std::vector<std::uint64_t>& seeds, const std::string& csv_path) {
  std::vector<sga::TrainConfig> configs;
  for (const auto& p : config_paths) configs.push_back(sga::TrainConfig::load(p));
  const auto rows = sga::compare_variants(configs, seeds);
  std::cout << sga::format_summary_table(rows);
  std::ofstream csv(csv_path);
  if (!csv) throw sga::IoError("cannot open " + csv_path + " for writing");
  sga::write_summary_csv(rows, csv);
  std::cout << "summary: " << csv_path << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-guided adaptation: hardness-aware adversarial domain alignment"};
  app.require_subcommand(1);

  std::string spec_path, data_out;
  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic two-domain dataset as CSV");
  gen->add_option("--spec", spec_path, "Dataset spec (JSON)")->required();
  gen->add_option("--out", data_out, "Output CSV file")->required();

  std::string config_path, out_dir;
  auto* tr = app.add_subcommand("train", "Train one variant and write metrics and a checkpoint");
  tr->add_option("--config", config_path, "Training config (JSON)")->required();
  tr->add_option("--out", out_dir, "Output directory")->required();

  std::string model_path, data_path;
  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset CSV");
  ev->add_option("--model", model_path, "Checkpoint (model.json)")->required();
  ev->add_option("--data", data_path, "Dataset CSV with held-out target labels")->required();

  std::vector<std::string> config_paths;
  std::vector<std::uint64_t> seeds;
  std::string csv_path = "summary.csv";
  auto* cmp = app.add_subcommand("compare", "Train several variants over several seeds");
  cmp->add_option("--configs", config_paths, "Training configs (JSON), one per variant")
      ->required();
  cmp->add_option("--seeds", seeds, "Seeds, e.g. --seeds 1 2 3 or --seeds 1,2,3")
      ->required()
      ->delimiter(',');
  cmp->add_option("--csv", csv_path, "Summary CSV path")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*gen) return cmd_gen_data(spec_path, data_out);
    if (*tr) return cmd_train(config_path, out_dir);
    if (*ev) return cmd_eval(model_path, data_path);
    if (*cmp) return cmd_compare(config_paths, seeds, csv_path);
  } catch (const sga::TrainingNumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n'
              << "at iteration: " << e.record().to_json().dump() << '\n';
    return kExitNumeric;
  } catch (const sga::Error& e) {
    std::cerr << sga::to_string(e.kind()) << ": " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kExitIo;
  }
  return 0;
}
