#include "sga/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

namespace sga {

using nlohmann::json;

// Variants --------------------------------------------------------------------

const char* to_string(Variant v) noexcept {
  switch (v) {
    case Variant::source_only: return "source-only";
    case Variant::baseline_a: return "baseline-a";
    case Variant::baseline_b: return "baseline-b";
    case Variant::sga_g: return "sga-g";
    case Variant::sga_l: return "sga-l";
    case Variant::sga_s: return "sga-s";
  }
  return "unknown";
}

Variant parse_variant(const std::string& name) {
  for (auto v : {Variant::source_only, Variant::baseline_a, Variant::baseline_b, Variant::sga_g,
                 Variant::sga_l, Variant::sga_s}) {
    if (name == to_string(v)) return v;
  }
  throw ConfigError("variant: unknown variant '" + name + "'");
}

bool uses_progressive_sampling(Variant v) noexcept { return v == Variant::sga_s; }

double LearningRateSchedule::at(std::size_t iteration, std::size_t total) const {
  const double boundary = drop_point * static_cast<double>(total);
  return static_cast<double>(iteration) < boundary ? initial : initial * drop_factor;
}

// Config ----------------------------------------------------------------------

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!ok.count(key)) {
      throw ConfigError(where + ": unknown key '" + key + "'");
    }
  }
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + key + ": wrong type");
  }
}

const char* to_string(BandwidthMode m) {
  return m == BandwidthMode::fixed ? "fixed" : "median-heuristic";
}

}  // namespace

json dataset_spec_to_json(const DatasetSpec& s) {
  return {{"family", to_string(s.family)},
          {"classes", s.classes},
          {"points_per_domain", s.points_per_domain},
          {"dimension", s.dimension},
          {"noise", s.noise},
          {"shift",
           {{"rotation_degrees", s.shift.rotation_degrees},
            {"translation", s.shift.translation},
            {"noise_sigma", s.shift.noise_sigma}}},
          {"seed", s.seed}};
}

DatasetSpec dataset_spec_from_json(const json& j) {
  check_keys(j, {"family", "classes", "points_per_domain", "dimension", "noise", "shift", "seed"},
             "dataset");
  DatasetSpec s;
  std::string family = to_string(s.family);
  read(j, "family", family, "dataset.");
  s.family = parse_family(family);
  read(j, "classes", s.classes, "dataset.");
  read(j, "points_per_domain", s.points_per_domain, "dataset.");
  read(j, "dimension", s.dimension, "dataset.");
  read(j, "noise", s.noise, "dataset.");
  read(j, "seed", s.seed, "dataset.");
  if (j.contains("shift")) {
    const auto& sh = j.at("shift");
    check_keys(sh, {"rotation_degrees", "translation", "noise_sigma"}, "dataset.shift");
    read(sh, "rotation_degrees", s.shift.rotation_degrees, "dataset.shift.");
    read(sh, "translation", s.shift.translation, "dataset.shift.");
    read(sh, "noise_sigma", s.shift.noise_sigma, "dataset.shift.");
  }
  s.validate();
  return s;
}

void TrainConfig::validate() const {
  if (dataset.has_value() == dataset_path.has_value()) {
    throw ConfigError("dataset: give exactly one of 'dataset' or 'dataset_path'");
  }
  if (dataset) dataset->validate();
  if (epochs == 0) throw ConfigError("epochs: must be at least 1");
  if (batch_size == 0) throw ConfigError("batch_size: must be at least 1");
  if (!(learning_rate.initial > 0.0)) throw ConfigError("learning_rate.initial: must be > 0");
  if (!(learning_rate.drop_factor > 0.0)) {
    throw ConfigError("learning_rate.drop_factor: must be > 0");
  }
  if (!(learning_rate.drop_point > 0.0 && learning_rate.drop_point <= 1.0)) {
    throw ConfigError("learning_rate.drop_point: must lie in (0, 1]");
  }
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw ConfigError("beta: must be >= 0");
  if (!(grl_lambda > 0.0) || !std::isfinite(grl_lambda)) {
    throw ConfigError("grl_lambda: must be > 0");
  }
  if (!(fixed_focal_exponent >= 0.0)) throw ConfigError("fixed_focal_exponent: must be >= 0");
  if (stages == 0) throw ConfigError("stages: must be at least 1");
  if (width == 0) throw ConfigError("width: must be at least 1");
  if (disc_hidden == 0) throw ConfigError("disc_hidden: must be at least 1");
  kernel.validate();
}

TrainConfig TrainConfig::from_json(const json& j) {
  check_keys(j,
             {"dataset", "dataset_path", "epochs", "steps_per_epoch", "batch_size", "learning_rate", "beta",
              "grl_lambda", "kernel", "variant", "stages", "width", "disc_hidden",
              "fixed_focal_exponent", "stage_reduction", "retrain", "seed"},
             "config");
  TrainConfig c;
  if (j.contains("dataset")) c.dataset = dataset_spec_from_json(j.at("dataset"));
  if (j.contains("dataset_path")) {
    std::string p;
    read(j, "dataset_path", p, "");
    c.dataset_path = p;
  }
  read(j, "epochs", c.epochs, "");
  read(j, "steps_per_epoch", c.steps_per_epoch, "");
  read(j, "batch_size", c.batch_size, "");
  if (j.contains("learning_rate")) {
    const auto& lr = j.at("learning_rate");
    check_keys(lr, {"initial", "drop_factor", "drop_point"}, "learning_rate");
    read(lr, "initial", c.learning_rate.initial, "learning_rate.");
    read(lr, "drop_factor", c.learning_rate.drop_factor, "learning_rate.");
    read(lr, "drop_point", c.learning_rate.drop_point, "learning_rate.");
  }
  read(j, "beta", c.beta, "");
  read(j, "grl_lambda", c.grl_lambda, "");
  if (j.contains("kernel")) {
    const auto& k = j.at("kernel");
    check_keys(k, {"mode", "sigma"}, "kernel");
    std::string mode = "median-heuristic";
    read(k, "mode", mode, "kernel.");
    if (mode == "median-heuristic") {
      c.kernel.mode = BandwidthMode::median_heuristic;
    } else if (mode == "fixed") {
      c.kernel.mode = BandwidthMode::fixed;
    } else {
      throw ConfigError("kernel.mode: unknown mode '" + mode + "'");
    }
    read(k, "sigma", c.kernel.fixed_sigma, "kernel.");
  }
  std::string variant = to_string(c.variant);
  read(j, "variant", variant, "");
  c.variant = parse_variant(variant);
  read(j, "stages", c.stages, "");
  read(j, "width", c.width, "");
  read(j, "disc_hidden", c.disc_hidden, "");
  read(j, "fixed_focal_exponent", c.fixed_focal_exponent, "");
  std::string reduction = "sum";
  read(j, "stage_reduction", reduction, "");
  if (reduction == "sum") {
    c.stage_reduction = StageReduction::sum;
  } else if (reduction == "mean") {
    c.stage_reduction = StageReduction::mean;
  } else {
    throw ConfigError("stage_reduction: expected 'sum' or 'mean'");
  }
  std::string retrain = "reset";
  read(j, "retrain", retrain, "");
  if (retrain == "reset") {
    c.retrain = RetrainMode::reset;
  } else if (retrain == "continue") {
    c.retrain = RetrainMode::continue_training;
  } else {
    throw ConfigError("retrain: expected 'reset' or 'continue'");
  }
  read(j, "seed", c.seed, "");
  c.validate();
  return c;
}

TrainConfig TrainConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  TrainConfig c = from_json(j);
  if (c.dataset_path && c.dataset_path->is_relative()) {
    c.dataset_path = path.parent_path() / *c.dataset_path;
  }
  return c;
}

json TrainConfig::to_json() const {
  json j;
  if (dataset) j["dataset"] = dataset_spec_to_json(*dataset);
  if (dataset_path) j["dataset_path"] = dataset_path->string();
  j["epochs"] = epochs;
  j["steps_per_epoch"] = steps_per_epoch;
  j["batch_size"] = batch_size;
  j["learning_rate"] = {{"initial", learning_rate.initial},
                        {"drop_factor", learning_rate.drop_factor},
                        {"drop_point", learning_rate.drop_point}};
  j["beta"] = beta;
  j["grl_lambda"] = grl_lambda;
  j["kernel"] = {{"mode", to_string(kernel.mode)}, {"sigma", kernel.fixed_sigma}};
  j["variant"] = to_string(variant);
  j["stages"] = stages;
  j["width"] = width;
  j["disc_hidden"] = disc_hidden;
  j["fixed_focal_exponent"] = fixed_focal_exponent;
  j["stage_reduction"] = stage_reduction == StageReduction::sum ? "sum" : "mean";
  j["retrain"] = retrain == RetrainMode::reset ? "reset" : "continue";
  j["seed"] = seed;
  return j;
}

LossOptions TrainConfig::loss_options() const {
  LossOptions o;
  o.beta = beta;
  o.kernel = kernel;
  o.reduction = stage_reduction;
  o.fixed_exponent = fixed_focal_exponent;
  o.adversarial = variant != Variant::source_only;
  o.hardness_loss = variant == Variant::sga_l || variant == Variant::sga_s;
  switch (variant) {
    case Variant::source_only:
    case Variant::baseline_a: o.exponent = FocalExponent::zero; break;
    case Variant::baseline_b: o.exponent = FocalExponent::fixed; break;
    default: o.exponent = FocalExponent::hardness; break;
  }
  return o;
}

// Records ---------------------------------------------------------------------

namespace {
json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }
}  // namespace

json IterationRecord::to_json() const {
  return {{"type", "iteration"},
          {"phase", phase == Phase::pre_epoch ? "pre" : "main"},
          {"epoch", epoch},
          {"step", step},
          {"gamma", gamma},
          {"avg_gamma", avg_gamma},
          {"alpha", optional_number(alpha)},
          {"selected", selected},
          {"focal_exponent", loss.focal_exponents},
          {"loss",
           {{"det", loss.l_det},
            {"adv", optional_number(loss.l_adv)},
            {"gamma", optional_number(loss.l_gamma)},
            {"beta", loss.beta},
            {"total", loss.total}}},
          {"lr", learning_rate}};
}

json EvalReport::to_json() const {
  return {{"source_accuracy", source_accuracy},
          {"target_accuracy", target_accuracy},
          {"domain_confusion_degree", domain_confusion_degree},
          {"final_epoch_mean_hardness", optional_number(final_epoch_mean_hardness)}};
}

void MetricsLog::write(const json& j) { *out_ << j.dump() << '\n'; }

void MetricsLog::header(const TrainConfig& config) {
  write({{"type", "header"},
         {"schema", kMetricsSchema},
         {"version", kMetricsVersion},
         {"config", config.to_json()}});
}

void MetricsLog::iteration(const IterationRecord& r) { write(r.to_json()); }

void MetricsLog::epoch(Phase phase, const EpochResult& e) {
  json j{{"type", "epoch"},
         {"phase", phase == Phase::pre_epoch ? "pre" : "main"},
         {"epoch", e.epoch},
         {"mean_hardness", e.mean_hardness},
         {"eval", e.eval.to_json()}};
  if (e.sampling) {
    j["sampling"] = {{"iterations", e.sampling->iterations},
                     {"selected", e.sampling->selected},
                     {"alpha", e.sampling->alpha},
                     {"all_gated_out", e.sampling->all_gated_out}};
  }
  write(j);
  if (e.sampling && e.sampling->all_gated_out) {
    write({{"type", "warning"},
           {"epoch", e.epoch},
           {"message", "every iteration of the epoch was gated out"},
           {"alpha", e.sampling->alpha}});
  }
}

// Evaluation ------------------------------------------------------------------

double domain_confusion_degree(std::span<const double> probabilities) {
  if (probabilities.empty()) return 0.0;
  std::size_t confused = 0;
  for (double p : probabilities) {
    if (std::max(p, 1.0 - p) <= 0.6) ++confused;
  }
  return static_cast<double>(confused) / static_cast<double>(probabilities.size());
}

EvalReport evaluate(const Model& model, const DomainDataset& data) {
  const auto& params = model.parameters();
  auto accuracy = [](const std::vector<int>& pred, const std::vector<int>& truth) {
    std::size_t hit = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hit += pred[i] == truth[i];
    return static_cast<double>(hit) / static_cast<double>(pred.size());
  };

  EvalReport r;
  r.source_accuracy = accuracy(model.predict(data.source_features()), data.source_labels());
  if (data.has_target_labels()) {
    r.target_accuracy =
        accuracy(model.predict(data.target_features()), data.target_labels_for_evaluation());
  }

  const SgaModule& last = model.modules().back();
  std::vector<double> probs;
  for (const Tensor* x : {&data.source_features(), &data.target_features()}) {
    const Tensor f = model.features(params, *x).back();
    const Tensor p = last.discriminate(params, f);
    probs.insert(probs.end(), p.data().begin(), p.data().end());
  }
  r.domain_confusion_degree = domain_confusion_degree(probs);
  return r;
}

// Training --------------------------------------------------------------------

DataSplit prepare_data(const TrainConfig& config) {
  config.validate();
  if (config.dataset) {
    DatasetSpec heldout = *config.dataset;
    heldout.seed = derive_seed(config.dataset->seed, 7);
    return {generate(*config.dataset), generate(heldout)};
  }
  return {load(*config.dataset_path), load(*config.dataset_path)};
}

namespace {

constexpr std::uint64_t kInitStream = 100;
constexpr std::uint64_t kOrderStream = 1000;

double mean_of(std::span<const double> v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

/// Endless stream of paired batches for one epoch: consecutive passes over
/// the data, each with its own shuffle.
class EpochStream {
 public:
  EpochStream(const DomainDataset& data, std::size_t batch, std::uint64_t seed)
      : data_(&data), batch_(batch), seed_(seed), it_(data, batch, seed) {}

  DomainBatch next() {
    if (auto b = it_.next()) return std::move(*b);
    ++pass_;
    it_ = BatchIterator(*data_, batch_, derive_seed(seed_, pass_));
    return *it_.next();
  }

 private:
  const DomainDataset* data_;
  std::size_t batch_;
  std::uint64_t seed_;
  std::uint64_t pass_ = 0;
  BatchIterator it_;
};

class Trainer {
 public:
  Trainer(const TrainConfig& config, const DataSplit& data, MetricsLog* log)
      : config_(config), data_(data), log_(log), options_(config.loss_options()) {
    Architecture arch;
    arch.input_dim = data.train.dimension();
    arch.classes = std::max<std::size_t>(2, data.train.classes());
    arch.stages = config.stages;
    arch.width = config.width;
    arch.disc_hidden = config.disc_hidden;
    arch.grl_lambda = config.grl_lambda;
    initial_ = Model::init(arch, derive_seed(config.seed, kInitStream));
    steps_ = config.steps_per_epoch > 0
                 ? config.steps_per_epoch
                 : BatchIterator(data.train, config.batch_size, 0).batches_per_epoch();
  }

  TrainResult run() {
    if (log_) log_->header(config_);
    TrainResult result{initial_, {}, std::nullopt, {}, {}};
    model_ = &result.model;
    records_ = &result.records;

    const bool sps = uses_progressive_sampling(config_.variant);
    if (sps) {
      EpochStream it(data_.train, config_.batch_size, derive_seed(config_.seed, kOrderStream));
      const std::size_t first = records_->size();
      result.pre_epoch = run_pre_epoch(sampler_, steps_, [&](std::size_t step) {
        return iterate(Phase::pre_epoch, 0, step, it.next(), config_.learning_rate.initial);
      });
      EpochResult pre{0, evaluate(*model_, data_.heldout), epoch_mean(first), result.pre_epoch};
      if (result.pre_epoch->all_gated_out) warn_all_gated(0);
      if (log_) log_->epoch(Phase::pre_epoch, pre);
      if (config_.retrain == RetrainMode::reset) result.model = initial_;
    }

    const std::size_t total = config_.epochs * steps_;
    std::size_t global = 0;
    for (std::size_t epoch = 0; epoch < config_.epochs; ++epoch) {
      // Epoch e of the main phase replays the order the pre-epoch used for e = 0.
      EpochStream it(data_.train, config_.batch_size,
                     derive_seed(config_.seed, kOrderStream + epoch));
      const std::size_t first = records_->size();
      for (std::size_t step = 0; step < steps_; ++step, ++global) {
        iterate(Phase::main, epoch, step, it.next(), config_.learning_rate.at(global, total));
      }
      EpochResult er{epoch, evaluate(*model_, data_.heldout), epoch_mean(first), std::nullopt};
      if (sps) {
        er.sampling = sampler_.epoch_end();
        if (er.sampling->all_gated_out) warn_all_gated(epoch + 1);
      }
      er.eval.final_epoch_mean_hardness = er.mean_hardness;
      if (log_) log_->epoch(Phase::main, er);
      result.epochs.push_back(er);
    }
    result.final_eval = result.epochs.back().eval;
    return result;
  }

 private:
  double iterate(Phase phase, std::size_t epoch, std::size_t step, const DomainBatch& batch,
                 double lr) {
    IterationRecord rec;
    rec.phase = phase;
    rec.epoch = epoch;
    rec.step = step;
    rec.learning_rate = lr;

    Tape tape;
    std::vector<Tensor> bound;
    bound.reserve(model_->parameters().size());
    for (const auto& p : model_->parameters()) bound.push_back(tape.variable(p));

    try {
      BatchLoss loss = batch_loss(batch, *model_, bound, options_);
      rec.gamma = loss.hardness.per_stage;
      rec.avg_gamma = loss.hardness.average;
      rec.loss = loss.breakdown;

      const bool gated = phase == Phase::main && uses_progressive_sampling(config_.variant);
      if (gated) {
        sampler_.record(rec.avg_gamma);
        const GateDecision d = sampler_.gate(rec.avg_gamma);
        rec.alpha = d.alpha_used;
        rec.selected = d.selected;
      }
      if (rec.selected) {
        const Gradients grads = tape.backward(loss.total);
        std::vector<Tensor> g;
        g.reserve(bound.size());
        for (const auto& b : bound) g.push_back(grads.wrt(b));
        sgd_step(model_->parameters(), g, lr);
      }
    } catch (const NumericLossError& e) {
      rec.loss = e.breakdown();
      throw TrainingNumericError(e.what(), rec);
    } catch (const NumericError& e) {
      throw TrainingNumericError(e.what(), rec);
    }

    if (log_) log_->iteration(rec);
    records_->push_back(rec);
    return rec.avg_gamma;
  }

  double epoch_mean(std::size_t first) const {
    std::vector<double> v;
    for (std::size_t i = first; i < records_->size(); ++i) v.push_back((*records_)[i].avg_gamma);
    return mean_of(v);
  }

  void warn_all_gated(std::size_t epoch) const {
    std::clog << "warning: every iteration of epoch " << epoch
              << " was gated out; the threshold is re-estimated from its records\n";
  }

  const TrainConfig& config_;
  const DataSplit& data_;
  MetricsLog* log_;
  LossOptions options_;
  Model initial_;
  std::size_t steps_ = 0;
  SpsState sampler_;
  Model* model_ = nullptr;
  std::vector<IterationRecord>* records_ = nullptr;
};

}  // namespace

TrainResult train(const TrainConfig& config, const DataSplit& data, MetricsLog* log) {
  config.validate();
  return Trainer(config, data, log).run();
}

TrainResult train(const TrainConfig& config, MetricsLog* log) {
  const DataSplit data = prepare_data(config);
  return train(config, data, log);
}

RunArtifacts train_to_directory(const TrainConfig& config, const std::filesystem::path& out_dir,
                                TrainResult* result) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  RunArtifacts art{out_dir / "metrics.jsonl", out_dir / "model.json"};
  std::ofstream out(art.metrics);
  if (!out) throw IoError("cannot open " + art.metrics.string() + " for writing");
  MetricsLog log(out);
  TrainResult r = train(config, &log);
  out.flush();
  if (!out) throw IoError("failed writing " + art.metrics.string());
  r.model.save(art.checkpoint);
  if (result) *result = std::move(r);
  return art;
}

// Comparison ------------------------------------------------------------------

std::size_t final_quarter_begin(std::size_t n) {
  const std::size_t len = std::max<std::size_t>(1, n / 4);
  return n >= len ? n - len : 0;
}

std::size_t first_quarter_end(std::size_t n) {
  return std::min(n, std::max<std::size_t>(1, n / 4));
}

namespace {

double least_squares_slope(std::span<const double> y) {
  const std::size_t n = y.size();
  if (n < 2) return 0.0;
  const double xm = (static_cast<double>(n) - 1.0) / 2.0;
  const double ym = mean_of(y);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = static_cast<double>(i) - xm;
    num += dx * (y[i] - ym);
    den += dx * dx;
  }
  return num / den;
}

}  // namespace

VariantSummary summarize(const std::string& label, Variant variant,
                         std::span<const TrainResult> runs) {
  if (runs.empty()) throw EmptyInputError("summarize: no runs");
  VariantSummary s;
  s.label = label;
  s.variant = variant;
  s.runs = runs.size();
  const std::size_t epochs = runs.front().epochs.size();
  s.confusion_curve.assign(epochs, 0.0);
  s.hardness_curve.assign(epochs, 0.0);
  const double w = 1.0 / static_cast<double>(runs.size());

  for (const auto& r : runs) {
    if (r.epochs.size() != epochs) throw ConfigError("summarize: runs differ in epoch count");
    std::vector<double> acc, hard;
    for (const auto& e : r.epochs) {
      acc.push_back(e.eval.target_accuracy);
      hard.push_back(e.mean_hardness);
    }
    s.mean_final_target_accuracy += w * acc.back();
    s.mean_avg_target_accuracy +=
        w * mean_of(std::span<const double>(acc).subspan(final_quarter_begin(epochs)));
    s.best_target_accuracy = std::max(s.best_target_accuracy, *std::max_element(acc.begin(), acc.end()));
    s.mean_hardness_slope += w * least_squares_slope(hard);
    for (std::size_t e = 0; e < epochs; ++e) {
      s.confusion_curve[e] += w * r.epochs[e].eval.domain_confusion_degree;
      s.hardness_curve[e] += w * hard[e];
    }

    std::vector<double> main;
    for (const auto& rec : r.records) {
      if (rec.phase == Phase::main) main.push_back(rec.avg_gamma);
    }
    std::span<const double> m(main);
    s.mean_first_quarter_hardness += w * mean_of(m.first(first_quarter_end(m.size())));
    s.mean_final_quarter_hardness += w * mean_of(m.subspan(final_quarter_begin(m.size())));
  }
  return s;
}

std::vector<VariantSummary> compare_variants(std::span<const TrainConfig> configs,
                                             std::span<const std::uint64_t> seeds,
                                             std::vector<ComparisonRun>* runs) {
  if (configs.size() < 2) throw ConfigError("compare: need at least 2 configs");
  if (seeds.empty()) throw ConfigError("compare: need at least 1 seed");
  auto dataset_key = [](const TrainConfig& c) {
    return c.dataset ? dataset_spec_to_json(*c.dataset).dump()
                     : "path:" + c.dataset_path->lexically_normal().string();
  };
  for (const auto& c : configs) c.validate();
  const std::string key = dataset_key(configs.front());
  for (const auto& c : configs) {
    if (dataset_key(c) != key) throw ConfigError("compare: configs use different datasets");
  }

  const DataSplit data = prepare_data(configs.front());
  std::map<std::string, int> label_uses;
  std::vector<VariantSummary> rows;
  for (const auto& base : configs) {
    std::string label = to_string(base.variant);
    if (label_uses[label]++ > 0) label += "#" + std::to_string(label_uses[label]);
    std::vector<TrainResult> results;
    for (auto seed : seeds) {
      TrainConfig c = base;
      c.seed = seed;
      results.push_back(train(c, data));
      if (runs) runs->push_back({label, seed, results.back()});
    }
    rows.push_back(summarize(label, base.variant, results));
  }
  return rows;
}

namespace {
std::string join_curve(std::span<const double> v) {
  std::ostringstream os;
  char buf[32];
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.6g", v[i]);
    os << (i ? ";" : "") << buf;
  }
  return os.str();
}
}  // namespace

void write_summary_csv(std::span<const VariantSummary> rows, std::ostream& out) {
  out << "label,variant,runs,mean_final_target_accuracy,mean_avg_target_accuracy,"
         "best_target_accuracy,mean_hardness_slope,first_quarter_hardness,"
         "final_quarter_hardness,confusion_curve,hardness_curve\n";
  char buf[512];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%s,%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,",
                  r.label.c_str(), to_string(r.variant), r.runs, r.mean_final_target_accuracy,
                  r.mean_avg_target_accuracy, r.best_target_accuracy, r.mean_hardness_slope,
                  r.mean_first_quarter_hardness, r.mean_final_quarter_hardness);
    out << buf << join_curve(r.confusion_curve) << ',' << join_curve(r.hardness_curve) << '\n';
  }
}

std::string format_summary_table(std::span<const VariantSummary> rows) {
  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-14s %4s %9s %9s %9s %12s %10s\n", "variant", "runs",
                "final", "avg", "best", "hard-slope", "confusion");
  os << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-14s %4zu %8.2f%% %8.2f%% %8.2f%% %12.3e %10.3f\n",
                  r.label.c_str(), r.runs, 100.0 * r.mean_final_target_accuracy,
                  100.0 * r.mean_avg_target_accuracy, 100.0 * r.best_target_accuracy,
                  r.mean_hardness_slope,
                  r.confusion_curve.empty() ? 0.0 : r.confusion_curve.back());
    os << buf;
  }
  return os.str();
}

}  // namespace sga
