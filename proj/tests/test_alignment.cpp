#include <cmath>
#include <random>

#include "composite_audit.hpp"
#include "doctest.h"
#include "oracles.hpp"
#include "sga/alignment.hpp"

using namespace sga;

namespace {

DomainBatch small_batch(std::uint64_t seed, std::size_t n = 6) {
  DatasetSpec spec;
  spec.points_per_domain = 40;
  spec.shift.rotation_degrees = 30;
  spec.seed = seed;
  const DomainDataset data = generate(spec);
  BatchIterator it(data, n, seed);
  return *it.next();
}

Architecture small_arch() {
  Architecture a;
  a.stages = 3;
  a.width = 5;
  a.disc_hidden = 4;
  return a;
}

}  // namespace

TEST_CASE("focal loss examples") {
  CHECK(focal_domain_loss(Tensor::vector({0.5}), 1, 2.0).item() ==
        doctest::Approx(0.25 * std::log(2.0)).epsilon(1e-14));
  CHECK(focal_domain_loss(Tensor::vector({1.0 - 1e-9}), 1, 0.0).item() < 1e-8);
  CHECK(focal_domain_loss(Tensor::vector({1e-9}), 0, 3.0).item() < 1e-8);
  CHECK(focal_domain_loss(Tensor::vector({0.0, 1.0}), 1, 0.0).item() ==
        doctest::Approx(-0.5 * std::log(1e-12)));
  CHECK_THROWS_AS(focal_domain_loss(Tensor::vector({0.5}), 1, -0.1), ConfigError);
  CHECK_THROWS_AS(focal_domain_loss(Tensor::vector({0.5}), 2, 1.0), ConfigError);
}

TEST_CASE("focal loss at zero exponent is cross-entropy") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.001, 0.999);
  for (int trial = 0; trial < 100; ++trial) {
    const double p = u(rng);
    const int y = static_cast<int>(rng() % 2);
    CHECK(std::abs(focal_domain_loss(Tensor::vector({p}), y, 0.0).item() -
                   oracle::binary_cross_entropy(p, y)) <= 1e-12);
  }
}

TEST_CASE("focal loss is non-increasing in the exponent") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor p = Tensor::vector({u(rng), u(rng), u(rng)});
    double previous = focal_domain_loss(p, 1, 0.0).item();
    for (double g = 0.25; g <= 6.0; g += 0.25) {
      const double current = focal_domain_loss(p, 1, g).item();
      CHECK(current <= previous);
      previous = current;
    }
  }
}

TEST_CASE("cross-entropy stand-in") {
  CHECK(detection_stand_in_loss(Tensor::matrix({{0.3, 0.3}, {-1, -1}}), std::vector<int>{0, 1})
            .item() == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(detection_stand_in_loss(Tensor::matrix({{60, -60}}), std::vector<int>{0}).item() < 1e-12);

  std::mt19937_64 rng(7);
  const auto logits = oracle::random_matrix(rng, 4, 3);
  const std::vector<int> labels{2, 0, 1, 2};
  CHECK(std::abs(detection_stand_in_loss(oracle::to_tensor(logits), labels).item() -
                 oracle::softmax_cross_entropy(logits, labels)) <= 1e-12);

  CHECK_THROWS_AS(detection_stand_in_loss(Tensor::zeros({2, 2}), std::vector<int>{0, 2}),
                  DataError);
  CHECK_THROWS_AS(detection_stand_in_loss(Tensor::zeros({2, 2}), std::vector<int>{-1, 0}),
                  DataError);
}

TEST_CASE("adversarial stage loss with an undecided discriminator") {
  Model model = Model::init(small_arch(), 1);
  // Zero the discriminator output layer so p = 0.5 everywhere.
  const SgaModule& m = model.modules()[0];
  auto& params = model.parameters();
  params[m.output.weight] = Tensor::zeros(params[m.output.weight].shape());
  params[m.output.bias] = Tensor::zeros(params[m.output.bias].shape());

  const Tensor fs = Tensor::full({3, 5}, 0.2), ft = Tensor::full({4, 5}, -0.1);
  CHECK(adversarial_stage_loss(m, params, fs, ft, 2.0, false).item() ==
        doctest::Approx(0.5 * std::log(2.0)).epsilon(1e-14));
  CHECK(adversarial_stage_loss(m, params, fs, ft, 0.0, false).item() ==
        doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-14));
}

TEST_CASE("reversal negates generator gradients of the adversarial loss") {
  const Model model = Model::init(small_arch(), 3);
  const DomainBatch batch = small_batch(3);

  auto generator_grads = [&](bool reverse) {
    Tape tape;
    std::vector<Tensor> bound;
    for (const auto& p : model.parameters()) bound.push_back(tape.variable(p));
    const auto fs = model.features(bound, batch.source_x);
    const auto ft = model.features(bound, batch.target_x);
    Tensor l = adversarial_stage_loss(model.modules()[0], bound, fs[0], ft[0], 0.7, reverse);
    for (std::size_t k = 1; k < fs.size(); ++k)
      l = add(l, adversarial_stage_loss(model.modules()[k], bound, fs[k], ft[k], 0.7, reverse));
    const Gradients g = tape.backward(l);
    std::vector<std::vector<double>> out;
    for (std::size_t idx : model.generator_parameters()) out.push_back(g.wrt(bound[idx]).values());
    return out;
  };
  const auto reversed = generator_grads(true);
  const auto plain = generator_grads(false);
  double norm = 0.0;
  for (std::size_t k = 0; k < plain.size(); ++k)
    for (std::size_t i = 0; i < plain[k].size(); ++i) {
      CHECK(std::abs(reversed[k][i] + plain[k][i]) <= 1e-12);
      norm += std::abs(plain[k][i]);
    }
  CHECK(norm > 0.0);
}

TEST_CASE("batch loss composition") {
  const Model model = Model::init(small_arch(), 2);
  const DomainBatch batch = small_batch(2);

  SUBCASE("total recomposes from its parts") {
    for (StageReduction red : {StageReduction::sum, StageReduction::mean}) {
      LossOptions o;
      o.reduction = red;
      const BatchLoss l = batch_loss(batch, model, model.parameters(), o);
      REQUIRE(l.breakdown.l_adv);
      REQUIRE(l.breakdown.l_gamma);
      CHECK(std::abs(l.breakdown.total - l.breakdown.recomposed()) <= 1e-12);
      CHECK(l.breakdown.focal_exponents == l.hardness.per_stage);
    }
  }
  SUBCASE("beta zero ignores the hardness term") {
    LossOptions o;
    o.beta = 0.0;
    const BatchLoss with = batch_loss(batch, model, model.parameters(), o);
    o.hardness_loss = false;
    const BatchLoss without = batch_loss(batch, model, model.parameters(), o);
    CHECK(with.breakdown.total == without.breakdown.total);
  }
  SUBCASE("identical domains zero the hardness cascade") {
    DomainBatch same = batch;
    same.target_x = batch.source_x;
    LossOptions o;
    const BatchLoss l = batch_loss(same, model, model.parameters(), o);
    CHECK(*l.breakdown.l_gamma == 0.0);
    CHECK(l.breakdown.focal_exponents == std::vector<double>{0.0, 0.0, 0.0});
    o.exponent = FocalExponent::zero;
    o.hardness_loss = false;
    CHECK(*batch_loss(same, model, model.parameters(), o).breakdown.l_adv == *l.breakdown.l_adv);
  }
  SUBCASE("fixed and absent terms") {
    LossOptions o;
    o.exponent = FocalExponent::fixed;
    o.hardness_loss = false;
    const BatchLoss fixed = batch_loss(batch, model, model.parameters(), o);
    CHECK(fixed.breakdown.focal_exponents == std::vector<double>{5.0, 5.0, 5.0});
    CHECK_FALSE(fixed.breakdown.l_gamma);
    o.adversarial = false;
    const BatchLoss plain = batch_loss(batch, model, model.parameters(), o);
    CHECK_FALSE(plain.breakdown.l_adv);
    CHECK(plain.breakdown.total == plain.breakdown.l_det);
  }
}

TEST_CASE("composite loss gradient against central differences") {
  const Model model = Model::init(small_arch(), 4);
  const DomainBatch batch = small_batch(4);
  LossOptions options;

  SUBCASE("with reversal") {
    CHECK(audit::composite(model, batch, options, 1e-6).worst <= 1e-4);
  }
  SUBCASE("without reversal") {
    options.reverse_gradients = false;
    CHECK(audit::composite(model, batch, options, 1e-6).worst <= 1e-4);
  }
  SUBCASE("mean over stages, fixed bandwidth") {
    options.reduction = StageReduction::mean;
    options.kernel = {BandwidthMode::fixed, 0.7};
    CHECK(audit::composite(model, batch, options, 1e-6).worst <= 1e-4);
  }
}

TEST_CASE("non-finite components raise with the breakdown") {
  Model model = Model::init(small_arch(), 5);
  DomainBatch batch = small_batch(5);
  batch.source_x = Tensor::full(batch.source_x.shape(), std::nan(""));
  CHECK_THROWS_AS(batch_loss(batch, model, model.parameters(), LossOptions{}), NumericLossError);
}
