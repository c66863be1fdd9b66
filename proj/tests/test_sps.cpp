#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "sga/sps.hpp"

using namespace sga;

TEST_CASE("median convention") {
  CHECK(median(std::vector<double>{0.2, 0.9, 0.5}) == 0.5);
  CHECK(median(std::vector<double>{0.2, 0.4, 0.6, 0.8}) == doctest::Approx(0.5));
  CHECK(median(std::vector<double>{0.7}) == 0.7);
  CHECK_THROWS_AS(median(std::vector<double>{}), EmptyInputError);
}

TEST_CASE("recording") {
  SpsState s;
  CHECK(s.mode() == SpsMode::pre_epoch);
  CHECK_FALSE(s.alpha());
  s.record(0.4);
  CHECK(s.records() == std::vector<double>{0.4});
  s.record(0.1);
  s.record(0.3);
  CHECK(s.records() == std::vector<double>{0.4, 0.1, 0.3});

  CHECK_THROWS_AS(s.record(-0.01), DataError);
  CHECK_THROWS_AS(s.record(std::numeric_limits<double>::quiet_NaN()), DataError);
  CHECK_THROWS_AS(s.record(std::numeric_limits<double>::infinity()), DataError);
  CHECK(s.records().size() == 3);
}

TEST_CASE("gate before the threshold exists") {
  SpsState s;
  CHECK_THROWS_AS(s.gate(0.1), StateError);
}

TEST_CASE("epoch end") {
  SpsState s;
  CHECK_THROWS_AS(s.epoch_end(), StateError);
  for (double v : {0.3, 0.3, 0.3}) s.record(v);
  const EpochSummary sum = s.epoch_end();
  CHECK(sum.alpha == 0.3);
  CHECK(sum.iterations == 3);
  CHECK(sum.epoch_index == 0);
  CHECK(s.mode() == SpsMode::gated);
  CHECK(*s.alpha() == 0.3);
  CHECK(s.records().empty());
  CHECK(s.epoch_index() == 1);
}

TEST_CASE("gate decisions") {
  SpsState s;
  s.record(0.5);
  s.epoch_end();

  const GateDecision below = s.gate(0.3);
  CHECK(below.selected);
  CHECK(below.alpha_used == 0.5);
  CHECK(s.gate(0.5).selected);
  CHECK_FALSE(s.gate(0.7).selected);
}

TEST_CASE("gated-out iterations are still recorded") {
  SpsState s;
  s.record(0.2);
  s.epoch_end();
  s.record(0.9);
  CHECK_FALSE(s.gate(0.9).selected);
  s.record(0.1);
  CHECK(s.gate(0.1).selected);
  CHECK(s.records() == std::vector<double>{0.9, 0.1});
  const EpochSummary e = s.epoch_end();
  CHECK(e.iterations == 2);
  CHECK(e.selected == 1);
  CHECK(e.alpha == doctest::Approx(0.5));
}

TEST_CASE("an epoch gated out entirely still moves the threshold") {
  SpsState s;
  s.record(0.1);
  s.epoch_end();
  for (double v : {0.4, 0.6, 0.8}) {
    s.record(v);
    CHECK_FALSE(s.gate(v).selected);
  }
  const EpochSummary e = s.epoch_end();
  CHECK(e.all_gated_out);
  CHECK(e.alpha == 0.6);
  CHECK(s.gate(0.5).selected);
}

TEST_CASE("pre-epoch runner") {
  SpsState s;
  std::size_t calls = 0;
  const EpochSummary e = run_pre_epoch(s, 7, [&](std::size_t step) {
    ++calls;
    return 0.1 * static_cast<double>(step);
  });
  CHECK(calls == 7);
  CHECK(e.iterations == 7);
  CHECK(e.alpha == doctest::Approx(0.3));
  CHECK(s.mode() == SpsMode::gated);

  SpsState constant;
  CHECK(run_pre_epoch(constant, 4, [](std::size_t) { return 0.25; }).alpha == 0.25);

  CHECK_THROWS_AS(run_pre_epoch(s, 3, [](std::size_t) { return 0.1; }), StateError);
  SpsState dirty;
  dirty.record(0.2);
  CHECK_THROWS_AS(run_pre_epoch(dirty, 3, [](std::size_t) { return 0.1; }), StateError);
}

TEST_CASE("threshold follows the sort oracle over many epochs") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(0.0, 1.5);
  std::uniform_int_distribution<int> len(1, 40);
  SpsState s;
  std::vector<double> rec;
  for (int i = 0; i < len(rng); ++i) {
    rec.push_back(u(rng));
    s.record(rec.back());
  }
  double alpha = s.epoch_end().alpha;
  CHECK(alpha == oracle::sorted_median(rec));

  for (int epoch = 0; epoch < 30; ++epoch) {
    rec.clear();
    const int n = len(rng);
    for (int i = 0; i < n; ++i) {
      const double v = u(rng);
      rec.push_back(v);
      s.record(v);
      const GateDecision d = s.gate(v);
      CHECK(d.selected == (v <= alpha));
      CHECK(d.alpha_used == alpha);
    }
    CHECK(s.records().size() == static_cast<std::size_t>(n));
    alpha = s.epoch_end().alpha;
    CHECK(alpha == oracle::sorted_median(rec));
  }
}
