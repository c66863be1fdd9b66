#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "doctest.h"
#include "sga/data.hpp"

using namespace sga;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "sga_test_data";
  fs::create_directories(dir);
  return dir / name;
}

DatasetSpec moons(std::uint64_t seed) {
  DatasetSpec s;
  s.family = DatasetFamily::two_moons;
  s.points_per_domain = 200;
  s.shift.rotation_degrees = 30;
  s.seed = seed;
  return s;
}

}  // namespace

TEST_CASE("generation is deterministic in the seed") {
  const DomainDataset a = generate(moons(7)), b = generate(moons(7));
  CHECK(a.source_features().values() == b.source_features().values());
  CHECK(a.target_features().values() == b.target_features().values());
  CHECK(a.source_labels() == b.source_labels());

  const DomainDataset c = generate(moons(8));
  CHECK(a.source_features().values() != c.source_features().values());
}

TEST_CASE("shapes and label balance") {
  DatasetSpec s;
  s.family = DatasetFamily::gaussian_blobs;
  s.classes = 3;
  s.points_per_domain = 301;
  s.seed = 3;
  const DomainDataset d = generate(s);
  CHECK(d.source_features().shape() == Shape{301, 2});
  CHECK(d.target_features().shape() == Shape{301, 2});
  std::map<int, int> hist;
  for (int y : d.source_labels()) ++hist[y];
  REQUIRE(hist.size() == 3);
  for (const auto& [label, count] : hist) {
    CHECK(count >= 100);
    CHECK(count <= 101);
  }
  CHECK(d.classes() == 3);
}

TEST_CASE("null shift keeps the domains alike") {
  DatasetSpec s = moons(4);
  s.shift.rotation_degrees = 0;
  s.points_per_domain = 2000;
  const DomainDataset d = generate(s);
  auto centroid = [](const Tensor& x) {
    double cx = 0, cy = 0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      cx += x.at(i, 0);
      cy += x.at(i, 1);
    }
    return std::make_pair(cx / x.rows(), cy / x.rows());
  };
  const auto cs = centroid(d.source_features()), ct = centroid(d.target_features());
  CHECK(std::abs(cs.first - ct.first) < 0.05);
  CHECK(std::abs(cs.second - ct.second) < 0.05);
}

TEST_CASE("spec validation names the field") {
  auto message = [](const DatasetSpec& s) {
    try {
      s.validate();
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  DatasetSpec s;
  s.classes = 1;
  CHECK(message(s).find("classes") != std::string::npos);
  s = DatasetSpec{};
  s.points_per_domain = 3;
  CHECK(message(s).find("points_per_domain") != std::string::npos);
  s = DatasetSpec{};
  s.shift.rotation_degrees = 181;
  CHECK(message(s).find("rotation_degrees") != std::string::npos);
  s = DatasetSpec{};
  s.classes = 3;
  CHECK(message(s).find("classes") != std::string::npos);
}

TEST_CASE("csv round trip is exact") {
  const DomainDataset d = generate(moons(9));
  const fs::path p = scratch("roundtrip.csv");
  save(d, p);
  const DomainDataset back = load(p);
  CHECK(back.source_features().values() == d.source_features().values());
  CHECK(back.target_features().values() == d.target_features().values());
  CHECK(back.source_labels() == d.source_labels());
  REQUIRE(back.has_target_labels());
  CHECK(back.target_labels_for_evaluation() == d.target_labels_for_evaluation());
}

TEST_CASE("target labels are quarantined") {
  const DomainDataset d = generate(moons(10));
  CHECK(d.target_label_reads() == 0);
  const fs::path p = scratch("quarantine.csv");
  save(d, p);
  CHECK(d.target_label_reads() == 0);

  const DomainDataset back = load(p);
  CHECK(back.target_label_reads() == 0);
  BatchIterator it(back, 16, 1);
  while (it.next()) {
  }
  CHECK(back.target_label_reads() == 0);
  back.target_labels_for_evaluation();
  CHECK(back.target_label_reads() == 1);
}

TEST_CASE("malformed files report the line") {
  const fs::path p = scratch("broken.csv");
  auto write = [&](const std::string& text) {
    std::ofstream(p) << text;
  };
  auto error_of = [&]() -> std::string {
    try {
      load(p);
    } catch (const ParseError& e) {
      return e.what();
    }
    return "";
  };

  write("domain,label,f0,f1\nsource,0,1.0,2.0\nsource,1,3.0\n");
  CHECK(error_of().find("line 3") != std::string::npos);

  write("domain,label,f0,f1\nsource,0,1.0,2.0\ntarget,,0.5,0.25\nsour");
  CHECK(error_of().find("line 4") != std::string::npos);

  write("dom,label,f0\nsource,0,1.0\n");
  CHECK(error_of().find("line 1") != std::string::npos);

  write("domain,label,f0\nsource,0,abc\n");
  CHECK(error_of().find("line 2") != std::string::npos);

  CHECK_THROWS_AS(load(scratch("does_not_exist.csv")), IoError);
}

TEST_CASE("files without target labels load unlabeled") {
  const fs::path p = scratch("unlabeled.csv");
  std::ofstream(p) << "domain,label,f0\nsource,0,1.0\nsource,1,2.0\ntarget,,1.5\n";
  const DomainDataset d = load(p);
  CHECK_FALSE(d.has_target_labels());
  CHECK(d.target_features().shape() == Shape{1, 1});
}

TEST_CASE("batch iteration") {
  const DomainDataset d = generate(moons(11));
  BatchIterator a(d, 16, 5), b(d, 16, 5), c(d, 16, 6);
  CHECK(a.batches_per_epoch() == 200 / 16);
  std::size_t count = 0;
  bool differs = false;
  while (auto x = a.next()) {
    auto y = b.next();
    auto z = c.next();
    REQUIRE(y);
    CHECK(x->source_x.values() == y->source_x.values());
    CHECK(x->target_x.values() == y->target_x.values());
    CHECK(x->source_y == y->source_y);
    CHECK(x->source_x.shape() == Shape{16, 2});
    CHECK(x->target_x.shape() == Shape{16, 2});
    differs = differs || x->source_x.values() != z->source_x.values();
    ++count;
  }
  CHECK(count == 12);
  CHECK(differs);

  BatchIterator pairs(d, 1, 2);
  CHECK(pairs.batches_per_epoch() == 200);
  CHECK(pairs.next()->source_x.shape() == Shape{1, 2});

  CHECK_THROWS_AS(BatchIterator(d, 201, 1), ConfigError);
  CHECK_THROWS_AS(BatchIterator(d, 0, 1), ConfigError);
}

TEST_CASE("family names") {
  CHECK(parse_family("two-moons") == DatasetFamily::two_moons);
  CHECK(parse_family("gaussian-blobs") == DatasetFamily::gaussian_blobs);
  CHECK(std::string(to_string(DatasetFamily::two_moons)) == "two-moons");
  CHECK_THROWS_AS(parse_family("spirals"), ConfigError);
}
