#include "doctest.h"

#include "cpd/dataset.hpp"
#include "cpd/errors.hpp"

#include <zlib.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

using namespace cpd;
namespace fs = std::filesystem;

namespace {

// 101 frames of a 3 x 3 particle patch; triangle 1 dies at tau = 40.
Trajectory synthetic_trajectory(double param = 0.5) {
  Trajectory t;
  t.sample_id = 4;
  t.case_tag = 2;
  t.geometry_param = param;
  t.domain.width = 2;
  t.domain.height = 2;
  t.triangles = {{0, 1, 4}, {0, 4, 3}, {1, 2, 5}, {1, 5, 4}};
  std::vector<Vec2> ref;
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i < 3; ++i) ref.emplace_back(i, j);
  for (int tau = 0; tau < kSnapshotCount; ++tau) {
    Frame f;
    for (const auto& x : ref) f.positions.push_back(x + 1e-3 * tau * param * Vec2(0.1 * x.y(), x.y()));
    f.alive = {1, static_cast<std::uint8_t>(tau < 40), 1, 1};
    t.frames.push_back(std::move(f));
  }
  return t;
}

std::string serialize(const Trajectory& t) {
  std::ostringstream out(std::ios::binary);
  write_trajectory(t, out);
  return out.str();
}

Trajectory parse(const std::string& bytes) {
  std::istringstream in(bytes, std::ios::binary);
  return read_trajectory(in);
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("cpd_test_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("case presets") {
  const auto c1 = CaseSpec::preset(CaseId::case1);
  CHECK(c1.n_samples == 40);
  CHECK(c1.param_values.size() == 40);
  CHECK_FALSE(c1.fracture_enabled);
  const auto c2 = CaseSpec::preset(CaseId::case2);
  CHECK(c2.n_samples == 50);
  CHECK(c2.fracture_enabled);
  const auto c3 = CaseSpec::preset(CaseId::case3);
  CHECK(c3.n_samples == 51);
  CHECK(c3.fracture_enabled);
  CHECK(c3.fixed_param == 1.5);
  for (const auto& c : {c1, c2, c3}) {
    CHECK_NOTHROW(c.validate());
    CHECK(c.param_values.front() == doctest::Approx(c.range_lo()));
    CHECK(c.param_values.back() == doctest::Approx(c.range_hi()));
    for (std::size_t k = 1; k < c.param_values.size(); ++k) CHECK(c.param_values[k] > c.param_values[k - 1]);
  }
  CHECK(c3.range_lo() == 0.5);
  CHECK(c3.range_hi() == 1.5);

  DomainSpec base;
  const auto d = c3.domain_for(base, 0);
  CHECK(d.hole_radius == doctest::Approx(0.5));
  CHECK(d.notch_height == doctest::Approx(1.5));
  const auto e = c2.domain_for(base, 49);
  CHECK(e.notch_height == doctest::Approx(c2.range_hi()));
  CHECK(e.hole_radius == doctest::Approx(1.0));

  CaseSpec bad = c1;
  bad.param_values.back() = 5.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c2;
  bad.fracture_enabled = false;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK(parse_case_id("case3") == CaseId::case3);
  CHECK_THROWS_AS(parse_case_id("case4"), ConfigError);
}

TEST_CASE("trapping classifier") {
  CHECK(trapping_classifier(1.0, 0.4));
  CHECK_FALSE(trapping_classifier(1.0, 2.0));
  CHECK(trapping_classifier(1.5, 0.6));
  CHECK_FALSE(trapping_classifier(1.0, 0.41));
  CHECK_THROWS_AS(trapping_classifier(0.0, 1.0), ConfigError);
  CHECK_THROWS_AS(trapping_classifier(1.0, -0.1), ConfigError);
}

TEST_CASE("splits") {
  for (auto id : {CaseId::case1, CaseId::case2, CaseId::case3}) {
    const auto s = full_split(id);
    const auto n = CaseSpec::preset(id).n_samples;
    CHECK_NOTHROW(s.validate(n));
    CHECK(s.test_ids.size() == (id == CaseId::case3 ? 6u : 5u));
    CHECK(s.train_ids.size() + s.test_ids.size() == static_cast<std::size_t>(n));
    for (auto t : s.test_ids) {
      CHECK(t > 0);
      CHECK(t < static_cast<std::size_t>(n - 1));
    }
  }
  const auto s = make_split(10, 2);
  CHECK_NOTHROW(s.validate(10));
  CHECK(s.test_ids.size() == 2);
  CHECK_THROWS_AS(make_split(3, 3), ConfigError);
  TrainSplit overlap{{0, 1, 2}, {2}};
  CHECK_THROWS_AS(overlap.validate(3), ConfigError);
  TrainSplit missing{{0, 1}, {3}};
  CHECK_THROWS_AS(missing.validate(4), ConfigError);
}

TEST_CASE("snapshot round trip is lossless and byte stable") {
  const auto t = synthetic_trajectory();
  const std::string bytes = serialize(t);
  const auto back = parse(bytes);
  CHECK(back == t);
  CHECK(serialize(back) == bytes);
  CHECK(back.first_failure_tau() == 40);
}

TEST_CASE("corruption and truncation are detected") {
  const std::string bytes = serialize(synthetic_trajectory());
  SUBCASE("flipped byte in every region") {
    for (std::size_t pos : {std::size_t{20}, std::size_t{130}, bytes.size() / 2, bytes.size() - 10}) {
      std::string bad = bytes;
      bad[pos] = static_cast<char>(bad[pos] ^ 0x40);
      CHECK_THROWS_AS(parse(bad), ChecksumError);
    }
  }
  SUBCASE("bad magic") {
    std::string bad = bytes;
    bad[0] = 'X';
    CHECK_THROWS_AS(parse(bad), FormatError);
  }
  SUBCASE("empty and truncated") {
    CHECK_THROWS_AS(parse(""), FormatError);
    CHECK_THROWS_AS(parse(bytes.substr(0, bytes.size() - 1)), FormatError);
    CHECK_THROWS_AS(parse(bytes + "x"), FormatError);
  }
}

TEST_CASE("checksum matches zlib") {
  const std::string s = "123456789";
  const auto* p = reinterpret_cast<const unsigned char*>(s.data());
  CHECK(crc32_of({p, s.size()}) == 0xCBF43926u);
  CHECK(crc32_of({p, s.size()}) == ::crc32(0L, p, static_cast<uInt>(s.size())));
}

TEST_CASE("file round trip leaves no temporary files") {
  TempDir dir;
  const auto t = synthetic_trajectory();
  const auto path = dir.path / "s.cpd";
  write_trajectory(t, path);
  CHECK(read_trajectory(path) == t);
  std::size_t entries = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir.path)) ++entries;
  CHECK(entries == 1);
  CHECK_THROWS_AS(read_trajectory(dir.path / "missing.cpd"), FormatError);
}

TEST_CASE("merge detection") {
  Trajectory t;
  t.domain.width = t.domain.height = 4;
  t.domain.hole_center = Vec2(2.0, 1.5);
  t.domain.hole_radius = 0.5;
  t.domain.notch_tip_x = 1.0;
  t.domain.notch_height = 0.5;  // notch line y = 2.5
  t.domain.target_spacing = 0.25;
  // A strip of triangles running from the notch tip down to the hole rim.
  std::vector<Vec2> pts{{1.0, 2.5}, {1.25, 2.5}, {1.25, 2.25}, {1.5, 2.25}, {1.5, 2.0}, {1.75, 2.0}, {3.5, 3.5}, {3.75, 3.5}, {3.5, 3.75}};
  t.triangles = {{0, 2, 1}, {1, 2, 3}, {2, 4, 3}, {3, 4, 5}, {6, 7, 8}};
  Frame f0{pts, {1, 1, 1, 1, 1}};
  Frame f1{pts, {0, 0, 0, 0, 1}};
  Frame f2{pts, {0, 0, 1, 1, 0}};
  t.frames = {f0, f1, f2};
  CHECK_FALSE(crack_merges_hole(t, 0));
  CHECK(crack_merges_hole(t, 1));
  CHECK_FALSE(crack_merges_hole(t, 2));
}

TEST_CASE("training tensors") {
  std::vector<Trajectory> trajs;
  for (int k = 0; k < 4; ++k) {
    auto t = synthetic_trajectory(0.2 + 0.3 * k);
    t.sample_id = k;
    trajs.push_back(t);
  }
  const TrainSplit split{{0, 1, 3}, {2}};
  const auto tt = build_training_tensors(trajs, split);
  REQUIRE(tt.train.size() == 3);
  REQUIRE(tt.test.size() == 1);
  const std::size_t n = 9;
  CHECK(tt.train_rows() == 3 * n * kSnapshotCount);
  CHECK(tt.test[0].sample_id == 2);
  CHECK(tt.norm.branch_min == doctest::Approx(0.2));
  CHECK(tt.norm.branch_max == doctest::Approx(1.1));
  for (const auto& s : tt.train) {
    CHECK(s.trunk.cols() == static_cast<Eigen::Index>(n * kSnapshotCount));
    CHECK(s.trunk.minCoeff() >= -1.0 - 1e-12);
    CHECK(s.trunk.maxCoeff() <= 1.0 + 1e-12);
    for (std::size_t i = 0; i < n; ++i) {
      // tau = 0 has zero displacement.
      const Eigen::Vector2d u = tt.norm.destandardize(s.targets.col(static_cast<Eigen::Index>(i)));
      CHECK(u.norm() < 1e-12);
    }
    // Row tau * N + i is particle i at snapshot tau.
    const auto& traj = trajs[s.sample_id];
    const std::size_t i = 7, tau = 60;
    const Eigen::Vector2d u = tt.norm.destandardize(s.targets.col(static_cast<Eigen::Index>(tau * n + i)));
    const Vec2 expect = traj.frames[tau].positions[i] - traj.frames[0].positions[i];
    CHECK((u - expect).norm() < 1e-12);
    CHECK(s.trunk(2, static_cast<Eigen::Index>(tau * n + i)) == doctest::Approx(0.2));
  }
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 0.01);
  for (int k = 0; k < 100; ++k) {
    const Eigen::Vector2d u(g(rng), g(rng));
    CHECK((tt.norm.destandardize(tt.norm.standardize(u)) - u).norm() < 1e-12);
  }
  CHECK_THROWS_AS(build_training_tensors(std::span(trajs).first(1), TrainSplit{{0}, {}}), ConfigError);
}

TEST_CASE("generation writes files and a manifest") {
  TempDir dir;
  CaseSpec spec = CaseSpec::preset(CaseId::case2, 3);
  GenerationConfig cfg;
  cfg.base.width = cfg.base.height = 5;
  cfg.base.hole_center = Vec2(2.5, 2.0);
  cfg.base.notch_tip_x = 1.5;
  cfg.base.target_spacing = 0.25;
  spec.param_values = {0.2, 0.6, 1.0};
  cfg.protocol.n_load_steps = 10;
  cfg.protocol.relax_substeps = 20;
  cfg.protocol.equilibration_steps = 100;
  cfg.workers = 2;
  cfg.output_dir = dir.path;
  const auto res = generate_case(spec, cfg);
  REQUIRE(res.samples.size() == 3);
  CHECK(res.all_ok());
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(res.samples[k].sample_id == k);
    CHECK(fs::exists(res.samples[k].file));
    CHECK(read_trajectory(res.samples[k].file) == res.trajectories[k]);
  }
  std::ifstream manifest(dir.path / "manifest.tsv");
  std::string line;
  int lines = 0;
  while (std::getline(manifest, line)) ++lines;
  CHECK(lines == 5);  // comment, header, three samples

  // Identical configuration regenerates identical bytes.
  TempDir again;
  cfg.output_dir = again.path;
  cfg.workers = 1;
  const auto res2 = generate_case(spec, cfg);
  for (std::size_t k = 0; k < 3; ++k) {
    std::ifstream a(res.samples[k].file, std::ios::binary), b(res2.samples[k].file, std::ios::binary);
    std::stringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    CHECK(sa.str() == sb.str());
  }
}
