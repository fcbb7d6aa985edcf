#include "doctest.h"

#include "commands.hpp"
#include "config.hpp"

#include "cpd/errors.hpp"

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace cpd;
using namespace cpd::cli;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("cpd_cli_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  static int& counter() {
    static int n = 0;
    return n;
  }
};

fs::path write_file(const fs::path& path, const std::string& text) {
  std::ofstream(path) << text;
  return path;
}

std::string config_error_parameter(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.parameter();
  }
  return "";
}

const char* kSmallPlate = R"(scale = desk
[domain]
width = 5
height = 5
hole_x = 2.5
hole_y = 2.2
hole_radius = 1.0
notch_tip_x = 1.5
notch_height = 1.0
spacing = 0.3
[protocol]
load_steps = 20
relax_substeps = 40
equilibration_steps = 200
)";

}  // namespace

TEST_CASE("ini parsing: sections, comments and errors") {
  const auto doc = parse_ini("scale = desk  # trailing\n; full comment\n\n[domain]\nwidth = 4\n[train]\nvariant=vanilla\n");
  CHECK(doc.at("").at("scale").value == "desk");
  CHECK(doc.at("domain").at("width").value == "4");
  CHECK(doc.at("domain").at("width").line == 5);
  CHECK(doc.at("train").at("variant").value == "vanilla");

  CHECK_THROWS_AS(parse_ini("[domain\nwidth = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_ini("[domain]\njust text\n"), ConfigError);
  CHECK_THROWS_AS(parse_ini("[domain]\nwidth = 1\nwidth = 2\n"), ConfigError);
  try {
    parse_ini("a = 1\n\nnonsense\n");
    FAIL("expected an error");
  } catch (const ConfigError& e) {
    CHECK(e.parameter() == "line 3");
  }
}

TEST_CASE("config errors name the offending key") {
  CHECK(config_error_parameter("[domian]\nwidth = 3\n") == "domian");
  CHECK(config_error_parameter("[domain]\nwidht = 3\n") == "domain.widht");
  CHECK(config_error_parameter("[domain]\nwidth = abc\n") == "domain.width");
  CHECK(config_error_parameter("[material]\npoisson_ratio = 0.7\n").rfind("material", 0) == 0);
  CHECK(config_error_parameter("[train]\niterations = -5\n") == "train.iterations");
  CHECK(config_error_parameter("[train]\nvariant = deep\n") == "train.variant");
  CHECK(config_error_parameter("scale = huge\n") == "scale");
  CHECK(config_error_parameter("[case]\nvalues = 0.5, 1.0\nn_test = 2\n").rfind("case", 0) == 0);
  CHECK(config_error_parameter("[case]\nid = case2\nvalues = 12\n") == "case.param_values");
  // Each sample geometry is checked before anything runs: the notch for h = 1.6 lies above this short plate.
  CHECK(config_error_parameter("[domain]\nheight = 4\nhole_y = 1.5\nspacing = 0.3\n"
                               "[case]\nid = case2\nvalues = 0.5, 1.6\nn_test = 1\n") == "domain.notch_height");
  CHECK(config_error_parameter("[protocol]\ndt = -1\n").rfind("protocol", 0) == 0);
}

TEST_CASE("config presets per scale and case") {
  const RunConfig desk = parse_config("[case]\nid = case1\n");
  CHECK(desk.scale == Scale::desk);
  CHECK(desk.domain.width == 10.0);
  CHECK(desk.domain.hole_center.y() == 4.0);
  CHECK(desk.domain.target_spacing == doctest::Approx(0.25));
  CHECK(desk.case_spec.n_samples == 10);
  CHECK(desk.n_test == 2);
  CHECK(desk.variant == Variant::fusion);
  CHECK(desk.train.iterations == 8000);
  CHECK(desk.train.arch.width == 64);
  CHECK(desk.train.schedule.kind == LearningRateSchedule::Kind::exponential);
  CHECK(desk.train.schedule.at(2000) == doctest::Approx(9.1e-4));

  const RunConfig full_scale = parse_config("scale = full\n[case]\nid = case3\n[train]\nvariant = vanilla\n");
  CHECK(full_scale.domain.target_spacing == doctest::Approx(0.08));
  CHECK(full_scale.case_spec.n_samples == CaseSpec::preset(CaseId::case3).n_samples);
  CHECK(full_scale.train.iterations == 60000);
  CHECK(full_scale.train.arch.hidden_layers == 5);
  CHECK(full_scale.train.arch.latent == 200);
  CHECK(full_scale.train.arch.activation == Activation::tanh);
  CHECK(full_scale.train.schedule.kind == LearningRateSchedule::Kind::constant);
  CHECK(full_scale.train.schedule.at(5000) == doctest::Approx(1e-4));
  CHECK(parse_config("scale = full\n[train]\nvariant = fusion\n").train.iterations == 50000);

  const RunConfig custom = parse_config("[case]\nid = case2\nvalues = 0.5, 1.5, 1.0\nn_test = 1\n[domain]\nspacing = 0.3\n");
  CHECK(custom.case_spec.param_values == std::vector<double>{0.5, 1.5, 1.0});
  CHECK(custom.domain.target_spacing == doctest::Approx(0.3));
}

TEST_CASE("config io paths resolve against the config directory") {
  const RunConfig c = parse_config("[io]\ndataset = data/set1\nruns = a, /abs/b\n", "/work/cfg");
  CHECK(c.dataset == fs::path("/work/cfg/data/set1"));
  REQUIRE(c.runs.size() == 2);
  CHECK(c.runs[0] == fs::path("/work/cfg/a"));
  CHECK(c.runs[1] == fs::path("/abs/b"));
}

TEST_CASE("config hash is stable and sensitive to content") {
  const RunConfig a = parse_config(kSmallPlate);
  const RunConfig b = parse_config(std::string("# same values, different text\n") + kSmallPlate);
  const RunConfig c = parse_config(std::string(kSmallPlate) + "[material]\ndensity = 7.9\n");
  CHECK(config_hash("mesh", a).size() == 16);
  CHECK(config_hash("mesh", a) == config_hash("mesh", b));
  CHECK(config_hash("mesh", a) != config_hash("simulate", a));
  CHECK(config_hash("mesh", a) != config_hash("mesh", c));
}

TEST_CASE("split selection") {
  const TrainSplit full = split_for(static_cast<std::size_t>(CaseSpec::preset(CaseId::case1).n_samples), CaseId::case1, 2);
  const TrainSplit reference = full_split(CaseId::case1);
  CHECK(full.train_ids == reference.train_ids);
  CHECK(full.test_ids == reference.test_ids);

  const TrainSplit small = split_for(6, CaseId::case2, 2);
  CHECK(small.train_ids.size() == 4);
  CHECK(small.test_ids.size() == 2);
  const TrainSplit all = split_for(3, CaseId::case2, 0);
  CHECK(all.train_ids.size() == 3);
  CHECK(all.test_ids.empty());
}

TEST_CASE("malformed config exits 2 and writes nothing") {
  TempDir tmp;
  const fs::path cfg = write_file(tmp.path / "bad.ini", "[domain]\nwidth = -3\n");
  const fs::path root = tmp.path / "runs";
  std::ostringstream log, err;
  const auto out = run_command("mesh", cfg, {root, false}, log, err);
  CHECK(out.exit_code == kExitConfig);
  CHECK(out.run_dir.empty());
  CHECK_FALSE(fs::exists(root));
  CHECK(err.str().find("domain.width") != std::string::npos);

  CHECK(run_command("nonsense", cfg, {root, false}, log, err).exit_code == kExitConfig);
  CHECK(run_command("mesh", tmp.path / "missing.ini", {root, false}, log, err).exit_code == kExitRuntime);
  CHECK_FALSE(fs::exists(root));
}

TEST_CASE("missing inputs exit 4 without a run directory") {
  TempDir tmp;
  const fs::path root = tmp.path / "runs";
  std::ostringstream log, err;
  const fs::path train = write_file(tmp.path / "train.ini", "[io]\ndataset = nowhere\n");
  CHECK(run_command("train", train, {root, false}, log, err).exit_code == kExitRuntime);
  const fs::path eval = write_file(tmp.path / "eval.ini", "[io]\ndataset = .\ncheckpoint = none.onet\n");
  CHECK(run_command("evaluate", eval, {root, false}, log, err).exit_code == kExitRuntime);
  const fs::path noset = write_file(tmp.path / "noset.ini", "scale = desk\n");
  CHECK(run_command("train", noset, {root, false}, log, err).exit_code == kExitConfig);
  CHECK((!fs::exists(root) || fs::is_empty(root)));
}

TEST_CASE("mesh and simulate end to end") {
  TempDir tmp;
  const fs::path cfg = write_file(tmp.path / "plate.ini", kSmallPlate);
  const fs::path root = tmp.path / "runs";
  std::ostringstream log, err;

  const auto mesh = run_command("mesh", cfg, {root, false}, log, err);
  REQUIRE(mesh.exit_code == kExitOk);
  CHECK(mesh.run_dir.filename().string().rfind("mesh-", 0) == 0);
  for (const char* f : {"mesh.cpd", "mesh.svg", "summary.json", "config.json", "config.ini"})
    CHECK(fs::exists(mesh.run_dir / f));
  const Trajectory exported = read_trajectory(mesh.run_dir / "mesh.cpd");
  CHECK(exported.frames.size() == 1);

  CHECK(run_command("mesh", cfg, {root, false}, log, err).exit_code == kExitConfig);
  CHECK(run_command("mesh", cfg, {root, true}, log, err).exit_code == kExitOk);

  const auto sim = run_command("simulate", cfg, {root, false}, log, err);
  REQUIRE(sim.exit_code == kExitOk);
  const Trajectory t = read_trajectory(sim.run_dir / "trajectory.cpd");
  CHECK(t.frames.size() == 101);
  CHECK(t.particle_count() == exported.particle_count());
  CHECK(fs::exists(sim.run_dir / "final.svg"));

  // No staging directories survive.
  for (const auto& entry : fs::directory_iterator(root)) CHECK(entry.path().filename().string()[0] != '.');
}

TEST_CASE("generate, train, evaluate and report end to end") {
  TempDir tmp;
  const fs::path root = tmp.path / "runs";
  std::ostringstream log, err;
  const fs::path gen = write_file(tmp.path / "gen.ini", std::string(kSmallPlate) + "[case]\nid = case2\nvalues = 0.6, 1.2, 0.9\nn_test = 1\n");
  const auto g = run_command("generate", gen, {root, false}, log, err);
  REQUIRE(g.exit_code == kExitOk);
  const LoadedDataset data = load_dataset(g.run_dir);
  CHECK(data.samples.size() == 3);
  CHECK(data.listed == 3);

  const fs::path train = write_file(tmp.path / "train.ini", "[case]\nid = case2\nn_test = 1\n[train]\nvariant = vanilla\niterations = 20\n"
                                                           "batch_rows = 256\nmonitor_rows = 256\nlog_every = 10\n[io]\ndataset = " +
                                                               g.run_dir.string() + "\n");
  const auto tr = run_command("train", train, {root, false}, log, err);
  REQUIRE(tr.exit_code == kExitOk);
  CHECK(fs::exists(tr.run_dir / "model.onet"));
  CHECK(fs::exists(tr.run_dir / "loss.csv"));

  const fs::path eval = write_file(tmp.path / "eval.ini", "[case]\nid = case2\nn_test = 1\n[io]\ndataset = " + g.run_dir.string() +
                                                             "\ncheckpoint = " + (tr.run_dir / "model.onet").string() + "\n");
  const auto ev = run_command("evaluate", eval, {root, false}, log, err);
  REQUIRE(ev.exit_code == kExitOk);
  std::ifstream csv(ev.run_dir / "rel_l2.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header.rfind("tau,rel_l2,sample_", 0) == 0);
  int rows = 0;
  for (std::string line; std::getline(csv, line);) ++rows;
  CHECK(rows == 101);

  const fs::path rep = write_file(tmp.path / "rep.ini", "[io]\nruns = " + tr.run_dir.string() + ", " + ev.run_dir.string() + "\n");
  const auto r = run_command("report", rep, {root, false}, log, err);
  REQUIRE(r.exit_code == kExitOk);
  CHECK(fs::exists(r.run_dir / "report.md"));
  CHECK(fs::exists(r.run_dir / "loss.svg"));
  CHECK(fs::exists(r.run_dir / "rel_l2.svg"));
}
