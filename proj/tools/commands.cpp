#include "commands.hpp"

#include "svg.hpp"

#include "cpd/errors.hpp"
#include "cpd/geometry.hpp"
#include "cpd/operator.hpp"
#include "cpd/simulation.hpp"
#include "cpd/validation.hpp"

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

namespace cpd::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::vector<std::string> kPalette{"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw FormatError("cannot write " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read " + path.string());
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

// Columns of a numeric CSV with a header row.
std::map<std::string, std::vector<double>> read_csv(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::string line;
  std::getline(in, line);
  std::vector<std::string> names;
  {
    std::stringstream h(line);
    std::string name;
    while (std::getline(h, name, ',')) names.push_back(name);
  }
  std::map<std::string, std::vector<double>> cols;
  while (std::getline(in, line)) {
    std::stringstream row(line);
    std::string cell;
    for (std::size_t k = 0; k < names.size() && std::getline(row, cell, ','); ++k)
      cols[names[k]].push_back(cell == "nan" ? std::nan("") : std::strtod(cell.c_str(), nullptr));
  }
  return cols;
}

std::string tau_tag(int tau) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "tau%03d", tau);
  return buf;
}

// --- mesh ---------------------------------------------------------------------------------

int cmd_mesh(const RunConfig& c, const fs::path& dir, std::ostream& log, json& summary) {
  auto sys = seed_particles(c.domain);
  const auto mesh = triangulate(sys, c.domain);
  lump_masses(sys, mesh, c.material.density, grid_pitch(c.domain));
  Trajectory t;
  t.domain = c.domain;
  t.triangles = mesh.triangles;
  t.frames.push_back({sys.ref_positions, mesh.alive});
  write_trajectory(t, dir / "mesh.cpd");
  write_text(dir / "mesh.svg", mesh_svg("reference mesh", sys.ref_positions, mesh.triangles, mesh.alive));
  const Box roi = region_of_interest(c.domain);
  double mass = 0.0;
  for (double m : sys.masses) mass += m;
  summary["particles"] = sys.size();
  summary["triangles"] = mesh.size();
  summary["pitch"] = grid_pitch(c.domain);
  summary["total_mass"] = mass;
  summary["region_of_interest"] = {roi.lo.x(), roi.lo.y(), roi.hi.x(), roi.hi.y()};
  log << "mesh: " << sys.size() << " particles, " << mesh.size() << " triangles\n";
  return kExitOk;
}

// --- validate -----------------------------------------------------------------------------

int cmd_validate(const RunConfig& c, const fs::path& dir, std::ostream& log, json& summary) {
  bool all = true;
  std::vector<std::string> failed;
  for (const auto kind : c.benchmarks) {
    const BenchmarkSetup setup = benchmark_preset(kind, c.scale);
    const BenchmarkResult r = run_benchmark(setup, c.material);
    const std::string name = to_string(kind);
    {
      std::ofstream csv(dir / ("profile_" + name + ".csv"));
      write_profile_csv(csv, r.profile, r.analytic);
    }
    const double scale = kind == BenchmarkKind::hole ? setup.domain.hole_radius : setup.domain.notch_tip_x;
    Series sim{"simulation", {}, {}, kPalette[0], true};
    Series exact{"closed form", {}, {}, kPalette[3]};
    for (std::size_t k = 0; k < r.profile.sample_x.size(); ++k) {
      const double x = r.profile.sample_x[k];
      sim.x.push_back(x / scale);
      sim.y.push_back(r.profile.sigma_yy[k] / r.profile.far_field);
    }
    if (r.analytic) {
      const double lo = r.profile.sample_x.front(), hi = r.profile.sample_x.back();
      for (int k = 0; k <= 200; ++k) {
        const double x = lo + (hi - lo) * k / 200.0;
        exact.x.push_back(x / scale);
        exact.y.push_back(r.analytic(x) / r.profile.far_field);
      }
    }
    std::vector<Series> series{sim};
    if (r.analytic) series.push_back(exact);
    const std::string unit = kind == BenchmarkKind::hole ? "x / r" : "x / a";
    write_text(dir / ("profile_" + name + ".svg"),
               plot_svg({name + " benchmark: sigma_yy ahead of the discontinuity", unit, "sigma_yy / sigma_far"}, series));

    summary["benchmarks"][name] = {{"particles", r.particles},
                                   {"triangles", r.triangles},
                                   {"far_field_GPa", r.profile.far_field},
                                   {"rms_rel", r.error.rms_rel},
                                   {"max_rel", r.error.max_rel},
                                   {"samples_in_window", r.error.samples},
                                   {"nearest_ratio", r.nearest_ratio},
                                   {"has_closed_form", r.has_analytic},
                                   {"passed", r.passed},
                                   {"seconds", r.seconds}};
    log << name << ": " << r.particles << " particles";
    if (r.has_analytic) log << ", rms_rel " << r.error.rms_rel << ", max_rel " << r.error.max_rel;
    if (kind == BenchmarkKind::hole) log << ", nearest bin " << r.nearest_ratio << " x far field";
    log << (r.passed ? "  PASS" : "  FAIL") << " (" << std::fixed << std::setprecision(1) << r.seconds << " s)\n"
        << std::defaultfloat << std::setprecision(6);
    if (!r.passed) failed.push_back(name);
    all = all && r.passed;
  }
  summary["passed"] = all;
  summary["failed"] = failed;
  if (!all) {
    log << "failing benchmarks:";
    for (const auto& f : failed) log << " " << f;
    log << "\n";
  }
  return all ? kExitOk : kExitFailed;
}

// --- simulate -----------------------------------------------------------------------------

int cmd_simulate(const RunConfig& c, const fs::path& dir, std::ostream& log, json& summary) {
  int last_pct = -10;
  const RunResult run = run_quasi_static(c.domain, c.material, c.protocol, 0, [&](double f) {
    const int pct = static_cast<int>(100 * f);
    if (pct >= last_pct + 10) {
      last_pct = pct;
      log << "  " << pct << "%\n" << std::flush;
    }
  });
  const Trajectory& t = run.trajectory;
  write_trajectory(t, dir / "trajectory.cpd");
  write_text(dir / "final.svg", mesh_svg("failed triangles at tau = 100", t.ref_positions(), t.triangles, t.frames.back().alive));
  const bool merged = crack_merges_hole(t);
  summary["particles"] = t.particle_count();
  summary["triangles"] = t.triangles.size();
  summary["dead_triangles"] = run.dead_triangles;
  summary["first_failure_tau"] = t.first_failure_tau();
  summary["crack_merges_hole"] = merged;
  summary["dt"] = run.dt;
  summary["damping"] = run.damping;
  if (c.domain.has_hole() && c.domain.has_notch())
    summary["trapping_predicted"] = trapping_classifier(c.domain.hole_radius, c.domain.notch_height);
  log << "simulate: " << run.dead_triangles << " failed triangles, first failure at tau " << t.first_failure_tau()
      << (merged ? ", crack reaches the hole" : "") << "\n";
  return kExitOk;
}

// --- generate -----------------------------------------------------------------------------

int cmd_generate(const RunConfig& c, const fs::path& dir, std::ostream& log, json& summary) {
  GenerationConfig g;
  g.base = c.domain;
  g.material = c.material;
  g.protocol = c.protocol;
  g.workers = c.workers;
  g.output_dir = dir;
  g.keep_trajectories = false;
  const auto res = generate_case(c.case_spec, g, [&](const SampleRecord& s) {
    log << "  sample " << s.sample_id << " (" << (c.case_spec.case_id == CaseId::case3 ? "r" : "h") << " = " << s.param
        << "): " << s.status << ", first failure tau " << s.first_failure_tau << (s.merged ? ", merged" : "") << " ["
        << std::fixed << std::setprecision(1) << s.seconds << " s]\n"
        << std::defaultfloat << std::setprecision(6) << std::flush;
  });
  std::size_t ok = 0;
  json samples = json::array();
  for (const auto& s : res.samples) {
    ok += s.ok ? 1 : 0;
    samples.push_back({{"sample_id", s.sample_id},
                       {"param", s.param},
                       {"status", s.status},
                       {"first_failure_tau", s.first_failure_tau},
                       {"merged", s.merged},
                       {"trapping_predicted", c.case_spec.case_id == CaseId::case3
                                                  ? trapping_classifier(s.param, c.case_spec.fixed_param)
                                                  : trapping_classifier(c.case_spec.fixed_param, s.param)}});
  }
  summary["samples"] = samples;
  summary["succeeded"] = ok;
  summary["failed"] = res.samples.size() - ok;
  log << "generate: " << ok << " of " << res.samples.size() << " samples succeeded\n";
  if (ok == res.samples.size()) return kExitOk;
  return ok == 0 ? kExitFailed : kExitPartial;
}

// --- train --------------------------------------------------------------------------------

int cmd_train(const RunConfig& c, const fs::path& dir, std::ostream& log, json& summary) {
  const LoadedDataset data = load_dataset(c.dataset);
  const auto id = static_cast<CaseId>(data.samples.front().case_tag);
  const TrainSplit split = split_for(data.samples.size(), id, c.n_test);
  const TrainingTensors tensors = build_training_tensors(data.samples, split);
  log << "train " << to_string(c.variant) << ": " << tensors.train.size() << " training samples, " << tensors.train_rows()
      << " rows\n";
  const long every = std::max<long>(c.train.log_every, c.train.iterations / 20);
  const TrainResult res = train(c.variant, tensors, c.train, [&](const LossRecord& r) {
    if (r.iteration % every == 0) log << "  iteration " << r.iteration << "  mse " << r.mse << "\n" << std::flush;
  });
  save_checkpoint(res.model, dir / "model.onet");
  {
    std::ofstream csv(dir / "loss.csv");
    write_loss_csv(csv, res.history);
  }
  Series s{to_string(c.variant), {}, {}, c.variant == Variant::fusion ? kPalette[1] : kPalette[0]};
  for (const auto& r : res.history) {
    s.x.push_back(static_cast<double>(r.iteration));
    s.y.push_back(r.mse);
  }
  write_text(dir / "loss.svg", plot_svg({"training loss", "iteration", "MSE", true}, {s}));
  std::vector<std::uint32_t> train_ids, test_ids;
  for (const auto& t : tensors.train) train_ids.push_back(t.sample_id);
  for (const auto& t : tensors.test) test_ids.push_back(t.sample_id);
  summary["variant"] = to_string(c.variant);
  summary["parameters"] = res.model.parameter_count();
  summary["train_sample_ids"] = train_ids;
  summary["test_sample_ids"] = test_ids;
  summary["train_rows"] = tensors.train_rows();
  summary["final_mse"] = res.final_mse;
  summary["seconds"] = res.seconds;
  log << "train: final mse " << res.final_mse << " after " << res.seconds << " s\n";
  return kExitOk;
}

// --- evaluate -----------------------------------------------------------------------------

int cmd_evaluate(const RunConfig& c, const fs::path& dir, std::ostream& log, json& summary) {
  const LoadedDataset data = load_dataset(c.dataset);
  const OperatorModel model = load_checkpoint(c.checkpoint);
  const auto id = static_cast<CaseId>(data.samples.front().case_tag);
  const TrainSplit split = split_for(data.samples.size(), id, c.n_test);
  std::vector<Trajectory> test;
  for (auto k : (split.test_ids.empty() ? split.train_ids : split.test_ids)) test.push_back(data.samples[k]);

  const auto pooled = relative_l2_over_time(model, test);
  std::vector<std::vector<double>> per_sample;
  for (const auto& t : test) per_sample.push_back(relative_l2_over_time(model, std::span(&t, 1)));
  {
    std::ofstream csv(dir / "rel_l2.csv");
    csv << "tau,rel_l2";
    for (const auto& t : test) csv << ",sample_" << t.sample_id;
    csv << "\n" << std::setprecision(10);
    for (int tau = 0; tau < kSnapshotCount; ++tau) {
      csv << tau << "," << pooled[static_cast<std::size_t>(tau)];
      for (const auto& curve : per_sample) csv << "," << curve[static_cast<std::size_t>(tau)];
      csv << "\n";
    }
  }
  std::vector<Series> curves;
  Series all{"pooled", {}, {}, "#000000"};
  for (int tau = 1; tau < kSnapshotCount; ++tau) {
    all.x.push_back(tau);
    all.y.push_back(pooled[static_cast<std::size_t>(tau)]);
  }
  curves.push_back(all);
  for (std::size_t k = 0; k < test.size(); ++k) {
    Series s{"sample " + std::to_string(test[k].sample_id), {}, {}, kPalette[k % kPalette.size()], false, true};
    for (int tau = 1; tau < kSnapshotCount; ++tau) {
      s.x.push_back(tau);
      s.y.push_back(per_sample[k][static_cast<std::size_t>(tau)]);
    }
    curves.push_back(s);
  }
  write_text(dir / "rel_l2.svg", plot_svg({"relative L2 error of the displacement", "tau", "relative L2", true}, curves));

  json samples = json::array();
  for (std::size_t k = 0; k < test.size(); ++k) {
    const Trajectory& t = test[k];
    for (int tau : {40, 99}) {
      const auto pred = predict_displacement(model, t, tau);
      const auto& ref = t.ref_positions();
      const auto& cur = t.frames[static_cast<std::size_t>(tau)].positions;
      const std::string stem = "scatter_sample" + std::to_string(t.sample_id) + "_" + tau_tag(tau);
      std::ofstream csv(dir / (stem + ".csv"));
      csv << "particle,x_true,y_true,x_pred,y_pred\n" << std::setprecision(12);
      // Displacements are a small fraction of the plate, so the plot magnifies them.
      double umax = 1e-300;
      for (std::size_t i = 0; i < ref.size(); ++i) umax = std::max(umax, (cur[i] - ref[i]).norm());
      const double magnify = 0.05 * t.domain.width / umax;
      Series truth{"true", {}, {}, kPalette[0], true}, guess{"predicted", {}, {}, kPalette[1], true};
      for (std::size_t i = 0; i < ref.size(); ++i) {
        const Vec2 p = ref[i] + pred.col(static_cast<Eigen::Index>(i));
        csv << i << "," << cur[i].x() << "," << cur[i].y() << "," << p.x() << "," << p.y() << "\n";
        const Vec2 tv = ref[i] + magnify * (cur[i] - ref[i]);
        const Vec2 pv = ref[i] + magnify * (p - ref[i]);
        truth.x.push_back(tv.x());
        truth.y.push_back(tv.y());
        guess.x.push_back(pv.x());
        guess.y.push_back(pv.y());
      }
      std::ostringstream title;
      title << "sample " << t.sample_id << ", tau = " << tau << " (displacements x" << std::setprecision(3) << magnify << ")";
      PlotSpec spec{title.str(), "x (cm)", "y (cm)"};
      spec.equal_aspect = true;
      write_text(dir / (stem + ".svg"), plot_svg(spec, {truth, guess}));
    }
    int argmax = 1;
    for (int tau = 2; tau < kSnapshotCount; ++tau)
      if (per_sample[k][static_cast<std::size_t>(tau)] > per_sample[k][static_cast<std::size_t>(argmax)]) argmax = tau;
    samples.push_back({{"sample_id", t.sample_id},
                       {"param", t.geometry_param},
                       {"first_failure_tau", t.first_failure_tau()},
                       {"rel_l2_tau40", per_sample[k][40]},
                       {"rel_l2_tau99", per_sample[k][99]},
                       {"argmax_tau", argmax}});
  }
  summary["variant"] = to_string(model.variant);
  summary["evaluated_on"] = split.test_ids.empty() ? "train" : "test";
  summary["samples"] = samples;
  summary["rel_l2_tau40"] = pooled[40];
  summary["rel_l2_tau99"] = pooled[99];
  summary["rel_l2_tau100"] = pooled[100];
  log << "evaluate " << to_string(model.variant) << ": pooled relative L2 " << pooled[40] << " at tau 40, " << pooled[99]
      << " at tau 99\n";
  return kExitOk;
}

// --- report -------------------------------------------------------------------------------

int cmd_report(const RunConfig& c, const fs::path& dir, std::ostream& log, json& summary) {
  std::vector<Series> loss, err;
  std::ostringstream md;
  md << "| run | command | variant | final mse | rel L2 tau 40 | rel L2 tau 99 |\n|---|---|---|---|---|---|\n";
  json runs = json::array();
  for (std::size_t k = 0; k < c.runs.size(); ++k) {
    const fs::path& run = c.runs[k];
    if (!fs::exists(run / "summary.json")) throw FormatError("not a run directory: " + run.string());
    const json s = json::parse(read_text(run / "summary.json"));
    const std::string name = run.filename().string();
    const std::string variant = s.value("variant", std::string("-"));
    const std::string color = kPalette[k % kPalette.size()];
    const std::string label = variant + " (" + name.substr(0, std::min<std::size_t>(name.size(), 18)) + ")";
    auto fmt = [&](const char* key) {
      if (!s.contains(key) || !s[key].is_number()) return std::string("-");
      std::ostringstream o;
      o << std::setprecision(4) << s[key].get<double>();
      return o.str();
    };
    md << "| " << name << " | " << s.value("command", std::string("-")) << " | " << variant << " | " << fmt("final_mse")
       << " | " << fmt("rel_l2_tau40") << " | " << fmt("rel_l2_tau99") << " |\n";
    if (fs::exists(run / "loss.csv")) {
      auto cols = read_csv(run / "loss.csv");
      loss.push_back({label, cols["iteration"], cols["mse"], color});
    }
    if (fs::exists(run / "rel_l2.csv")) {
      auto cols = read_csv(run / "rel_l2.csv");
      err.push_back({label, cols["tau"], cols["rel_l2"], color});
    }
    runs.push_back({{"path", run.string()}, {"summary", s}});
  }
  if (!loss.empty()) write_text(dir / "loss.svg", plot_svg({"training loss", "iteration", "MSE", true}, loss));
  if (!err.empty()) write_text(dir / "rel_l2.svg", plot_svg({"relative L2 error over time", "tau", "relative L2", true}, err));
  write_text(dir / "report.md", md.str());
  summary["runs"] = runs;
  log << "report: " << c.runs.size() << " runs\n" << md.str();
  return kExitOk;
}

void check_inputs(const std::string& command, const RunConfig& c) {
  if (command == "train" || command == "evaluate") {
    if (c.dataset.empty()) throw ConfigError("io.dataset", "required by " + command);
    if (!fs::exists(c.dataset / "manifest.tsv")) throw FormatError("missing dataset: no manifest.tsv in " + c.dataset.string());
  }
  if (command == "evaluate") {
    if (c.checkpoint.empty()) throw ConfigError("io.checkpoint", "required by evaluate");
    if (!fs::exists(c.checkpoint)) throw FormatError("missing checkpoint " + c.checkpoint.string());
  }
  if (command == "report") {
    if (c.runs.empty()) throw ConfigError("io.runs", "required by report");
    for (const auto& r : c.runs)
      if (!fs::is_directory(r)) throw FormatError("missing run directory " + r.string());
  }
  if (command == "generate")
    for (std::size_t k = 0; k < c.case_spec.param_values.size(); ++k) {
      try {
        c.case_spec.domain_for(c.domain, k).validate();
      } catch (const ConfigError& e) {
        throw ConfigError("domain." + e.parameter(), "invalid for sample " + std::to_string(k));
      }
    }
}

}  // namespace

fs::path default_run_root() {
  const char* env = std::getenv("CPD_RUN_ROOT");
  return env && *env ? fs::path(env) : fs::path("runs");
}

std::string config_hash(const std::string& command, const RunConfig& config) {
  const std::string text = command + "\n" + config.to_json().dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

LoadedDataset load_dataset(const fs::path& dir) {
  std::istringstream in(read_text(dir / "manifest.tsv"));
  LoadedDataset out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("sample_id", 0) == 0) continue;
    std::vector<std::string> cells;
    std::stringstream row(line);
    std::string cell;
    while (std::getline(row, cell, '\t')) cells.push_back(cell);
    if (cells.size() != 6) throw FormatError("malformed manifest row: " + line);
    ++out.listed;
    if (cells[2] != "ok") continue;
    out.samples.push_back(read_trajectory(dir / cells[5]));
  }
  if (out.samples.empty()) throw FormatError("dataset " + dir.string() + " has no usable samples");
  std::sort(out.samples.begin(), out.samples.end(), [](const Trajectory& a, const Trajectory& b) { return a.sample_id < b.sample_id; });
  const auto tag = out.samples.front().case_tag;
  if (tag < 1 || tag > 3) throw FormatError("dataset samples carry no case tag");
  for (const auto& t : out.samples)
    if (t.case_tag != tag) throw FormatError("dataset mixes case families");
  return out;
}

TrainSplit split_for(std::size_t n_samples, CaseId id, std::size_t n_test) {
  if (n_samples == static_cast<std::size_t>(CaseSpec::preset(id).n_samples)) return full_split(id);
  if (n_test == 0) {
    TrainSplit s;
    for (std::size_t k = 0; k < n_samples; ++k) s.train_ids.push_back(k);
    return s;
  }
  return make_split(n_samples, n_test);
}

CommandOutcome run_command(const std::string& command, const fs::path& config_path, const CommandOptions& options,
                           std::ostream& log, std::ostream& err) {
  using Body = int (*)(const RunConfig&, const fs::path&, std::ostream&, json&);
  static const std::map<std::string, Body> bodies{{"mesh", cmd_mesh},         {"validate", cmd_validate},
                                                  {"simulate", cmd_simulate}, {"generate", cmd_generate},
                                                  {"train", cmd_train},       {"evaluate", cmd_evaluate},
                                                  {"report", cmd_report}};
  CommandOutcome outcome;
  const auto body = bodies.find(command);
  if (body == bodies.end()) {
    err << "unknown command '" << command << "'\n";
    outcome.exit_code = kExitConfig;
    return outcome;
  }

  RunConfig config;
  std::string config_text;
  try {
    config_text = read_text(config_path);
    config = load_config(config_path);
    check_inputs(command, config);
  } catch (const ConfigError& e) {
    err << "configuration error in " << config_path.string() << ": " << e.what() << "\n";
    outcome.exit_code = kExitConfig;
    return outcome;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    outcome.exit_code = kExitRuntime;
    return outcome;
  }

  const fs::path root = options.run_root.empty() ? default_run_root() : options.run_root;
  const fs::path final_dir = root / (command + "-" + config_hash(command, config));
  if (fs::exists(final_dir) && !options.force) {
    err << "run directory " << final_dir.string() << " already exists (use --force to replace it)\n";
    outcome.exit_code = kExitConfig;
    return outcome;
  }
  const fs::path staging = root / ("." + final_dir.filename().string() + ".partial-" + std::to_string(::getpid()));
  try {
    fs::create_directories(staging);
    json summary;
    summary["command"] = command;
    log << command << " -> " << final_dir.string() << "\n" << std::flush;
    const int code = body->second(config, staging, log, summary);
    summary["exit_code"] = code;
    write_text(staging / "config.ini", config_text);
    write_text(staging / "config.json", config.to_json().dump(2) + "\n");
    write_text(staging / "summary.json", summary.dump(2) + "\n");
    if (fs::exists(final_dir)) fs::remove_all(final_dir);
    fs::rename(staging, final_dir);
    outcome.exit_code = code;
    outcome.run_dir = final_dir;
  } catch (const ConfigError& e) {
    fs::remove_all(staging);
    err << "configuration error: " << e.what() << "\n";
    outcome.exit_code = kExitConfig;
  } catch (const std::exception& e) {
    std::error_code ec;
    fs::remove_all(staging, ec);
    err << "error: " << e.what() << "\n";
    outcome.exit_code = kExitRuntime;
  }
  return outcome;
}

}  // namespace cpd::cli
