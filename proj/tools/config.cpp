#include "config.hpp"

#include "cpd/errors.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace cpd::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  double x = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(x))
    throw ConfigError(key, "expected a number, got '" + v + "'");
  return x;
}

long to_long(const std::string& key, const std::string& v) {
  long x = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError(key, "expected an integer, got '" + v + "'");
  return x;
}

std::uint64_t to_seed(const std::string& key, const std::string& v) {
  std::uint64_t x = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError(key, "expected a non-negative integer, got '" + v + "'");
  return x;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
  if (v == "false" || v == "no" || v == "off" || v == "0") return false;
  throw ConfigError(key, "expected true or false, got '" + v + "'");
}

double positive(const std::string& key, double x) {
  if (!(x > 0)) throw ConfigError(key, "must be positive");
  return x;
}

double non_negative(const std::string& key, double x) {
  if (!(x >= 0)) throw ConfigError(key, "must be non-negative");
  return x;
}

long at_least(const std::string& key, long x, long lo) {
  if (x < lo) throw ConfigError(key, "must be at least " + std::to_string(lo));
  return x;
}

BenchmarkKind to_benchmark(const std::string& key, const std::string& v) {
  if (v == "crack") return BenchmarkKind::crack;
  if (v == "hole") return BenchmarkKind::hole;
  if (v == "interaction") return BenchmarkKind::interaction;
  throw ConfigError(key, "unknown benchmark '" + v + "'");
}

double desk_spacing(CaseId id) {
  switch (id) {
    case CaseId::case1: return 0.25;
    case CaseId::case2: return 0.25;
    case CaseId::case3: return 0.16;
  }
  return 0.2;
}

struct Setter {
  std::function<void(RunConfig&, const std::string& key, const std::string& value)> apply;
};

using Schema = std::map<std::string, std::map<std::string, Setter>>;

// Keys that need nothing beyond a parse and a range check. Keys handled before presets are
// applied (scale, case.id, case.samples, case.values, train.variant) are no-ops here.
const Schema& schema() {
  static const Schema s = [] {
    Schema m;
    auto noop = Setter{[](RunConfig&, const std::string&, const std::string&) {}};
    m[""]["scale"] = noop;

    auto& d = m["domain"];
    d["width"] = {[](RunConfig& c, const std::string& k, const std::string& v) { c.domain.width = positive(k, to_double(k, v)); }};
    d["height"] = {[](RunConfig& c, const std::string& k, const std::string& v) { c.domain.height = positive(k, to_double(k, v)); }};
    d["hole_x"] = {[](RunConfig& c, const std::string& k, const std::string& v) { c.domain.hole_center.x() = to_double(k, v); }};
    d["hole_y"] = {[](RunConfig& c, const std::string& k, const std::string& v) { c.domain.hole_center.y() = to_double(k, v); }};
    d["hole_radius"] = {[](RunConfig& c, const std::string& k, const std::string& v) { c.domain.hole_radius = non_negative(k, to_double(k, v)); }};
    d["notch_tip_x"] = {[](RunConfig& c, const std::string& k, const std::string& v) { c.domain.notch_tip_x = non_negative(k, to_double(k, v)); }};
    d["notch_height"] = {[](RunConfig& c, const std::string& k, const std::string& v) { c.domain.notch_height = non_negative(k, to_double(k, v)); }};
    d["spacing"] = {[](RunConfig& c, const std::string& k, const std::string& v) { c.domain.target_spacing = positive(k, to_double(k, v)); }};
    d["seed"] = {[](RunConfig& c, const std::string& k, const std::string& v) { c.domain.seed = to_seed(k, v); }};

    auto& mt = m["material"];
    mt["youngs_modulus"] = {[](RunConfig& c, const std::string& k, const std::string& v) { c.material.youngs_modulus = positive(k, to_double(k, v)); }};
    mt["poisson_ratio"] = {[](RunConfig& c, const std::string& k, const std::string& v) { c.material.poisson_ratio = to_double(k, v); }};
    mt["closure"] = {[](RunConfig& c, const std::string& k, const std::string& v) {
      if (v == "stress") c.material.closure = PlaneClosure::stress;
      else if (v == "strain") c.material.closure = PlaneClosure::strain;
      else throw ConfigError(k, "expected stress or strain, got '" + v + "'");
    }};
    mt["tensile_strength"] = {[](RunConfig& c, const std::string& k, const std::string& v) { c.material.tensile_strength = positive(k, to_double(k, v)); }};
    mt["compressive_strength"] = {[](RunConfig& c, const std::string& k, const std::string& v) { c.material.compressive_strength = positive(k, to_double(k, v)); }};
    mt["density"] = {[](RunConfig& c, const std::string& k, const std::string& v) { c.material.density = positive(k, to_double(k, v)); }};

    auto& p = m["protocol"];
    p["displacement"] = {[](RunConfig& c, const std::string& k, const std::string& v) { c.protocol.total_displacement = to_double(k, v); }};
    p["load_steps"] = {[](RunConfig& c, const std::string& k, const std::string& v) { c.protocol.n_load_steps = static_cast<int>(at_least(k, to_long(k, v), 1)); }};
    p["relax_substeps"] = {[](RunConfig& c, const std::string& k, const std::string& v) { c.protocol.relax_substeps = static_cast<int>(at_least(k, to_long(k, v), 1)); }};
    p["equilibration_steps"] = {[](RunConfig& c, const std::string& k, const std::string& v) { c.protocol.equilibration_steps = static_cast<int>(at_least(k, to_long(k, v), 0)); }};
    p["dt"] = {[](RunConfig& c, const std::string& k, const std::string& v) { c.protocol.dt = non_negative(k, to_double(k, v)); }};
    p["fracture"] = {[](RunConfig& c, const std::string& k, const std::string& v) { c.protocol.fracture_enabled = to_bool(k, v); }};
    p["damping_ratio"] = {[](RunConfig& c, const std::string& k, const std::string& v) { c.protocol.damping_ratio = non_negative(k, to_double(k, v)); }};
    p["damping"] = {[](RunConfig& c, const std::string& k, const std::string& v) { c.protocol.damping = non_negative(k, to_double(k, v)); }};
    p["grip"] = {[](RunConfig& c, const std::string& k, const std::string& v) {
      if (v == "roller") c.protocol.grip = GripMode::roller;
      else if (v == "clamped") c.protocol.grip = GripMode::clamped;
      else throw ConfigError(k, "expected roller or clamped, got '" + v + "'");
    }};
    p["symmetric_left_edge"] = {[](RunConfig& c, const std::string& k, const std::string& v) { c.protocol.symmetric_left_edge = to_bool(k, v); }};

    auto& cs = m["case"];
    cs["id"] = noop;
    cs["samples"] = noop;
    cs["values"] = noop;
    cs["n_test"] = {[](RunConfig& c, const std::string& k, const std::string& v) { c.n_test = static_cast<std::size_t>(at_least(k, to_long(k, v), 0)); }};
    cs["workers"] = {[](RunConfig& c, const std::string& k, const std::string& v) { c.workers = static_cast<int>(at_least(k, to_long(k, v), 1)); }};

    auto& t = m["train"];
    t["variant"] = noop;
    t["iterations"] = {[](RunConfig& c, const std::string& k, const std::string& v) { c.train.iterations = at_least(k, to_long(k, v), 1); }};
    t["schedule"] = {[](RunConfig& c, const std::string& k, const std::string& v) {
      if (v == "constant") c.train.schedule.kind = LearningRateSchedule::Kind::constant;
      else if (v == "exponential") c.train.schedule.kind = LearningRateSchedule::Kind::exponential;
      else throw ConfigError(k, "expected constant or exponential, got '" + v + "'");
    }};
    t["learning_rate"] = {[](RunConfig& c, const std::string& k, const std::string& v) { c.train.schedule.initial = positive(k, to_double(k, v)); }};
    t["decay_steps"] = {[](RunConfig& c, const std::string& k, const std::string& v) { c.train.schedule.decay_steps = positive(k, to_double(k, v)); }};
    t["decay_rate"] = {[](RunConfig& c, const std::string& k, const std::string& v) { c.train.schedule.decay_rate = positive(k, to_double(k, v)); }};
    t["batch"] = {[](RunConfig& c, const std::string& k, const std::string& v) {
      if (v == "full") c.train.batch_mode = TrainConfig::BatchMode::full;
      else if (v == "subset") c.train.batch_mode = TrainConfig::BatchMode::subset;
      else if (v == "minibatch") c.train.batch_mode = TrainConfig::BatchMode::minibatch;
      else throw ConfigError(k, "expected full, subset or minibatch, got '" + v + "'");
    }};
    t["batch_rows"] = {[](RunConfig& c, const std::string& k, const std::string& v) { c.train.batch_rows = static_cast<std::size_t>(at_least(k, to_long(k, v), 1)); }};
    t["monitor_rows"] = {[](RunConfig& c, const std::string& k, const std::string& v) { c.train.monitor_rows = static_cast<std::size_t>(at_least(k, to_long(k, v), 0)); }};
    t["log_every"] = {[](RunConfig& c, const std::string& k, const std::string& v) { c.train.log_every = at_least(k, to_long(k, v), 1); }};
    t["seed"] = {[](RunConfig& c, const std::string& k, const std::string& v) { c.train.seed = to_seed(k, v); }};
    t["hidden_layers"] = {[](RunConfig& c, const std::string& k, const std::string& v) { c.train.arch.hidden_layers = static_cast<int>(at_least(k, to_long(k, v), 1)); }};
    t["width"] = {[](RunConfig& c, const std::string& k, const std::string& v) { c.train.arch.width = static_cast<int>(at_least(k, to_long(k, v), 1)); }};
    t["latent"] = {[](RunConfig& c, const std::string& k, const std::string& v) { c.train.arch.latent = static_cast<int>(at_least(k, to_long(k, v), 1)); }};
    t["activation"] = {[](RunConfig& c, const std::string& k, const std::string& v) {
      if (v == "tanh") c.train.arch.activation = Activation::tanh;
      else if (v == "rowdy") c.train.arch.activation = Activation::rowdy;
      else throw ConfigError(k, "expected tanh or rowdy, got '" + v + "'");
    }};

    m["validate"]["benchmarks"] = {[](RunConfig& c, const std::string& k, const std::string& v) {
      c.benchmarks.clear();
      for (const auto& item : split_list(v)) c.benchmarks.push_back(to_benchmark(k, item));
      if (c.benchmarks.empty()) throw ConfigError(k, "needs at least one benchmark");
    }};

    auto& io = m["io"];
    io["dataset"] = {[](RunConfig& c, const std::string&, const std::string& v) { c.dataset = v; }};
    io["checkpoint"] = {[](RunConfig& c, const std::string&, const std::string& v) { c.checkpoint = v; }};
    io["runs"] = {[](RunConfig& c, const std::string& k, const std::string& v) {
      c.runs.clear();
      for (const auto& item : split_list(v)) c.runs.emplace_back(item);
      if (c.runs.empty()) throw ConfigError(k, "needs at least one run directory");
    }};
    return m;
  }();
  return s;
}

const IniEntry* find(const IniDocument& doc, const std::string& section, const std::string& key) {
  const auto s = doc.find(section);
  if (s == doc.end()) return nullptr;
  const auto e = s->second.find(key);
  return e == s->second.end() ? nullptr : &e->second;
}

std::string qualified(const std::string& section, const std::string& key) {
  return section.empty() ? key : section + "." + key;
}

// Base geometry of the case studies; the case overrides h or r per sample.
void apply_presets(RunConfig& c, CaseId id) {
  const bool desk = c.scale == Scale::desk;
  c.domain = DomainSpec{};
  c.domain.width = c.domain.height = 10.0;
  c.domain.hole_center = Vec2(5.0, 4.0);
  c.domain.hole_radius = 1.0;
  c.domain.notch_tip_x = 3.0;
  c.domain.notch_height = 1.0;
  c.domain.target_spacing = desk ? desk_spacing(id) : 0.08;
  c.material = MaterialModel::isotropic(210.0, 0.3, 0.4, 4.0, 7.85e-3);
  c.protocol = LoadingProtocol{};
  c.train = TrainConfig{};
  c.train.arch = Architecture::defaults(c.variant);
  c.train.schedule = c.variant == Variant::vanilla ? LearningRateSchedule::constant_rate(1e-4)
                                                   : LearningRateSchedule::exponential_decay();
  c.train.iterations = desk ? 8000 : (c.variant == Variant::vanilla ? 60000 : 50000);
  c.n_test = desk ? 2 : (id == CaseId::case3 ? 6 : 5);
}

}  // namespace

IniDocument parse_ini(const std::string& text) {
  IniDocument doc;
  std::string section;
  doc[section];
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto cut = raw.find_first_of("#;");
    const std::string line = trim(cut == std::string::npos ? raw : raw.substr(0, cut));
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where, "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw ConfigError(where, "empty section name");
      if (doc.count(section) && !doc[section].empty()) throw ConfigError(where, "section [" + section + "] repeated");
      doc[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where, "expected key = value");
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where, "missing key");
    if (value.empty()) throw ConfigError(where, "missing value for '" + key + "'");
    if (!doc[section].emplace(key, IniEntry{value, line_no}).second)
      throw ConfigError(where, "duplicate key '" + qualified(section, key) + "'");
  }
  return doc;
}

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  const IniDocument doc = parse_ini(text);
  const Schema& keys = schema();
  for (const auto& [section, entries] : doc) {
    const auto s = keys.find(section);
    if (s == keys.end()) throw ConfigError(section, "unknown section [" + section + "]");
    for (const auto& [key, entry] : entries)
      if (!s->second.count(key))
        throw ConfigError(qualified(section, key), "unknown key (line " + std::to_string(entry.line) + ")");
  }

  RunConfig c;
  if (const auto* e = find(doc, "", "scale")) c.scale = parse_scale(e->value);
  CaseId id = CaseId::case2;
  if (const auto* e = find(doc, "case", "id")) id = parse_case_id(e->value);
  if (const auto* e = find(doc, "train", "variant")) {
    try {
      c.variant = parse_variant(e->value);
    } catch (const ConfigError& err) {
      throw ConfigError("train.variant", err.what());
    }
  }
  apply_presets(c, id);

  if (const auto* e = find(doc, "case", "values")) {
    c.case_spec = CaseSpec::preset(id, 2);
    c.case_spec.param_values.clear();
    for (const auto& item : split_list(e->value)) c.case_spec.param_values.push_back(to_double("case.values", item));
    if (c.case_spec.param_values.empty()) throw ConfigError("case.values", "needs at least one value");
    if (find(doc, "case", "samples")) throw ConfigError("case.samples", "cannot be combined with case.values");
    c.case_spec.n_samples = static_cast<int>(c.case_spec.param_values.size());
  } else if (const auto* e = find(doc, "case", "samples")) {
    c.case_spec = CaseSpec::preset(id, static_cast<int>(at_least("case.samples", to_long("case.samples", e->value), 2)));
  } else {
    c.case_spec = c.scale == Scale::desk ? CaseSpec::preset(id, 10) : CaseSpec::preset(id);
  }

  for (const auto& [section, entries] : doc)
    for (const auto& [key, entry] : entries) keys.at(section).at(key).apply(c, qualified(section, key), entry.value);

  auto checked = [](const std::string& section, const auto& fn) {
    try {
      fn();
    } catch (const ConfigError& e) {
      throw ConfigError(section + "." + e.parameter(), std::string(e.what()).substr(e.parameter().size() + 2));
    }
  };
  c.material.update_constitutive();
  checked("material", [&] { c.material.validate(); });
  checked("protocol", [&] { c.protocol.validate(); });
  checked("train", [&] { c.train.validate(); });
  checked("case", [&] { c.case_spec.validate(); });
  checked("domain", [&] {
    if (find(doc, "case", "id") || find(doc, "case", "values") || find(doc, "case", "samples")) {
      for (std::size_t k = 0; k < c.case_spec.param_values.size(); ++k) c.case_spec.domain_for(c.domain, k).validate();
    } else {
      c.domain.validate();
    }
  });
  if (c.n_test >= c.case_spec.param_values.size()) throw ConfigError("case.n_test", "must leave at least one training sample");

  for (auto* p : {&c.dataset, &c.checkpoint})
    if (!p->empty() && p->is_relative()) *p = base_dir / *p;
  for (auto& p : c.runs)
    if (p.is_relative()) p = base_dir / p;
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot read " + path.string());
  std::stringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.parent_path());
}

nlohmann::json RunConfig::to_json() const {
  using nlohmann::json;
  json j;
  j["scale"] = to_string(scale);
  j["domain"] = {{"width", domain.width},
                 {"height", domain.height},
                 {"hole_x", domain.hole_center.x()},
                 {"hole_y", domain.hole_center.y()},
                 {"hole_radius", domain.hole_radius},
                 {"notch_tip_x", domain.notch_tip_x},
                 {"notch_height", domain.notch_height},
                 {"spacing", domain.target_spacing},
                 {"seed", domain.seed}};
  j["material"] = {{"youngs_modulus", material.youngs_modulus},
                   {"poisson_ratio", material.poisson_ratio},
                   {"closure", material.closure == PlaneClosure::stress ? "stress" : "strain"},
                   {"tensile_strength", material.tensile_strength},
                   {"compressive_strength", material.compressive_strength},
                   {"density", material.density}};
  j["protocol"] = {{"displacement", protocol.total_displacement},
                   {"load_steps", protocol.n_load_steps},
                   {"relax_substeps", protocol.relax_substeps},
                   {"equilibration_steps", protocol.equilibration_steps},
                   {"dt", protocol.dt},
                   {"fracture", protocol.fracture_enabled},
                   {"damping_ratio", protocol.damping_ratio},
                   {"damping", protocol.damping},
                   {"grip", protocol.grip == GripMode::roller ? "roller" : "clamped"},
                   {"symmetric_left_edge", protocol.symmetric_left_edge}};
  j["case"] = {{"id", to_string(case_spec.case_id)},
               {"values", case_spec.param_values},
               {"fixed", case_spec.fixed_param},
               {"n_test", n_test},
               {"workers", workers}};
  const char* batch = train.batch_mode == TrainConfig::BatchMode::full     ? "full"
                      : train.batch_mode == TrainConfig::BatchMode::subset ? "subset"
                                                                            : "minibatch";
  j["train"] = {{"variant", to_string(variant)},
                {"iterations", train.iterations},
                {"schedule", train.schedule.kind == LearningRateSchedule::Kind::constant ? "constant" : "exponential"},
                {"learning_rate", train.schedule.initial},
                {"decay_steps", train.schedule.decay_steps},
                {"decay_rate", train.schedule.decay_rate},
                {"batch", batch},
                {"batch_rows", train.batch_rows},
                {"monitor_rows", train.monitor_rows},
                {"log_every", train.log_every},
                {"seed", train.seed},
                {"hidden_layers", train.arch.hidden_layers},
                {"width", train.arch.width},
                {"latent", train.arch.latent},
                {"activation", train.arch.activation == Activation::rowdy ? "rowdy" : "tanh"}};
  std::vector<std::string> names;
  for (auto b : benchmarks) names.push_back(to_string(b));
  j["validate"] = {{"benchmarks", names}};
  std::vector<std::string> run_paths;
  for (const auto& r : runs) run_paths.push_back(r.string());
  j["io"] = {{"dataset", dataset.string()}, {"checkpoint", checkpoint.string()}, {"runs", run_paths}};
  return j;
}

}  // namespace cpd::cli
