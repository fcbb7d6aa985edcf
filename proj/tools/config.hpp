#pragma once

#include "cpd/dataset.hpp"
#include "cpd/material.hpp"
#include "cpd/operator.hpp"
#include "cpd/simulation.hpp"
#include "cpd/validation.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace cpd::cli {

/// `key = value` lines grouped under `[section]` headers. Keys before the first header belong
/// to the section "". `#` and `;` start comments.
struct IniEntry {
  std::string value;
  int line = 0;
};
using IniSection = std::map<std::string, IniEntry>;
using IniDocument = std::map<std::string, IniSection>;

/// Throws ConfigError (parameter "line N") on malformed lines or duplicate keys.
IniDocument parse_ini(const std::string& text);

/// Effective configuration of one command: presets for `scale` overlaid with the file's keys.
struct RunConfig {
  Scale scale = Scale::desk;
  DomainSpec domain;
  MaterialModel material;
  LoadingProtocol protocol;

  CaseSpec case_spec;
  int workers = 1;
  std::size_t n_test = 2;

  Variant variant = Variant::fusion;
  TrainConfig train;

  std::vector<BenchmarkKind> benchmarks{BenchmarkKind::crack, BenchmarkKind::hole, BenchmarkKind::interaction};

  std::filesystem::path dataset;
  std::filesystem::path checkpoint;
  std::vector<std::filesystem::path> runs;

  /// Every effective value, used for the run summary and the run directory hash.
  nlohmann::json to_json() const;
};

/// Parses and range-checks a configuration. Paths in [io] are resolved against `base_dir`.
/// Throws ConfigError naming `section.key` for unknown keys and invalid values.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

}  // namespace cpd::cli
