#pragma once

#include "config.hpp"

#include "cpd/dataset.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace cpd::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailed = 1,    // ran to completion but a check failed (or no sample succeeded)
  kExitConfig = 2,    // bad command line or configuration; nothing was written
  kExitPartial = 3,   // generate: some samples failed
  kExitRuntime = 4,   // missing input, unreadable file, numerical failure
};

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"mesh", "validate", "simulate", "generate", "train", "evaluate", "report"};
  return names;
}

struct CommandOptions {
  std::filesystem::path run_root;  // empty: $CPD_RUN_ROOT, else ./runs
  bool force = false;              // replace an existing run directory
};

struct CommandOutcome {
  int exit_code = kExitOk;
  std::filesystem::path run_dir;  // empty when nothing was written
};

/// Parses the configuration, runs the command into a staging directory and moves it to
/// <run root>/<command>-<config hash> once finished. Progress goes to `log`, problems to `err`.
CommandOutcome run_command(const std::string& command, const std::filesystem::path& config_path,
                           const CommandOptions& options, std::ostream& log, std::ostream& err);

/// 16 hex digits of FNV-1a over the command name and the effective configuration.
std::string config_hash(const std::string& command, const RunConfig& config);

std::filesystem::path default_run_root();

struct LoadedDataset {
  std::vector<Trajectory> samples;  // successful samples, ascending sample id
  std::size_t listed = 0;           // rows in the manifest
};

/// Reads manifest.tsv and every sample marked ok. Throws FormatError when the manifest is
/// missing or lists no usable sample.
LoadedDataset load_dataset(const std::filesystem::path& dir);

/// full_split for a full-size family, else make_split(n, n_test).
TrainSplit split_for(std::size_t n_samples, CaseId id, std::size_t n_test);

}  // namespace cpd::cli
