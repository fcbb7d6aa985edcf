#pragma once

#include "cpd/geometry.hpp"
#include "cpd/material.hpp"
#include "cpd/simulation.hpp"
#include "cpd/trajectory.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace cpd {

enum class CaseId : std::uint8_t { case1 = 1, case2 = 2, case3 = 3 };

std::string to_string(CaseId id);
CaseId parse_case_id(const std::string& text);

/// One-parameter family of specimens. Cases 1 and 2 vary the notch height h at r = 1,
/// case 3 varies the hole radius r at h = 1.5.
struct CaseSpec {
  CaseId case_id = CaseId::case1;
  std::vector<double> param_values;
  double fixed_param = 1.0;
  bool fracture_enabled = false;
  int n_samples = 0;

  /// Full-size family: 40 / 50 / 51 samples.
  static CaseSpec preset(CaseId id);
  /// Same family with n_samples values spaced uniformly over the same range.
  static CaseSpec preset(CaseId id, int n_samples);

  double range_lo() const;
  double range_hi() const;

  /// `base` with h or r replaced by sample k's parameter.
  DomainSpec domain_for(const DomainSpec& base, std::size_t k) const;

  /// Throws ConfigError when the family does not match its case definition.
  void validate() const;
};

/// (r + h) / r <= 1.4
bool trapping_classifier(double r, double h);

/// True when, in frame `tau` (default: last), a connected cluster of dead triangles (connected
/// through shared particles) touches both the notch-tip neighbourhood and the hole rim.
bool crack_merges_hole(const Trajectory& traj, int tau = -1);

// --- snapshot files -------------------------------------------------------------------

inline constexpr std::uint32_t kTrajectoryVersion = 1;

void write_trajectory(const Trajectory& traj, std::ostream& out);
/// Writes to a temporary sibling and renames, so a crash never leaves a partial file.
void write_trajectory(const Trajectory& traj, const std::filesystem::path& path);
/// Throws FormatError on bad magic / version / truncation and ChecksumError on CRC mismatch.
Trajectory read_trajectory(std::istream& in);
Trajectory read_trajectory(const std::filesystem::path& path);

/// zlib CRC-32 of a byte range.
std::uint32_t crc32_of(std::span<const unsigned char> bytes);

// --- generation -----------------------------------------------------------------------

struct GenerationConfig {
  DomainSpec base;
  MaterialModel material;
  LoadingProtocol protocol;  // fracture flag is overridden by the case
  int workers = 1;
  std::filesystem::path output_dir;  // empty: keep results in memory only
  bool keep_trajectories = true;
};

struct SampleRecord {
  std::uint32_t sample_id = 0;
  double param = 0.0;
  bool ok = false;
  std::string status;  // "ok" or the failure cause
  std::filesystem::path file;
  int first_failure_tau = -1;
  bool merged = false;
  double seconds = 0.0;
};

struct GenerationResult {
  std::vector<SampleRecord> samples;     // ordered by sample id
  std::vector<Trajectory> trajectories;  // successful samples, ordered by sample id
  bool all_ok() const;
};

/// Runs one simulation per parameter value on `workers` threads. Diverged samples are
/// recorded as failed in the result (and the manifest) rather than dropped.
GenerationResult generate_case(const CaseSpec& spec, const GenerationConfig& config,
                               const std::function<void(const SampleRecord&)>& on_sample = {});

/// Tab-separated manifest: sample_id, param, status, first_failure_tau, merged, path.
void write_manifest(const std::filesystem::path& path, const CaseSpec& spec,
                    std::span<const SampleRecord> samples);

// --- training tensors -----------------------------------------------------------------

struct TrainSplit {
  std::vector<std::size_t> train_ids;
  std::vector<std::size_t> test_ids;

  /// Throws ConfigError unless the two lists are disjoint and cover 0..n-1.
  void validate(std::size_t n) const;
};

/// n_test held-out samples spread evenly through the parameter range (never the end points).
TrainSplit make_split(std::size_t n_samples, std::size_t n_test);
/// 35/5, 45/5 and 45/6 for the full-size families.
TrainSplit full_split(CaseId id);

/// Affine maps between physical quantities and network inputs / targets.
struct Normalization {
  double branch_min = 0.0, branch_max = 1.0;
  Eigen::Vector3d trunk_min = Eigen::Vector3d::Zero();  // x, y, tau / 100
  Eigen::Vector3d trunk_max = Eigen::Vector3d::Ones();
  Eigen::Vector2d target_mean = Eigen::Vector2d::Zero();  // cm
  Eigen::Vector2d target_std = Eigen::Vector2d::Ones();

  double branch(double param) const;
  Eigen::Vector3d trunk(double x, double y, double tau_fraction) const;
  Eigen::Vector2d standardize(const Eigen::Vector2d& u) const;
  Eigen::Vector2d destandardize(const Eigen::Vector2d& z) const;
};

/// Rows of one sample, tau-major: column tau * N + i is particle i at snapshot tau.
struct SampleTensors {
  std::uint32_t sample_id = 0;
  double param = 0.0;
  double branch = 0.0;  // normalized parameter
  std::size_t particles = 0;
  Eigen::Matrix3Xd trunk;    // normalized (x_ref, y_ref, tau / 100)
  Eigen::Matrix2Xd targets;  // standardized displacement
};

struct TrainingTensors {
  Normalization norm;
  std::vector<SampleTensors> train;
  std::vector<SampleTensors> test;

  std::size_t train_rows() const;
};

/// Normalization constants come from the training split only. Throws ConfigError when an
/// input range or a target spread is degenerate.
TrainingTensors build_training_tensors(std::span<const Trajectory> trajectories, const TrainSplit& split);

SampleTensors make_sample_tensors(const Trajectory& traj, const Normalization& norm);

}  // namespace cpd
