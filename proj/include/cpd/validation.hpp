#pragma once

#include "cpd/geometry.hpp"
#include "cpd/material.hpp"
#include "cpd/simulation.hpp"

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace cpd {

/// sigma_yy ahead of a crack tip: s_inf / sqrt(1 - (a/x)^2). Requires x > a > 0.
double westergaard(double x, double a, double far_field);

/// sigma_yy on the line through a hole center, perpendicular to the load. Requires x >= r > 0.
double kirsch(double x, double r, double far_field);

struct StressProfile {
  std::vector<double> sample_x;  // distance from the line origin, cm, strictly increasing
  std::vector<double> sigma_yy;  // GPa
  double far_field = 0.0;        // GPa
};

/// Horizontal sampling line. Samples are reported as x - origin_x.
struct ExtractionLine {
  double y = 0.0;
  double origin_x = 0.0;
  double x_from = 0.0;
  double x_to = 0.0;
};

/// Bins alive-triangle sigma_yy (constant per triangle, placed at the reference centroid) along
/// the line: centroids within bin_width/2 of the line, bins of width bin_width starting at
/// x_from, area-weighted. Empty bins are skipped. The far field is the area-weighted mean over
/// triangles in the bands of depth far_field_fraction * domain width along the loaded (top and
/// bottom) edges.
/// Throws ExtractionError when fewer than 5 bins are populated.
StressProfile extract_profile(std::span<const Vec2> ref, std::span<const Vec2> cur, const Triangulation& mesh,
                              const MaterialModel& mat, const ExtractionLine& line, double bin_width,
                              double far_field_fraction = 0.1);

struct ProfileError {
  double rms_rel = 0.0;
  double max_rel = 0.0;
  std::size_t samples = 0;
};

/// Relative RMS / max error against `analytic`, skipping the sample nearest the discontinuity
/// (the first one) and any sample outside [x_lo, x_hi].
ProfileError profile_error(const StressProfile& sim, const std::function<double(double)>& analytic,
                           double x_lo = -1e300, double x_hi = 1e300);

/// Writes x_cm, sigma_sim_GPa, sigma_analytic_GPa, rel_err. An empty `analytic` leaves the
/// last two columns as nan.
void write_profile_csv(std::ostream& out, const StressProfile& profile,
                       const std::function<double(double)>& analytic);

enum class BenchmarkKind { crack, hole, interaction };

struct BenchmarkSetup {
  BenchmarkKind kind = BenchmarkKind::hole;
  DomainSpec domain;
  LoadingProtocol protocol;
  double bin_width = 0.2;
  double range_lo = 1.2;  // error window in units of r (hole) or a (crack)
  double range_hi = 4.0;
  double rms_tolerance = 0.08;
  double scf_tolerance = 0.15;  // hole only: nearest bin vs the factor 3
};

struct BenchmarkResult {
  std::string name;
  StressProfile profile;
  ProfileError error;
  double nearest_ratio = 0.0;  // nearest bin sigma_yy / far field
  bool has_analytic = false;
  bool passed = false;
  std::size_t particles = 0;
  std::size_t triangles = 0;
  double seconds = 0.0;

  /// The closed form compared against (empty for the interaction benchmark).
  std::function<double(double)> analytic;
};

/// Runs an elastic (no failure) loading to the final displacement and compares the extracted
/// profile with the matching closed form.
BenchmarkResult run_benchmark(const BenchmarkSetup& setup, const MaterialModel& mat);

std::string to_string(BenchmarkKind kind);

enum class Scale { desk, full };

std::string to_string(Scale scale);
Scale parse_scale(const std::string& text);

/// Calibrated benchmark configurations. Desk: hole on a 7 x 7 plate (r = 1, spacing 0.15),
/// crack as an edge notch a = 1.5 on a 10 x 10 plate with a mirror left edge (spacing 0.2),
/// interaction on the case geometry (spacing 0.2). Full: spacing 0.08 on 10 x 10 plates.
/// Bins are 1.25 pitches wide.
BenchmarkSetup benchmark_preset(BenchmarkKind kind, Scale scale);

}  // namespace cpd
