#pragma once

#include "cpd/geometry.hpp"
#include "cpd/material.hpp"
#include "cpd/mechanics.hpp"
#include "cpd/trajectory.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace cpd {

enum class GripMode {
  roller,  // loaded rows follow the applied y displacement, x stays free
  clamped  // loaded rows are fully prescribed
};

/// Quasi-static displacement loading: the top row moves by +delta/2, the bottom row by
/// -delta/2, ramped linearly over n_load_steps * relax_substeps substeps, followed by
/// equilibration_steps substeps at the final displacement.
struct LoadingProtocol {
  double total_displacement = 0.02;  // cm
  int n_load_steps = 100;
  int relax_substeps = 200;
  double dt = 0.0;  // 0 selects the stability bound
  int equilibration_steps = 2000;
  bool fracture_enabled = true;
  double damping_ratio = 0.7;
  double damping = -1.0;  // kg/s; negative selects 2 zeta sqrt(k_eff m)
  GripMode grip = GripMode::roller;
  bool symmetric_left_edge = false;  // u_x = 0 on x = 0 (mirror plane)

  long total_substeps() const {
    return static_cast<long>(n_load_steps) * relax_substeps + equilibration_steps;
  }
  void validate() const;
};

/// dt <= 0.2 * spacing * sqrt(rho / E)
double stable_dt_bound(double spacing, const MaterialModel& mat);

/// c = 2 zeta sqrt(k_eff m) with k_eff = E * spacing and m the mean particle mass.
double default_damping(const ParticleSystem& system, const MaterialModel& mat, double spacing,
                       double damping_ratio);

/// Per-particle kinematic constraints. A constrained component follows
/// ref + share * applied_displacement (share is only used for y).
struct BoundaryConditions {
  std::vector<std::uint8_t> fix_x;
  std::vector<std::uint8_t> fix_y;
  std::vector<double> share;

  static BoundaryConditions free(std::size_t n);
  static BoundaryConditions from_tags(const ParticleSystem& system, const LoadingProtocol& protocol);
};

/// Where a divergence happened, for error reporting.
struct StepContext {
  long substep = 0;
  int tau = 0;
  long sample_id = 0;
};

/// Semi-implicit Euler update of every unconstrained particle with the given forces.
void integrate(ParticleSystem& system, std::span<const Vec2> forces, double dt,
               const BoundaryConditions& bc, double applied_displacement, const StepContext& ctx = {});

/// One substep: forces from alive triangles, then integrate. Constrained components follow
/// the boundary conditions (none when bc is empty).
void step(ParticleSystem& system, const Triangulation& mesh, const MaterialModel& mat, double dt,
          const BoundaryConditions& bc = {}, double applied_displacement = 0.0,
          const StepContext& ctx = {});

/// Stateful driver with cached reference-edge inverses. Used by every long run.
class Simulation {
 public:
  Simulation(ParticleSystem system, Triangulation mesh, MaterialModel mat, BoundaryConditions bc);

  /// Evaluates kinematics at the current positions, kills failing triangles when asked,
  /// and assembles forces from the survivors. Returns the killed ids.
  std::vector<std::uint32_t> compute_forces(bool check_failure);

  /// compute_forces followed by integrate.
  std::vector<std::uint32_t> substep(double dt, double applied_displacement, bool check_failure,
                                     const StepContext& ctx = {});

  double strain_energy() const;
  /// Kinetic energy with the stored (half-step) velocities.
  double kinetic_energy() const;

  const ParticleSystem& system() const { return system_; }
  ParticleSystem& system() { return system_; }
  const Triangulation& mesh() const { return mesh_; }
  const MaterialModel& material() const { return mat_; }
  const std::vector<Vec2>& forces() const { return forces_; }
  const BoundaryConditions& boundary() const { return bc_; }

 private:
  ParticleSystem system_;
  Triangulation mesh_;
  MaterialModel mat_;
  BoundaryConditions bc_;
  std::vector<Mat2> rinv_;
  std::vector<Vec2> forces_;
};

struct RunResult {
  Trajectory trajectory;
  long first_failure_substep = -1;
  std::size_t dead_triangles = 0;
  double damping = 0.0;
  double dt = 0.0;
};

/// Seeds, meshes and runs one quasi-static loading history, recording 101 snapshots
/// uniformly spaced in substeps. `progress` (optional) receives the fraction done.
RunResult run_quasi_static(const DomainSpec& spec, const MaterialModel& mat,
                           const LoadingProtocol& protocol, long sample_id = 0,
                           const std::function<void(double)>& progress = {});

}  // namespace cpd
