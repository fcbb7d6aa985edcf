#include "cpd/simulation.hpp"

#include "cpd/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cpd {

void LoadingProtocol::validate() const {
  if (n_load_steps <= 0) throw ConfigError("n_load_steps", "must be positive");
  if (relax_substeps < 1) throw ConfigError("relax_substeps", "must be at least 1");
  if (equilibration_steps < 0) throw ConfigError("equilibration_steps", "must be non-negative");
  if (dt < 0 || !std::isfinite(dt)) throw ConfigError("dt", "must be positive (or 0 for automatic)");
  if (!std::isfinite(total_displacement)) throw ConfigError("total_displacement", "must be finite");
  if (!(damping_ratio >= 0)) throw ConfigError("damping_ratio", "must be non-negative");
}

double stable_dt_bound(double spacing, const MaterialModel& mat) {
  return 0.2 * spacing * std::sqrt(mat.density / mat.youngs_modulus);
}

double default_damping(const ParticleSystem& system, const MaterialModel& mat, double spacing,
                       double damping_ratio) {
  const double mean_mass =
      std::accumulate(system.masses.begin(), system.masses.end(), 0.0) / static_cast<double>(system.size());
  const double k_eff = mat.youngs_modulus * spacing;
  return 2.0 * damping_ratio * std::sqrt(k_eff * mean_mass);
}

BoundaryConditions BoundaryConditions::free(std::size_t n) {
  return {std::vector<std::uint8_t>(n, 0), std::vector<std::uint8_t>(n, 0), std::vector<double>(n, 0.0)};
}

BoundaryConditions BoundaryConditions::from_tags(const ParticleSystem& system, const LoadingProtocol& protocol) {
  auto bc = free(system.size());
  bool x_anchored = false;
  for (std::size_t i = 0; i < system.size(); ++i) {
    const auto tag = system.tags[i];
    if (tag == BoundaryTag::top || tag == BoundaryTag::bottom) {
      bc.fix_y[i] = 1;
      bc.share[i] = tag == BoundaryTag::top ? 0.5 : -0.5;
      if (protocol.grip == GripMode::clamped) bc.fix_x[i] = 1;
    }
    if (protocol.symmetric_left_edge && system.ref_positions[i].x() == 0.0) bc.fix_x[i] = 1;
    x_anchored = x_anchored || bc.fix_x[i];
  }
  // Roller grips leave a rigid x translation; pin the bottom-left corner.
  if (!x_anchored) {
    std::size_t corner = 0;
    for (std::size_t i = 1; i < system.size(); ++i) {
      const auto& p = system.ref_positions[i];
      const auto& q = system.ref_positions[corner];
      if (p.y() < q.y() || (p.y() == q.y() && p.x() < q.x())) corner = i;
    }
    bc.fix_x[corner] = 1;
  }
  return bc;
}

void integrate(ParticleSystem& system, std::span<const Vec2> forces, double dt,
               const BoundaryConditions& bc, double applied_displacement, const StepContext& ctx) {
  const bool constrained = !bc.fix_x.empty();
  const double c = system.damping;
  for (std::size_t i = 0; i < system.size(); ++i) {
    const Vec2& f = forces[i];
    if (!std::isfinite(f.x()) || !std::isfinite(f.y()))
      throw DivergenceError(i, ctx.substep, ctx.tau, ctx.sample_id);
    const double m = system.masses[i];
    Vec2& v = system.velocities[i];
    Vec2& y = system.cur_positions[i];
    const double relax = 1.0 / (1.0 + (c / m) * dt);
    for (int d = 0; d < 2; ++d) {
      const bool fixed = constrained && (d == 0 ? bc.fix_x[i] : bc.fix_y[i]);
      if (fixed) {
        const double target =
            system.ref_positions[i][d] + (d == 1 ? bc.share[i] * applied_displacement : 0.0);
        v[d] = (target - y[d]) / dt;
        y[d] = target;
      } else {
        v[d] = (v[d] + (f[d] / m) * dt) * relax;
        y[d] += v[d] * dt;
      }
    }
    if (!std::isfinite(y.x()) || !std::isfinite(y.y()))
      throw DivergenceError(i, ctx.substep, ctx.tau, ctx.sample_id);
  }
}

void step(ParticleSystem& system, const Triangulation& mesh, const MaterialModel& mat, double dt,
          const BoundaryConditions& bc, double applied_displacement, const StepContext& ctx) {
  const auto f = assemble_forces(system, mesh, mat);
  integrate(system, f, dt, bc, applied_displacement, ctx);
}

Simulation::Simulation(ParticleSystem system, Triangulation mesh, MaterialModel mat, BoundaryConditions bc)
    : system_(std::move(system)), mesh_(std::move(mesh)), mat_(std::move(mat)), bc_(std::move(bc)) {
  rinv_.reserve(mesh_.size());
  for (const auto& tri : mesh_.triangles) rinv_.push_back(reference_edge_inverse(tri, system_.ref_positions));
  forces_.assign(system_.size(), Vec2::Zero());
}

std::vector<std::uint32_t> Simulation::compute_forces(bool check_failure) {
  std::vector<std::uint32_t> killed;
  std::fill(forces_.begin(), forces_.end(), Vec2::Zero());
  const auto& y = system_.cur_positions;
  const Eigen::Matrix3d& C = mat_.C;
  for (std::size_t t = 0; t < mesh_.size(); ++t) {
    if (!mesh_.alive[t]) continue;
    const auto& tri = mesh_.triangles[t];
    Mat2 D;
    D.col(0) = y[tri[1]] - y[tri[0]];
    D.col(1) = y[tri[2]] - y[tri[0]];
    const Mat2 F = D * rinv_[t];
    const Mat2 E = lagrangian_strain(F);
    const Eigen::Vector3d s = C * voigt_strain(E);
    if (check_failure) {
      const double mean = 0.5 * (s(0) + s(1));
      const double half_diff = 0.5 * (s(0) - s(1));
      const double radius = std::sqrt(half_diff * half_diff + s(2) * s(2));
      if (violates_strength({mean + radius, mean - radius}, mat_)) {
        mesh_.alive[t] = 0;
        killed.push_back(static_cast<std::uint32_t>(t));
        continue;
      }
    }
    Mat2 S;
    S << s(0), s(2), s(2), s(1);
    const Mat2 G = mesh_.ref_area[t] * F * S * rinv_[t].transpose();
    forces_[tri[0]] += G.col(0) + G.col(1);
    forces_[tri[1]] -= G.col(0);
    forces_[tri[2]] -= G.col(1);
  }
  return killed;
}

std::vector<std::uint32_t> Simulation::substep(double dt, double applied_displacement, bool check_failure,
                                               const StepContext& ctx) {
  auto killed = compute_forces(check_failure);
  integrate(system_, forces_, dt, bc_, applied_displacement, ctx);
  return killed;
}

double Simulation::strain_energy() const { return cpd::strain_energy(system_, mesh_, mat_); }

double Simulation::kinetic_energy() const {
  double k = 0.0;
  for (std::size_t i = 0; i < system_.size(); ++i) k += 0.5 * system_.masses[i] * system_.velocities[i].squaredNorm();
  return k;
}

RunResult run_quasi_static(const DomainSpec& spec, const MaterialModel& mat, const LoadingProtocol& protocol,
                           long sample_id, const std::function<void(double)>& progress) {
  spec.validate();
  mat.validate();
  protocol.validate();

  const double pitch = grid_pitch(spec);
  const double bound = stable_dt_bound(pitch, mat);
  const double dt = protocol.dt > 0 ? protocol.dt : bound;
  if (dt > bound * (1.0 + 1e-12))
    throw ConfigError("dt", "exceeds the stability bound " + std::to_string(bound));

  ParticleSystem system = seed_particles(spec);
  Triangulation mesh = triangulate(system, spec);
  lump_masses(system, mesh, mat.density, pitch);
  system.damping = protocol.damping >= 0 ? protocol.damping
                                         : default_damping(system, mat, pitch, protocol.damping_ratio);

  RunResult result;
  result.dt = dt;
  result.damping = system.damping;
  Trajectory& traj = result.trajectory;
  traj.sample_id = static_cast<std::uint32_t>(sample_id);
  traj.domain = spec;
  traj.triangles = mesh.triangles;
  traj.frames.reserve(kSnapshotCount);
  traj.frames.push_back({system.cur_positions, mesh.alive});

  auto bc = BoundaryConditions::from_tags(system, protocol);
  Simulation sim(std::move(system), std::move(mesh), mat, std::move(bc));

  const long total = protocol.total_substeps();
  const long ramp = static_cast<long>(protocol.n_load_steps) * protocol.relax_substeps;
  int next_tau = 1;
  auto substep_of = [&](int tau) { return std::lround(static_cast<double>(tau) * total / (kSnapshotCount - 1)); };

  for (long k = 1; k <= total; ++k) {
    const double load = protocol.total_displacement * std::min(1.0, static_cast<double>(k) / ramp);
    const StepContext ctx{k, next_tau, sample_id};
    const auto killed = sim.substep(dt, load, protocol.fracture_enabled, ctx);
    if (!killed.empty()) {
      if (result.first_failure_substep < 0) result.first_failure_substep = k;
      result.dead_triangles += killed.size();
    }
    while (next_tau < kSnapshotCount && substep_of(next_tau) <= k) {
      traj.frames.push_back({sim.system().cur_positions, sim.mesh().alive});
      ++next_tau;
    }
    if (progress && k % 1000 == 0) progress(static_cast<double>(k) / total);
  }
  while (static_cast<int>(traj.frames.size()) < kSnapshotCount)
    traj.frames.push_back({sim.system().cur_positions, sim.mesh().alive});
  return result;
}

}  // namespace cpd
