#pragma once

#include "cpd/geometry.hpp"
#include "cpd/material.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace cpd {

using Triple = std::array<std::uint32_t, 3>;

struct PrincipalStresses {
  double s1 = 0.0;  // s1 >= s2
  double s2 = 0.0;
};

struct TriangleKinematics {
  Mat2 F = Mat2::Identity();
  Mat2 E = Mat2::Zero();
  PrincipalStresses principal;
};

/// Inverse of the reference edge matrix [x_b - x_a, x_c - x_a].
/// Throws DegenerateTriangleError when |det| < 1e-12.
Mat2 reference_edge_inverse(const Triple& tri, std::span<const Vec2> x);

/// Linear map F_d taking the reference edges of `tri` onto the current ones.
Mat2 deformation_gradient(const Triple& tri, std::span<const Vec2> x, std::span<const Vec2> y);

inline Mat2 lagrangian_strain(const Mat2& F) { return 0.5 * (F.transpose() * F - Mat2::Identity()); }

/// (E_xx, E_yy, 2 E_xy)
inline Eigen::Vector3d voigt_strain(const Mat2& E) { return {E(0, 0), E(1, 1), 2.0 * E(0, 1)}; }

/// Second Piola-Kirchhoff stress C * voigt(E), returned as (S_xx, S_yy, S_xy).
inline Eigen::Vector3d stress_voigt(const Mat2& E, const MaterialModel& mat) { return mat.C * voigt_strain(E); }

/// W = V * 1/2 e^T C e
double triangle_energy(const Mat2& E, double ref_area, const MaterialModel& mat);

/// Forces -dW/dy on (alpha, beta, gamma) in the order of `tri`.
std::array<Vec2, 3> triangle_forces(const Triple& tri, std::span<const Vec2> x,
                                    std::span<const Vec2> y, const MaterialModel& mat);

/// Net particle forces summed over alive triangles.
std::vector<Vec2> assemble_forces(const ParticleSystem& system, const Triangulation& mesh,
                                  const MaterialModel& mat);

/// Sum of triangle energies over alive triangles at the current positions.
double strain_energy(const ParticleSystem& system, const Triangulation& mesh, const MaterialModel& mat);

PrincipalStresses principal_stresses(const Mat2& E, const MaterialModel& mat);

TriangleKinematics triangle_kinematics(const Triple& tri, std::span<const Vec2> x,
                                       std::span<const Vec2> y, const MaterialModel& mat);

/// Kinematics of every triangle (dead ones included) at the current positions.
std::vector<TriangleKinematics> evaluate_kinematics(const ParticleSystem& system,
                                                    const Triangulation& mesh,
                                                    const MaterialModel& mat);

inline bool violates_strength(const PrincipalStresses& p, const MaterialModel& mat) {
  return p.s1 >= mat.tensile_strength || p.s2 <= -mat.compressive_strength;
}

/// Kills every alive triangle whose principal stresses violate the strength limits.
/// All kills in one call are decided on the same kinematics. Returns ascending ids.
std::vector<std::uint32_t> apply_failure(Triangulation& mesh, std::span<const TriangleKinematics> kin,
                                         const MaterialModel& mat);

}  // namespace cpd
