#include "cpd/mechanics.hpp"

#include "cpd/errors.hpp"

#include <cmath>

namespace cpd {

Mat2 reference_edge_inverse(const Triple& tri, std::span<const Vec2> x) {
  Mat2 R;
  R.col(0) = x[tri[1]] - x[tri[0]];
  R.col(1) = x[tri[2]] - x[tri[0]];
  const double det = R.determinant();
  if (std::abs(det) < 1e-12)
    throw DegenerateTriangleError("reference edge matrix is singular (det " + std::to_string(det) + ")");
  return R.inverse();
}

Mat2 deformation_gradient(const Triple& tri, std::span<const Vec2> x, std::span<const Vec2> y) {
  Mat2 D;
  D.col(0) = y[tri[1]] - y[tri[0]];
  D.col(1) = y[tri[2]] - y[tri[0]];
  return D * reference_edge_inverse(tri, x);
}

double triangle_energy(const Mat2& E, double ref_area, const MaterialModel& mat) {
  const Eigen::Vector3d e = voigt_strain(E);
  return ref_area * 0.5 * e.dot(mat.C * e);
}

std::array<Vec2, 3> triangle_forces(const Triple& tri, std::span<const Vec2> x,
                                    std::span<const Vec2> y, const MaterialModel& mat) {
  const Mat2 Rinv = reference_edge_inverse(tri, x);
  Mat2 D;
  D.col(0) = y[tri[1]] - y[tri[0]];
  D.col(1) = y[tri[2]] - y[tri[0]];
  const Mat2 F = D * Rinv;
  const Eigen::Vector3d s = stress_voigt(lagrangian_strain(F), mat);
  Mat2 S;
  S << s(0), s(2), s(2), s(1);
  const double V = 0.5 * std::abs(1.0 / Rinv.determinant());
  // dW/dD = V F S R^-T; columns are the gradients wrt y_beta and y_gamma.
  const Mat2 G = V * F * S * Rinv.transpose();
  return {Vec2(G.col(0) + G.col(1)), Vec2(-G.col(0)), Vec2(-G.col(1))};
}

std::vector<Vec2> assemble_forces(const ParticleSystem& system, const Triangulation& mesh,
                                  const MaterialModel& mat) {
  std::vector<Vec2> f(system.size(), Vec2::Zero());
  for (std::size_t t = 0; t < mesh.size(); ++t) {
    if (!mesh.alive[t]) continue;
    const auto& tri = mesh.triangles[t];
    const auto ft = triangle_forces(tri, system.ref_positions, system.cur_positions, mat);
    for (int k = 0; k < 3; ++k) f[tri[k]] += ft[k];
  }
  return f;
}

double strain_energy(const ParticleSystem& system, const Triangulation& mesh, const MaterialModel& mat) {
  double w = 0.0;
  for (std::size_t t = 0; t < mesh.size(); ++t) {
    if (!mesh.alive[t]) continue;
    const Mat2 F = deformation_gradient(mesh.triangles[t], system.ref_positions, system.cur_positions);
    w += triangle_energy(lagrangian_strain(F), mesh.ref_area[t], mat);
  }
  return w;
}

PrincipalStresses principal_stresses(const Mat2& E, const MaterialModel& mat) {
  const Eigen::Vector3d s = stress_voigt(E, mat);
  const double mean = 0.5 * (s(0) + s(1));
  const double half_diff = 0.5 * (s(0) - s(1));
  const double radius = std::sqrt(half_diff * half_diff + s(2) * s(2));
  return {mean + radius, mean - radius};
}

TriangleKinematics triangle_kinematics(const Triple& tri, std::span<const Vec2> x,
                                       std::span<const Vec2> y, const MaterialModel& mat) {
  TriangleKinematics k;
  k.F = deformation_gradient(tri, x, y);
  k.E = lagrangian_strain(k.F);
  k.principal = principal_stresses(k.E, mat);
  return k;
}

std::vector<TriangleKinematics> evaluate_kinematics(const ParticleSystem& system,
                                                    const Triangulation& mesh,
                                                    const MaterialModel& mat) {
  std::vector<TriangleKinematics> out;
  out.reserve(mesh.size());
  for (const auto& tri : mesh.triangles)
    out.push_back(triangle_kinematics(tri, system.ref_positions, system.cur_positions, mat));
  return out;
}

std::vector<std::uint32_t> apply_failure(Triangulation& mesh, std::span<const TriangleKinematics> kin,
                                         const MaterialModel& mat) {
  std::vector<std::uint32_t> killed;
  for (std::size_t t = 0; t < mesh.size(); ++t)
    if (mesh.alive[t] && violates_strength(kin[t].principal, mat)) killed.push_back(static_cast<std::uint32_t>(t));
  for (auto t : killed) mesh.alive[t] = 0;
  return killed;
}

}  // namespace cpd
