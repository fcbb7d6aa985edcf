#include "doctest.h"

#include "cpd/errors.hpp"
#include "cpd/material.hpp"
#include "cpd/mechanics.hpp"

#include "oracles.hpp"

#include <cmath>
#include <random>

using namespace cpd;
using cpd::testing::energy_oracle;

namespace {

MaterialModel steel() { return MaterialModel::isotropic(210.0, 0.3, 0.4, 4.0, 7.85e-3); }

}  // namespace

TEST_CASE("plane stress and plane strain stiffness") {
  const double E = 210.0, nu = 0.3;
  const auto Cs = isotropic_constitutive(E, nu, PlaneClosure::stress);
  CHECK(Cs(0, 0) == doctest::Approx(E / (1 - nu * nu)));
  CHECK(Cs(0, 1) == doctest::Approx(nu * E / (1 - nu * nu)));
  CHECK(Cs(2, 2) == doctest::Approx(E / (2 * (1 + nu))));
  CHECK(Cs(0, 2) == 0.0);
  const auto Ce = isotropic_constitutive(E, nu, PlaneClosure::strain);
  const double f = E / ((1 + nu) * (1 - 2 * nu));
  CHECK(Ce(0, 0) == doctest::Approx(f * (1 - nu)));
  CHECK(Ce(0, 1) == doctest::Approx(f * nu));
  CHECK(Ce(2, 2) == doctest::Approx(E / (2 * (1 + nu))));
}

TEST_CASE("material validation") {
  CHECK_NOTHROW(steel().validate());
  CHECK_THROWS_AS(MaterialModel::isotropic(-1, 0.3, 0.4, 4, 1).validate(), ConfigError);
  CHECK_THROWS_AS(MaterialModel::isotropic(210, 0.5, 0.4, 4, 1).validate(), ConfigError);
  CHECK_THROWS_AS(MaterialModel::isotropic(210, 0.3, 0.0, 4, 1).validate(), ConfigError);
  MaterialModel m = steel();
  m.C(0, 0) *= 2;  // no longer consistent with (E, nu)
  CHECK_THROWS_AS(m.validate(), ConfigError);
}

TEST_CASE("rigid motion gives zero strain, stress and force") {
  const std::vector<Vec2> x{{0, 0}, {1, 0}, {0, 1}};
  const double th = 0.7;
  Mat2 R;
  R << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
  std::vector<Vec2> y;
  for (const auto& p : x) y.push_back(R * p + Vec2(3, -2));
  const Triple tri{0, 1, 2};
  const auto kin = triangle_kinematics(tri, x, y, steel());
  CHECK(kin.E.norm() < 1e-14);
  CHECK(std::abs(kin.principal.s1) < 1e-12);
  for (const auto& f : triangle_forces(tri, x, y, steel())) CHECK(f.norm() < 1e-12);
}

TEST_CASE("uniaxial stretch") {
  const std::vector<Vec2> x{{0, 0}, {2, 0}, {0, 1}};
  const std::vector<Vec2> y{{0, 0}, {2.02, 0}, {0, 1}};
  const Triple tri{0, 1, 2};
  const Mat2 F = deformation_gradient(tri, x, y);
  CHECK(F(0, 0) == doctest::Approx(1.01));
  CHECK(F(1, 1) == doctest::Approx(1.0));
  CHECK(std::abs(F(0, 1)) < 1e-15);
  const Mat2 E = lagrangian_strain(F);
  CHECK(E(0, 0) == doctest::Approx(0.5 * (1.01 * 1.01 - 1)));
  const auto mat = steel();
  CHECK(triangle_energy(E, 1.0, mat) == doctest::Approx(energy_oracle({x[0], x[1], x[2]}, {y[0], y[1], y[2]}, 210, 0.3)));
}

TEST_CASE("degenerate reference triangle") {
  const std::vector<Vec2> x{{0, 0}, {1, 0}, {2, 0}};
  CHECK_THROWS_AS(reference_edge_inverse(Triple{0, 1, 2}, x), DegenerateTriangleError);
}

TEST_CASE("forces are the negative energy gradient") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-0.05, 0.05);
  const auto mat = steel();
  for (int trial = 0; trial < 20; ++trial) {
    const std::vector<Vec2> x{{0, 0}, {1.0 + u(rng), u(rng)}, {0.3 + u(rng), 0.9 + u(rng)}};
    std::vector<Vec2> y;
    for (const auto& p : x) y.push_back(p + Vec2(u(rng), u(rng)));
    const Triple tri{0, 1, 2};
    const auto f = triangle_forces(tri, x, y, mat);
    const double h = 1e-6;
    for (int k = 0; k < 3; ++k)
      for (int c = 0; c < 2; ++c) {
        auto yp = y, ym = y;
        yp[k][c] += h;
        ym[k][c] -= h;
        const double wp = energy_oracle({x[0], x[1], x[2]}, {yp[0], yp[1], yp[2]}, 210, 0.3);
        const double wm = energy_oracle({x[0], x[1], x[2]}, {ym[0], ym[1], ym[2]}, 210, 0.3);
        const double g = -(wp - wm) / (2 * h);
        CHECK(f[k][c] == doctest::Approx(g).epsilon(1e-5));
      }
    // Internal forces are self-equilibrated.
    CHECK((f[0] + f[1] + f[2]).norm() < 1e-10);
  }
}

TEST_CASE("principal stresses match the eigenvalues of the stress tensor") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-0.01, 0.01);
  const auto mat = steel();
  for (int trial = 0; trial < 50; ++trial) {
    Mat2 E;
    E(0, 0) = u(rng);
    E(1, 1) = u(rng);
    E(0, 1) = E(1, 0) = u(rng);
    const Eigen::Vector3d s = mat.C * Eigen::Vector3d(E(0, 0), E(1, 1), 2 * E(0, 1));
    Mat2 S;
    S << s(0), s(2), s(2), s(1);
    Eigen::SelfAdjointEigenSolver<Mat2> es(S);
    const auto p = principal_stresses(E, mat);
    CHECK(p.s1 >= p.s2);
    CHECK(p.s1 == doctest::Approx(es.eigenvalues()(1)).epsilon(1e-10));
    CHECK(p.s2 == doctest::Approx(es.eigenvalues()(0)).epsilon(1e-10));
  }
}

TEST_CASE("failure marks exactly the violating triangles") {
  const auto mat = steel();
  Triangulation mesh;
  mesh.triangles = {{0, 1, 2}, {1, 2, 3}, {2, 3, 4}};
  mesh.alive = {1, 1, 1};
  mesh.ref_area = {1, 1, 1};
  std::vector<TriangleKinematics> kin(3);
  SUBCASE("all within bounds") {
    CHECK(apply_failure(mesh, kin, mat).empty());
    CHECK(mesh.alive_count() == 3);
  }
  SUBCASE("threshold crossings") {
    kin[2].principal = {1.01 * mat.tensile_strength, 0.0};
    kin[0].principal = {0.0, -mat.compressive_strength};
    const auto killed = apply_failure(mesh, kin, mat);
    REQUIRE(killed.size() == 2);
    CHECK(killed[0] == 0);
    CHECK(killed[1] == 2);
    CHECK(mesh.alive[1] == 1);
    CHECK(apply_failure(mesh, kin, mat).empty());
  }
  SUBCASE("just below the tensile limit survives") {
    kin[1].principal = {0.999 * mat.tensile_strength, 0.0};
    CHECK(apply_failure(mesh, kin, mat).empty());
  }
}

TEST_CASE("assembled forces skip dead triangles") {
  ParticleSystem sys;
  sys.ref_positions = {{0, 0}, {1, 0}, {0, 1}, {1, 1}};
  sys.cur_positions = {{0, 0}, {1.01, 0}, {0, 1}, {1.0, 1.02}};
  sys.velocities.assign(4, Vec2::Zero());
  sys.masses.assign(4, 1.0);
  sys.tags.assign(4, BoundaryTag::interior);
  Triangulation mesh;
  mesh.triangles = {{0, 1, 2}, {1, 3, 2}};
  mesh.ref_area = {0.5, 0.5};
  mesh.alive = {1, 1};
  const auto mat = steel();
  const auto both = assemble_forces(sys, mesh, mat);
  mesh.alive[1] = 0;
  const auto one = assemble_forces(sys, mesh, mat);
  const auto f0 = triangle_forces(mesh.triangles[0], sys.ref_positions, sys.cur_positions, mat);
  CHECK((one[0] - f0[0]).norm() < 1e-14);
  CHECK(one[3].norm() == 0.0);
  CHECK(both[3].norm() > 0.0);
  CHECK(strain_energy(sys, mesh, mat) ==
        doctest::Approx(energy_oracle({sys.ref_positions[0], sys.ref_positions[1], sys.ref_positions[2]},
                                      {sys.cur_positions[0], sys.cur_positions[1], sys.cur_positions[2]}, 210, 0.3)));
}
