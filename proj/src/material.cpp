#include "cpd/material.hpp"

#include "cpd/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace cpd {

Eigen::Matrix3d isotropic_constitutive(double E, double nu, PlaneClosure closure) {
  Eigen::Matrix3d C = Eigen::Matrix3d::Zero();
  const double shear = E / (2.0 * (1.0 + nu));
  if (closure == PlaneClosure::stress) {
    const double k = E / (1.0 - nu * nu);
    C(0, 0) = C(1, 1) = k;
    C(0, 1) = C(1, 0) = nu * k;
  } else {
    const double k = E / ((1.0 + nu) * (1.0 - 2.0 * nu));
    C(0, 0) = C(1, 1) = k * (1.0 - nu);
    C(0, 1) = C(1, 0) = k * nu;
  }
  C(2, 2) = shear;
  return C;
}

MaterialModel MaterialModel::isotropic(double E, double nu, double tensile, double compressive,
                                       double density, PlaneClosure closure) {
  MaterialModel m;
  m.youngs_modulus = E;
  m.poisson_ratio = nu;
  m.closure = closure;
  m.tensile_strength = tensile;
  m.compressive_strength = compressive;
  m.density = density;
  m.update_constitutive();
  m.validate();
  return m;
}

void MaterialModel::update_constitutive() { C = isotropic_constitutive(youngs_modulus, poisson_ratio, closure); }

void MaterialModel::validate() const {
  if (!(youngs_modulus > 0)) throw ConfigError("youngs_modulus", "must be positive");
  if (!(poisson_ratio > -1.0 && poisson_ratio < 0.5))
    throw ConfigError("poisson_ratio", "outside the admissible range");
  if (!(tensile_strength > 0)) throw ConfigError("tensile_strength", "must be positive");
  if (!(compressive_strength > 0)) throw ConfigError("compressive_strength", "must be positive");
  if (!(density > 0)) throw ConfigError("density", "must be positive");
  if (!C.isApprox(C.transpose(), 0.0)) throw ConfigError("C", "not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(C);
  if (eig.eigenvalues().minCoeff() <= 0) throw ConfigError("C", "not positive definite");
  const Eigen::Matrix3d expected = isotropic_constitutive(youngs_modulus, poisson_ratio, closure);
  if ((C - expected).norm() > 1e-12 * expected.norm())
    throw ConfigError("C", "inconsistent with youngs_modulus / poisson_ratio");
}

}  // namespace cpd
