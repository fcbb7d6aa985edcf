#pragma once

#include <Eigen/Dense>

namespace cpd {

enum class PlaneClosure { stress, strain };

Eigen::Matrix3d isotropic_constitutive(double E, double nu, PlaneClosure closure);

/// Isotropic linear elastic solid with a brittle strength limit. Stresses in GPa,
/// areal density in kg/cm^2.
struct MaterialModel {
  double youngs_modulus = 210.0;
  double poisson_ratio = 0.3;
  PlaneClosure closure = PlaneClosure::stress;
  Eigen::Matrix3d C = isotropic_constitutive(210.0, 0.3, PlaneClosure::stress);  // Voigt (xx, yy, xy) with engineering shear strain
  double tensile_strength = 0.4;
  double compressive_strength = 4.0;
  double density = 7.85e-3;

  static MaterialModel isotropic(double E, double nu, double tensile, double compressive,
                                 double density, PlaneClosure closure = PlaneClosure::stress);

  /// Rebuilds C from (E, nu, closure).
  void update_constitutive();

  /// Throws ConfigError when constants are out of range or C is not SPD / not consistent.
  void validate() const;
};


}  // namespace cpd
