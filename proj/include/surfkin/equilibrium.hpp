#pragma once

#include "surfkin/orbits.hpp"
#include "surfkin/potentials.hpp"

namespace surfkin {

/// Maxwellian weights and position-dependent normalizers at temperature T (m = k = 1).
class EquilibriumWeights {
 public:
  EquilibriumWeights(const OrbitTable& orbit, double temperature);

  double temperature() const { return t_; }
  double maxwellian(double v_x, double e_z) const;
  double maxwellian_x(double v_x) const;
  double maxwellian_z(double e_z) const;

  /// <<l M>> over the orbit grid's energy cells; the v_x factor is exact.
  double gamma() const { return gamma_; }
  double gamma_x() const;
  double gamma_z(double z) const;
  double gamma_0(double z) const;
  double gamma_1(double y, double z) const;

 private:
  double t_;
  double gamma_ = 0.0;
  NormalPotential w_;
  TangentialPotential u_;
};

}  // namespace surfkin
