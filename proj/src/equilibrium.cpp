#include "surfkin/equilibrium.hpp"

#include <cmath>
#include <numbers>

#include "surfkin/errors.hpp"

namespace surfkin {

EquilibriumWeights::EquilibriumWeights(const OrbitTable& orbit, double temperature)
    : t_(temperature), w_(orbit.normal()), u_(orbit.tangential()) {
  if (!(t_ > 0.0) || !std::isfinite(t_)) throw ConfigError("temperature must be positive");
  double lm = 0.0;
  for (const auto& cell : orbit.z_cells())
    for (std::size_t q = 0; q < cell.e.size(); ++q)
      lm += cell.weight[q] * cell.ell[q] * maxwellian_z(cell.e[q]);
  gamma_ = gamma_x() * lm;
}

double EquilibriumWeights::maxwellian(double v_x, double e_z) const {
  return std::exp(-(v_x * v_x + e_z * e_z) / (2.0 * t_));
}

double EquilibriumWeights::maxwellian_x(double v_x) const { return std::exp(-v_x * v_x / (2.0 * t_)); }

double EquilibriumWeights::maxwellian_z(double e_z) const { return std::exp(-e_z * e_z / (2.0 * t_)); }

double EquilibriumWeights::gamma_x() const { return std::sqrt(2.0 * std::numbers::pi * t_); }

double EquilibriumWeights::gamma_z(double z) const { return gamma_x() * std::exp(-w_(z) / t_); }

double EquilibriumWeights::gamma_0(double z) const {
  return 2.0 * std::numbers::pi * t_ * std::exp(-w_(z) / t_);
}

double EquilibriumWeights::gamma_1(double y, double z) const {
  return 2.0 * std::numbers::pi * t_ * std::exp(-(u_.reduced(y) + w_(z)) / t_);
}

}  // namespace surfkin
