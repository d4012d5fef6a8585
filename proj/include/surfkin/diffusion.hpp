#pragma once

#include <span>
#include <vector>

#include "surfkin/equilibrium.hpp"
#include "surfkin/orbits.hpp"
#include "surfkin/potentials.hpp"
#include "surfkin/state.hpp"

namespace surfkin {

/// Leading-order transport coefficients at one temperature.
struct TransportCoefficients {
  double d0_n = 0.0;        ///< density diffusivity
  double d0_t = 0.0;        ///< thermal-gradient coefficient per unit N
  double c0_p = 0.0;        ///< pressure-form diffusivity, d0_n / T
  double c0_t = 0.0;        ///< pressure-form thermal coefficient per unit N
  double c_coupling = 0.0;  ///< inter-layer rate c(W_m)
  double gamma = 0.0;       ///< <<l M>>
  double gamma_prime = 0.0; ///< d gamma / dT
  double tau_ms = 0.0;
  double temperature = 0.0;
};

/// Double integrals over the orbit energy cells times a trapezoid v_x rule on [-10 sqrt T, 10 sqrt T].
/// Throws ConfigError when the e_z cutoff leaves a Maxwellian tail above 1e-7.
TransportCoefficients compute_coefficients(const OrbitTable& orbit, double temperature, double tau_ms);
TransportCoefficients compute_coefficients(const OrbitTable& orbit, const EquilibriumWeights& eq, double tau_ms);

/// Flux D dN/dx + D_T dT/dx (sign convention: the diffusive flux is minus this).
double density_form_flux(const TransportCoefficients& c, double n, double dn_dx, double dt_dx);
/// C_p dp/dx + C_T dT/dx with p = N T; equal to density_form_flux for the same fields.
double pressure_form_flux(const TransportCoefficients& c, double n, double dn_dx, double dt_dx);

struct DensityField {
  XGrid x;
  std::vector<double> n;
  double time = 0.0;

  DensityField() = default;
  DensityField(XGrid grid, std::vector<double> values) : x(std::move(grid)), n(std::move(values)) {}
  double mass() const;
};

struct TemperatureField {
  XGrid x;
  std::vector<double> t;
};

enum class TimeScheme { implicit_euler, explicit_euler, crank_nicolson };
enum class DriftScheme { centered, upwind };
enum class DiffusionBoundary { periodic, no_flux };

struct DiffusionOptions {
  TimeScheme time = TimeScheme::implicit_euler;
  DriftScheme drift = DriftScheme::centered;
  DiffusionBoundary boundary = DiffusionBoundary::periodic;
};

/// Largest explicit step: dt (2 D / dx^2 + |drift| / dx) <= 1.
double explicit_dt_limit(const DensityField& n, const TransportCoefficients& c, const TangentialPotential& u);

/// dN/dt = d/dx(D dN/dx + tau_ms U' N).
DensityField step_drift_diffusion(const DensityField& n, const TransportCoefficients& c,
                                  const TangentialPotential& u, double dt, const DiffusionOptions& options = {});

/// dN/dt = d/dx(D(T) dN/dx + D_T(T) N dT/dx + tau_ms U' N) with per-cell coefficients.
DensityField step_nonisothermal(const DensityField& n, const TemperatureField& t,
                                std::span<const TransportCoefficients> per_cell, const TangentialPotential& u,
                                double dt, const DiffusionOptions& options = {});

/// Per-cell coefficients for a temperature profile.
std::vector<TransportCoefficients> coefficients_for(const OrbitTable& orbit, const TemperatureField& t,
                                                    double tau_ms);

struct DensityPair {
  DensityField first;
  DensityField second;
};

/// Two drift-diffusion fields exchanging at rate c_coupling: dN1/dt = ... + c (N2 - N1).
/// Strang split with the exchange integrated exactly.
DensityPair step_coupled(const DensityPair& pair, const TransportCoefficients& c, const TangentialPotential& u,
                         double dt, const DiffusionOptions& options = {});

}  // namespace surfkin
