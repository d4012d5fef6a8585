#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "surfkin/diffusion.hpp"
#include "surfkin/kinetic.hpp"
#include "surfkin/orbits.hpp"
#include "surfkin/potentials.hpp"

namespace surfkin {

struct ErrorNorms {
  double l1 = 0.0;
  double l2 = 0.0;
  double linf = 0.0;
};

/// Cell-measure weighted norms of a - b. Throws DomainError when the grids differ.
ErrorNorms error_norms(const DensityField& a, const DensityField& b);

/// Least-squares slope of log(error) against log(parameter) and the rms residual of the fit.
struct OrderFit {
  double order = std::numeric_limits<double>::quiet_NaN();
  double residual = std::numeric_limits<double>::quiet_NaN();
};
OrderFit fit_order(std::span<const double> parameters, std::span<const double> errors);

/// Named pass/fail entry; passed means value <= limit.
struct StudyCheck {
  std::string name;
  double value = 0.0;
  double limit = 0.0;
  bool passed = false;
};

struct Diagnostic {
  std::string name;
  double value = 0.0;
};

struct Profile {
  std::string name;
  std::vector<double> values;
};

struct StudyCase {
  double parameter = 0.0;
  ErrorNorms error;
  double relative_l1 = 0.0;  ///< error.l1 / ||reference||_1
  double mass_defect = 0.0;  ///< worst relative mass drift over the sub-runs of this case
  bool mass_ok = false;
  double runtime_seconds = 0.0;
  std::vector<double> x;            ///< abscissae of the profiles
  std::vector<Profile> profiles;    ///< final observables, for the data file
  std::vector<StudyCheck> checks;   ///< study-specific criteria for this case
  std::vector<Diagnostic> diagnostics;
  std::string failure;              ///< non-empty when the sub-run threw
};

struct ConvergenceReport {
  std::string study;
  std::string parameter_name;
  std::vector<StudyCase> cases;
  OrderFit fit;
  /// The coarsest parameter's error exceeds the finest one's and the sequence is strictly decreasing.
  bool monotone = false;
  /// Every case ran and passed its mass check, so every error is admissible.
  bool complete = false;

  bool passed() const;
};

/// Shared physical set-up of the studies (m = k = 1).
struct StudyPhysics {
  NormalPotential normal{Tent{2.0, 0.5}, 1.0, 1.0};
  OrbitGridSpec orbit;
  double temperature = 1.0;
  double v_max_factor = 6.0;  ///< v_max = factor * sqrt(T)
  double cfl = 0.5;
  TransportOptions transport;
};

enum class InitialData { well_prepared, ill_prepared };

/// Scaled problem: tau_ms = eps * tau_tilde, horizon t_tilde / eps, x in [x_lo, x_hi) periodic,
/// N0 = 1 + amplitude * sin(2 pi x / length).
struct DiffusionLimitSetup {
  StudyPhysics physics;
  TangentialPotential tangential{CosineU{}, 0.5, 0.5};
  std::size_t nx = 64;
  std::size_t nv = 32;
  double x_lo = -0.5;
  double x_hi = 0.5;
  double tau_tilde = 1.0;
  double t_tilde = 0.02;
  double amplitude = 0.5;
  InitialData initial = InitialData::well_prepared;
  std::size_t jobs = 1;
};

/// Kinetic trapped model against the drift-diffusion limit for each eps (strictly decreasing, <= 0.25).
ConvergenceReport run_diffusion_limit_study(const DiffusionLimitSetup& setup, std::span<const double> eps_list);

/// Fine trapped model with U(x) = amplitude * Uhat(x / delta) on [0, length) against the mesoscopic
/// model; both densities averaged over each period.
struct HomogenizationSetup {
  StudyPhysics physics;
  TangentialPotential::Shape shape = ParabolicU{};
  double amplitude = 1.0;
  std::size_t nx = 512;
  std::size_t nv = 64;
  double length = 1.0;
  double tau_ms = 1.0;
  double t_end = 0.1;
  double density_amplitude = 0.5;
  double bound_fraction_tolerance = 0.02;
  std::size_t jobs = 1;
};

ConvergenceReport run_homogenization_study(const HomogenizationSetup& setup, std::span<const double> delta_list);

enum class CouplingRegime { strong, moderate, weak };

CouplingRegime parse_regime(const std::string& name);
std::string to_string(CouplingRegime regime);
/// Exchange prefactor of the regime: 1/eps, 1 or eps.
double coupling_scale(CouplingRegime regime, double eps);

/// Two-layer channel on [x_lo, x_hi) with tau_ms = eps * tau_tilde. t_d = length^2 / D0.
/// Layer densities start at 1 + a sin(2 pi x / length) and (1 + a cos(2 pi x / length)) / 2.
struct CouplingSetup {
  StudyPhysics physics;
  TangentialPotential tangential{CosineU{}, 0.5, 0.5};
  std::size_t nx = 64;
  std::size_t nv = 32;
  double x_lo = -0.5;
  double x_hi = 0.5;
  double tau_tilde = 1.0;
  double amplitude = 0.5;
  /// Horizons in units of t_d.
  double strong_horizon = 0.1;
  double moderate_horizon = 1.0;
  double weak_horizon = 0.5;
  double decay_target = 1e-3;      ///< strong: ||N1 - N2||_1 must fall below this fraction of its start
  double terminal_slack = 1e-3;    ///< relative slack of the terminal identity
  double weak_tolerance = 0.1;     ///< relative L1 of each layer against the two-field system
  double closed_form_tolerance = 1e-6;
  std::size_t jobs = 1;
};

ConvergenceReport run_coupling_regime_study(const CouplingSetup& setup, CouplingRegime regime,
                                            std::span<const double> eps_list);

/// Worst relative mass drift a sub-run may show before its error is admitted.
inline constexpr double mass_tolerance = 1e-10;

}  // namespace surfkin
