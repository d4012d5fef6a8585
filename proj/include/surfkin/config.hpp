#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "surfkin/diffusion.hpp"
#include "surfkin/harness.hpp"
#include "surfkin/kinetic.hpp"
#include "surfkin/potentials.hpp"

namespace surfkin {

struct GridConfig {
  std::size_t nx = 128;
  std::size_t nv = 64;
  std::size_t nez = 32;
  std::size_t nex = 32;
  double x_min = -0.5;
  double x_max = 0.5;
  double v_max_factor = 6.0;  ///< v_max = factor * sqrt(T)
  double ez_max = 6.0;
  double ex_max = 6.0;
  double guard_band = 1e-3;
  std::size_t cell_points = 12;
  std::size_t kernel_points = 16;  ///< z (and y) quadrature points per kernel cell
  std::size_t diffusion_nx = 512;
};

struct SolverConfig {
  TransportOptions transport;
  double cfl = 0.5;
  DiffusionOptions diffusion;
  double diffusion_dt = 1e-3;  ///< drift-diffusion step; the explicit scheme also obeys its stability bound
};

enum class InitialProfile { uniform, sine, boltzmann, random };

struct RunConfig {
  double t_end = 1.0;
  std::size_t snapshots = 4;  ///< evenly spaced output times after t = 0
  InitialProfile initial = InitialProfile::sine;
  double amplitude = 0.5;
  bool dump = false;          ///< also write the final distribution as a binary dump
};

struct ChannelConfig {
  CouplingRegime regime = CouplingRegime::moderate;
  double eps = 0.05;
};

/// Study set-ups; their `physics` and `jobs` members are filled from the rest of the config.
struct StudyConfig {
  std::vector<double> eps_list{0.2, 0.1, 0.05};
  std::vector<double> delta_list{1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0};
  DiffusionLimitSetup limit;
  HomogenizationSetup homogenization;
  CouplingSetup coupling;
  CouplingRegime regime = CouplingRegime::strong;
  std::vector<double> coupling_eps{0.05};
};

/// Fully defaulted run description; physical values in units with m = k = 1.
struct Config {
  NormalPotential normal{Tent{2.0, 0.5}, 1.0, 1.0};
  TangentialPotential tangential = TangentialPotential::flat(1.0 / 16.0);
  double temperature = 1.0;
  double tau_ms = 1.0;  ///< `unbounded` switches relaxation off
  GridConfig grid;
  SolverConfig solver;
  RunConfig run;
  BulkReservoir reservoir;
  ChannelConfig channel;
  StudyConfig study;
  std::uint64_t seed = 0;
  /// Sorted-key compact JSON of the input; the config hash is taken over this text.
  std::string canonical;
};

/// Parses and validates a JSON config. Unknown keys, wrong types and out-of-range values throw
/// ConfigError naming the key path. Relative tabulated-profile paths resolve against base_dir.
Config parse_config_text(const std::string& text, const std::string& base_dir = ".");
Config parse_config(const std::string& path);

OrbitGridSpec orbit_spec(const Config& c);
VelocityGrid velocity_grid(const Config& c);
XGrid x_grid(const Config& c);
KineticOptions kinetic_options(const Config& c);

StudyPhysics study_physics(const Config& c);

}  // namespace surfkin
