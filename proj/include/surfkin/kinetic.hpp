#pragma once

#include <vector>

#include "surfkin/kernel.hpp"
#include "surfkin/potentials.hpp"
#include "surfkin/state.hpp"
#include "surfkin/transport.hpp"

namespace surfkin {

struct KineticOptions {
  TransportOptions transport;
  double cfl = 0.5;
};

/// Largest step allowed by the transport Courant limit times cfl.
double stable_dt(const SurfaceDistribution& g, const TangentialPotential& u, double cfl);
double stable_dt(const MesoDistribution& h, const MesoKernel& meso, double cfl);

/// Discrete force at the x cell centres: T (w(x+dx/2) - w(x-dx/2)) / (dx w(x)) with w = exp(-U/T).
/// Second-order close to -U'(x), and the value that keeps exp(-U/T) M stationary under transport.
std::vector<double> acceleration(const XGrid& x, const TangentialPotential& u, double temperature);

/// Trapped-molecule model: Vlasov transport plus implicit phonon relaxation, Strang split.
/// Throws StabilityError (state untouched) when dt exceeds the Courant limit.
SurfaceDistribution step_trapped(const SurfaceDistribution& g, const RelaxationKernel& kernel,
                                 const TangentialPotential& u, double dt, const KineticOptions& options = {});

/// Bulk gas feeding the free states; a Maxwellian at the top of the layer.
struct BulkReservoir {
  enum class Kind { vacuum, constant, ramp };
  Kind kind = Kind::vacuum;
  double density = 0.0;        ///< n_b for constant; start value for ramp
  double final_density = 0.0;  ///< ramp end value
  double ramp_time = 1.0;
  double temperature = 1.0;

  double density_at(double t) const;
  /// n_b that balances beta * l M at temperature T with plateau W_m.
  static double balancing_density(double beta, double temperature, double plateau);
};

struct ExchangeRecord {
  double bulk_outflux = 0.0;      ///< net mass sent to the bulk during the step
  double boundary_outflux = 0.0;  ///< mass leaving through open x ends
  std::vector<double> bulk_outflux_per_x;
};

struct TwoGroupStep {
  SurfaceDistribution g;
  ExchangeRecord record;
};

/// Trapped and free molecules with exchange against the reservoir on free nodes.
TwoGroupStep step_two_group(const SurfaceDistribution& g, const BulkReservoir& reservoir,
                            const OrbitTable& orbit, const RelaxationKernel& kernel,
                            const TangentialPotential& u, double dt, const KineticOptions& options = {});

/// Two symmetric layers exchanging free molecules, exchange scaled by coupling_scale.
ChannelState step_channel(const ChannelState& state, const OrbitTable& orbit, const RelaxationKernel& kernel,
                          const TangentialPotential& u, double dt, const KineticOptions& options = {});

/// Homogenized model: unbound e_x cells drift with their mean speed, everything relaxes.
MesoDistribution step_mesoscopic(const MesoDistribution& h, const RelaxationKernel& kernel,
                                 const MesoKernel& meso, double dt, const KineticOptions& options = {});

/// Fills h with N(x) times the normalized discrete equilibrium.
void fill_meso_equilibrium(const RelaxationKernel& kernel, const MesoKernel& meso, MesoDistribution& h,
                           std::span<const double> density);

/// Density carried by the equilibrium with beta = 1 (the discrete gamma).
double equilibrium_density(const RelaxationKernel& kernel, const VelocityGrid& v);
double equilibrium_density(const RelaxationKernel& kernel, const MesoKernel& meso);

double total_mass(const MesoDistribution& h, const MesoKernel& meso);

}  // namespace surfkin
