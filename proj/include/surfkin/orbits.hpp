#pragma once

#include <cstddef>
#include <vector>

#include "surfkin/potentials.hpp"
#include "surfkin/quadrature.hpp"

namespace surfkin {

struct TurningPoints {
  double lower;
  double upper;
};

struct CrossingTime {
  double tau;
  double ell;  ///< |e| * tau
};

/// Time of flight across one period. Bound orbits never cross, which is kept as a flag.
struct FlightTime {
  double value = 0.0;
  bool infinite = false;
};

struct FlightResult {
  FlightTime tau_fl;
  double w_x;
};

double equivalent_velocity_z(const NormalPotential& pot, double z, double v_z);
double v_z_of(const NormalPotential& pot, double z, double e_z);
TurningPoints turning_points_z(const NormalPotential& pot, double e_z);
CrossingTime tau_z_and_l(const NormalPotential& pot, double e_z);

TurningPoints turning_points_y(const TangentialPotential& pot, double e_x);
FlightResult tau_fl_and_w(const TangentialPotential& pot, double e_x);
double sigma_bar_x(const TangentialPotential& pot, double e_x);

/// Symmetric finite-volume partition of [-e_max, e_max] in an equivalent-velocity variable.
/// Edges include 0 and the separatrix; nodes sit at cell midpoints, so no node is 0.
class EnergyGrid {
 public:
  EnergyGrid() = default;
  explicit EnergyGrid(std::vector<double> edges);

  std::size_t size() const { return nodes_.size(); }
  double node(std::size_t i) const { return nodes_[i]; }
  double lower(std::size_t i) const { return edges_[i]; }
  double upper(std::size_t i) const { return edges_[i + 1]; }
  double width(std::size_t i) const { return widths_[i]; }
  std::size_t mirror(std::size_t i) const { return nodes_.size() - 1 - i; }
  const std::vector<double>& nodes() const { return nodes_; }
  const std::vector<double>& edges() const { return edges_; }
  const std::vector<double>& widths() const { return widths_; }

 private:
  std::vector<double> edges_, nodes_, widths_;
};

/// n (even) cells; cells per side split between [0, separatrix] and [separatrix, e_max]
/// in proportion to length. Throws ConfigError when a node falls in the guard band
/// | |e| - separatrix | < guard_band * separatrix.
EnergyGrid make_energy_grid(std::size_t n, double separatrix, double e_max, double guard_band);

struct OrbitGridSpec {
  std::size_t normal_nodes = 32;
  std::size_t tangential_nodes = 32;
  double normal_e_max = 6.0;
  double tangential_e_max = 6.0;
  double guard_band = 1e-3;
  std::size_t cell_points = 12;
};

struct NormalOrbitNode {
  double e, z_minus, z_plus, tau, ell;
  bool trapped;
};

struct TangentialOrbitNode {
  double e, y_minus, y_plus;
  FlightTime tau_fl;
  double w_x, sigma_bar;
  bool bound;
};

/// Sub-quadrature of one energy cell with l(e) cached at its points.
struct CellQuadrature {
  std::vector<double> e, weight, ell;
};

class OrbitTable {
 public:
  OrbitTable(NormalPotential w, TangentialPotential u, const OrbitGridSpec& spec);

  const NormalPotential& normal() const { return w_; }
  const TangentialPotential& tangential() const { return u_; }
  const OrbitGridSpec& spec() const { return spec_; }

  const EnergyGrid& e_z() const { return ez_; }
  const std::vector<NormalOrbitNode>& z_nodes() const { return znodes_; }
  const std::vector<CellQuadrature>& z_cells() const { return zcells_; }

  const EnergyGrid& e_x() const { return ex_; }
  const std::vector<TangentialOrbitNode>& x_nodes() const { return xnodes_; }

  bool trapped(std::size_t k) const { return znodes_[k].trapped; }
  bool bound(std::size_t m) const { return xnodes_[m].bound; }

 private:
  NormalPotential w_;
  TangentialPotential u_;
  OrbitGridSpec spec_;
  EnergyGrid ez_, ex_;
  std::vector<NormalOrbitNode> znodes_;
  std::vector<CellQuadrature> zcells_;
  std::vector<TangentialOrbitNode> xnodes_;
};

OrbitTable build_orbit_table(const NormalPotential& w, const TangentialPotential& u,
                             const OrbitGridSpec& spec);

}  // namespace surfkin
