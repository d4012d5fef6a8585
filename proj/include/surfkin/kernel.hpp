#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "surfkin/equilibrium.hpp"
#include "surfkin/orbits.hpp"
#include "surfkin/state.hpp"

namespace surfkin {

/// Discrete orbit-overlap kernel acting on e_z cells.
///
/// overlap(i, j) = int dz a_i(z) a_j(z) / gamma_z(z), where a_i(z) is the Maxwellian flux
/// weight of cell i through height z (closed form in erf). It is symmetric, and its row
/// sums are the cell integrals of l M_z, so K = diag(row sums)^-1 overlap is exactly
/// row-stochastic and leaves the equilibrium weights invariant.
class RelaxationKernel {
 public:
  RelaxationKernel(const OrbitTable& orbit, const EquilibriumWeights& eq, double tau_ms,
                   std::size_t z_points = 16);

  std::size_t size() const { return weight_.size(); }
  const Eigen::MatrixXd& matrix() const { return k_; }
  const Eigen::MatrixXd& overlap() const { return a_; }
  double tau_ms() const { return tau_ms_; }
  bool relaxing() const;
  double temperature() const { return t_; }

  /// Row sums of the overlap matrix: cell integrals of l M_z.
  const std::vector<double>& cell_weight() const { return weight_; }
  /// Cell average of l M_z; the e_z factor of the discrete equilibrium l M.
  const std::vector<double>& shape() const { return shape_; }
  /// Effective crossing time per cell: cell_weight / cell integral of |e| M_z.
  const std::vector<double>& exchange_time() const { return exchange_time_; }
  /// max_i |sum_j overlap(i, j) / (cell quadrature of l M_z) - 1| before renormalization.
  double row_sum_defect() const { return defect_; }

  /// theta = K beta.
  void apply(std::span<const double> beta, std::span<double> theta) const;

  /// Symmetrized spectral data: K = D^-1/2 Q diag(lambda) Q^T D^1/2, D = diag(cell_weight).
  const Eigen::MatrixXd& eigenvectors() const { return q_; }
  const Eigen::VectorXd& eigenvalues() const { return lambda_; }
  /// (I + s(I - K))^-1 K with s = dt / tau_ms: the implicit relaxation map on beta.
  Eigen::MatrixXd implicit_map(double s) const;

 private:
  double tau_ms_, t_;
  Eigen::MatrixXd a_, k_, q_;
  Eigen::VectorXd lambda_;
  std::vector<double> weight_, shape_, exchange_time_;
  double defect_ = 0.0;
};

/// Normalized e_z profile beta_k = (int g dv_x)(e_k) / (shape_k * gamma_v) of one x-slice.
std::vector<double> equilibrium_ratio(const RelaxationKernel& kernel, const SurfaceDistribution& g,
                                      std::size_t ix);

/// Theta[g] at every e_z node of slice ix.
std::vector<double> theta(const RelaxationKernel& kernel, const SurfaceDistribution& g, std::size_t ix);

/// (Theta[g] l M - g) / tau_ms on the whole grid.
SurfaceDistribution q_ph(const RelaxationKernel& kernel, const SurfaceDistribution& g);

/// Fills g with beta(x) * l M.
void fill_equilibrium(const RelaxationKernel& kernel, SurfaceDistribution& g,
                      std::span<const double> beta_of_x);

/// Orbit-averaged coupling over e_x cells for the homogenized model.
///
/// coupling(m, n) = 1/2 int_{-1}^{1} dy b_m(y) b_n(y) / gamma_x(y) with b_m(y) the Maxwellian
/// flux weight of e_x cell m at y; row sums give the cell integrals of |e_x| sigma_bar M_x.
/// Averages over a bound orbit use the orbit-time weight 1 / (2 sigma_bar).
class MesoKernel {
 public:
  MesoKernel(const OrbitTable& orbit, const EquilibriumWeights& eq, std::size_t y_points = 16);

  std::size_t size() const { return weight_.size(); }
  const Eigen::MatrixXd& coupling() const { return c_; }
  /// S = diag(weight)^-1 coupling; row-stochastic.
  const Eigen::MatrixXd& matrix() const { return s_; }
  /// Row sums of coupling: cell integrals of |e_x| sigma_bar M_x.
  const std::vector<double>& weight() const { return weight_; }
  /// Cell integrals of |e_x| sigma_bar: the mass measure of an e_x cell.
  const std::vector<double>& measure() const { return measure_; }
  /// Cell-mean drift speed (zero on bound cells).
  const std::vector<double>& speed() const { return speed_; }
  const std::vector<bool>& bound() const { return bound_; }
  const Eigen::MatrixXd& eigenvectors() const { return q_; }
  const Eigen::VectorXd& eigenvalues() const { return lambda_; }

 private:
  Eigen::MatrixXd c_, s_, q_;
  Eigen::VectorXd lambda_;
  std::vector<double> weight_, measure_, speed_;
  std::vector<bool> bound_;
};

/// Discrete equilibrium l M on the mesoscopic grid: (weight_m / measure_m) * shape_k.
std::vector<double> meso_equilibrium_shape(const RelaxationKernel& kernel, const MesoKernel& meso);

/// Theta-bar[h] of slice ix, stored [e_z][e_x] like the slice itself.
std::vector<double> theta_bar(const RelaxationKernel& kernel, const MesoKernel& meso,
                              const MesoDistribution& h, std::size_t ix);

/// N = int int h |e_x| sigma_bar de_x de_z (period-averaged density), flux with the drift speed.
Moments moments(const MesoDistribution& h, const MesoKernel& meso);

}  // namespace surfkin
