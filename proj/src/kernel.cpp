#include "surfkin/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "surfkin/errors.hpp"
#include "surfkin/quadrature.hpp"

namespace surfkin {

namespace {

/// int_{v1}^{v2} exp(-(v^2 + 2 phi) / 2T) dv with v = sqrt(max(0, E^2 - 2 phi)) at the two
/// edge speeds |lo|, |hi| of one energy cell. Equals the cell integral of |e| sigma M at a
/// point where the potential is phi.
double cell_flux_weight(double lo, double hi, double phi, double t) {
  if (std::isinf(phi)) return 0.0;
  const double e1 = std::min(std::abs(lo), std::abs(hi));
  const double e2 = std::max(std::abs(lo), std::abs(hi));
  // A cell edge sitting on a level of W (the separatrix, say) must give v_z = 0 there, not the
  // square root of the rounding error in e^2.
  auto speed = [phi](double e) {
    const double r = e * e - 2.0 * phi;
    return r > 4.0 * std::numeric_limits<double>::epsilon() * e * e ? std::sqrt(r) : 0.0;
  };
  const double v1 = speed(e1);
  const double v2 = speed(e2);
  if (v2 <= v1) return 0.0;
  const double s = std::sqrt(2.0 * t);
  const double span = v1 / s > 0.5 ? std::erfc(v1 / s) - std::erfc(v2 / s) : std::erf(v2 / s) - std::erf(v1 / s);
  return std::exp(-phi / t) * std::sqrt(std::numbers::pi * t / 2.0) * span;
}

/// int_cell |e| exp(-e^2 / 2T) de, closed form.
double cell_speed_weight(double lo, double hi, double t) {
  return t * std::abs(std::exp(-lo * lo / (2.0 * t)) - std::exp(-hi * hi / (2.0 * t)));
}

std::vector<double> sorted_cuts(std::vector<double> cuts, double lo, double hi) {
  std::vector<double> kept{lo, hi};
  for (double c : cuts)
    if (c > lo && c < hi) kept.push_back(c);
  std::sort(kept.begin(), kept.end());
  std::vector<double> out{kept.front()};
  for (double c : kept)
    if (c - out.back() > 1e-14 * std::max(1.0, std::abs(c))) out.push_back(c);
  if (out.back() != hi) out.back() = hi;
  return out;
}

struct PointRule {
  std::vector<double> nodes, weights;
};

PointRule composite_rule(const std::vector<double>& cuts, std::size_t points) {
  const auto ref = gauss_legendre(points);
  PointRule out;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const auto r = cosine_mapped_rule(cuts[k], cuts[k + 1], ref);
    out.nodes.insert(out.nodes.end(), r.nodes.begin(), r.nodes.end());
    out.weights.insert(out.weights.end(), r.weights.begin(), r.weights.end());
  }
  return out;
}

/// Overlap matrix sum_q w_q f_i(q) f_j(q) / sum_k f_k(q) for per-point weights f (cells x points).
Eigen::MatrixXd overlap_matrix(const Eigen::MatrixXd& f, const std::vector<double>& weights) {
  const auto n = f.rows();
  Eigen::MatrixXd scaled = f;
  for (Eigen::Index q = 0; q < f.cols(); ++q) {
    const double total = f.col(q).sum();
    const double factor = total > 0.0 ? std::sqrt(weights[static_cast<std::size_t>(q)] / total) : 0.0;
    scaled.col(q) *= factor;
  }
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  a.selfadjointView<Eigen::Lower>().rankUpdate(scaled);
  return a.selfadjointView<Eigen::Lower>();
}

struct Spectral {
  Eigen::MatrixXd q;
  Eigen::VectorXd lambda;
};

Spectral symmetric_spectrum(const Eigen::MatrixXd& a, const std::vector<double>& weight) {
  const auto n = a.rows();
  Eigen::MatrixXd s(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      s(i, j) = a(i, j) / std::sqrt(weight[static_cast<std::size_t>(i)] * weight[static_cast<std::size_t>(j)]);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(s);
  if (solver.info() != Eigen::Success) throw NumericalError("kernel eigendecomposition failed");
  return {solver.eigenvectors(), solver.eigenvalues()};
}

}  // namespace

RelaxationKernel::RelaxationKernel(const OrbitTable& orbit, const EquilibriumWeights& eq, double tau_ms,
                                   std::size_t z_points)
    : tau_ms_(tau_ms), t_(eq.temperature()) {
  if (!(tau_ms > 0.0)) throw ConfigError("tau_ms must be positive");
  const auto& w = orbit.normal();
  const auto& grid = orbit.e_z();
  const std::size_t n = grid.size();

  std::vector<double> cuts = w.breakpoints();
  cuts.push_back(w.well_position());
  double top = w.has_free_states() ? w.layer_width() : 0.0;
  for (double edge : grid.edges()) {
    if (edge == 0.0) continue;
    const auto tp = turning_points_z(w, edge);
    cuts.push_back(tp.lower);
    cuts.push_back(tp.upper);
    if (!w.has_free_states()) top = std::max(top, tp.upper);
  }
  const auto rule = composite_rule(sorted_cuts(cuts, 0.0, top), z_points);

  Eigen::MatrixXd f(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(rule.nodes.size()));
  for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
    const double phi = w(rule.nodes[q]);
    for (std::size_t i = 0; i < n; ++i)
      f(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(q)) =
          cell_flux_weight(grid.lower(i), grid.upper(i), phi, t_);
  }
  a_ = overlap_matrix(f, rule.weights);

  weight_.resize(n);
  shape_.resize(n);
  exchange_time_.resize(n);
  k_.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const double row = a_.row(ii).sum();
    if (!(row > 0.0)) {
      std::ostringstream msg;
      msg << "kernel row " << i << " (e = " << grid.node(i) << ") has no weight";
      throw NumericalError(msg.str());
    }
    const auto& cell = orbit.z_cells()[i];
    double reference = 0.0;
    for (std::size_t q = 0; q < cell.e.size(); ++q)
      reference += cell.weight[q] * cell.ell[q] * eq.maxwellian_z(cell.e[q]);
    defect_ = std::max(defect_, std::abs(row / reference - 1.0));
    weight_[i] = row;
    shape_[i] = row / grid.width(i);
    exchange_time_[i] = row / cell_speed_weight(grid.lower(i), grid.upper(i), t_);
    k_.row(ii) = a_.row(ii) / row;
  }
  auto spec = symmetric_spectrum(a_, weight_);
  q_ = std::move(spec.q);
  lambda_ = std::move(spec.lambda);
}

bool RelaxationKernel::relaxing() const { return std::isfinite(tau_ms_); }

void RelaxationKernel::apply(std::span<const double> beta, std::span<double> out) const {
  const std::size_t n = size();
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      acc += k_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * beta[j];
    out[i] = acc;
  }
}

Eigen::MatrixXd RelaxationKernel::implicit_map(double s) const {
  const auto n = static_cast<Eigen::Index>(size());
  Eigen::VectorXd d(n), dinv(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    d(i) = std::sqrt(weight_[static_cast<std::size_t>(i)]);
    dinv(i) = 1.0 / d(i);
  }
  const Eigen::VectorXd gain = lambda_.array() / (1.0 + s - s * lambda_.array());
  Eigen::MatrixXd m = q_ * gain.asDiagonal() * q_.transpose();
  return dinv.asDiagonal() * m * d.asDiagonal();
}

std::vector<double> equilibrium_ratio(const RelaxationKernel& kernel, const SurfaceDistribution& g,
                                      std::size_t ix) {
  const auto lay = g.layout();
  const double norm = g.v().dv() / g.v().gamma();
  std::vector<double> beta(lay.blocks);
  const auto slice = g.slice(ix);
  for (std::size_t k = 0; k < lay.blocks; ++k) {
    // Mirror pairs first: data odd in v_x cancels exactly, instead of leaving round-off that the
    // division by a tail shape (~exp(-e_max^2 / 2T)) would blow up.
    const double* line = slice.data() + k * lay.inner;
    double rho = lay.inner % 2 ? line[lay.inner / 2] : 0.0;
    for (std::size_t j = 0; j < lay.inner / 2; ++j) rho += line[j] + line[lay.inner - 1 - j];
    beta[k] = rho * norm / kernel.shape()[k];
  }
  return beta;
}

std::vector<double> theta(const RelaxationKernel& kernel, const SurfaceDistribution& g, std::size_t ix) {
  const auto beta = equilibrium_ratio(kernel, g, ix);
  std::vector<double> out(beta.size());
  kernel.apply(beta, out);
  return out;
}

SurfaceDistribution q_ph(const RelaxationKernel& kernel, const SurfaceDistribution& g) {
  SurfaceDistribution out = g;
  const auto lay = g.layout();
  const auto& mx = g.v().maxwellian();
  const double rate = kernel.relaxing() ? 1.0 / kernel.tau_ms() : 0.0;
#pragma omp parallel for schedule(static)
  for (std::size_t ix = 0; ix < lay.nx; ++ix) {
    const auto th = theta(kernel, g, ix);
    for (std::size_t k = 0; k < lay.blocks; ++k)
      for (std::size_t j = 0; j < lay.inner; ++j)
        out.at(ix, k, j) = rate * (th[k] * kernel.shape()[k] * mx[j] - g.at(ix, k, j));
  }
  return out;
}

void fill_equilibrium(const RelaxationKernel& kernel, SurfaceDistribution& g,
                      std::span<const double> beta_of_x) {
  const auto lay = g.layout();
  if (beta_of_x.size() != lay.nx) throw DomainError("fill_equilibrium: one value per x cell is required");
  const auto& mx = g.v().maxwellian();
  for (std::size_t ix = 0; ix < lay.nx; ++ix)
    for (std::size_t k = 0; k < lay.blocks; ++k)
      for (std::size_t j = 0; j < lay.inner; ++j)
        g.at(ix, k, j) = beta_of_x[ix] * kernel.shape()[k] * mx[j];
}

MesoKernel::MesoKernel(const OrbitTable& orbit, const EquilibriumWeights& eq, std::size_t y_points) {
  const auto& u = orbit.tangential();
  const auto& grid = orbit.e_x();
  const double t = eq.temperature();
  const std::size_t n = grid.size();

  std::vector<double> cuts = u.breakpoints();
  cuts.push_back(u.well_position());
  for (double edge : grid.edges()) {
    if (edge == 0.0 || 0.5 * edge * edge > u.amplitude()) continue;
    const auto tp = turning_points_y(u, edge);
    cuts.push_back(tp.lower);
    cuts.push_back(tp.upper);
  }
  const auto rule = composite_rule(sorted_cuts(cuts, -1.0, 1.0), y_points);

  Eigen::MatrixXd f(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(rule.nodes.size()));
  measure_.assign(n, 0.0);
  for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
    const double phi = u.reduced(rule.nodes[q]);
    for (std::size_t m = 0; m < n; ++m) {
      f(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(q)) =
          cell_flux_weight(grid.lower(m), grid.upper(m), phi, t);
      const double e1 = std::min(std::abs(grid.lower(m)), std::abs(grid.upper(m)));
      const double e2 = std::max(std::abs(grid.lower(m)), std::abs(grid.upper(m)));
      const double span = std::sqrt(std::max(0.0, e2 * e2 - 2.0 * phi)) -
                          std::sqrt(std::max(0.0, e1 * e1 - 2.0 * phi));
      measure_[m] += 0.5 * rule.weights[q] * span;
    }
  }
  std::vector<double> half(rule.weights.size());
  for (std::size_t q = 0; q < half.size(); ++q) half[q] = 0.5 * rule.weights[q];
  c_ = overlap_matrix(f, half);

  weight_.resize(n);
  speed_.assign(n, 0.0);
  bound_.resize(n);
  s_.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t m = 0; m < n; ++m) {
    const auto mm = static_cast<Eigen::Index>(m);
    const double row = c_.row(mm).sum();
    if (!(row > 0.0)) {
      std::ostringstream msg;
      msg << "mesoscopic coupling row " << m << " (e_x = " << grid.node(m) << ") has no weight";
      throw NumericalError(msg.str());
    }
    weight_[m] = row;
    s_.row(mm) = c_.row(mm) / row;
    bound_[m] = orbit.bound(m);
    if (!bound_[m])
      speed_[m] = std::copysign(cell_speed_weight(grid.lower(m), grid.upper(m), t), grid.node(m)) / row;
  }
  auto spec = symmetric_spectrum(c_, weight_);
  q_ = std::move(spec.q);
  lambda_ = std::move(spec.lambda);
}

std::vector<double> meso_equilibrium_shape(const RelaxationKernel& kernel, const MesoKernel& meso) {
  const std::size_t nz = kernel.size(), nx = meso.size();
  std::vector<double> out(nz * nx);
  for (std::size_t k = 0; k < nz; ++k)
    for (std::size_t m = 0; m < nx; ++m)
      out[k * nx + m] = meso.weight()[m] / meso.measure()[m] * kernel.shape()[k];
  return out;
}

std::vector<double> theta_bar(const RelaxationKernel& kernel, const MesoKernel& meso,
                              const MesoDistribution& h, std::size_t ix) {
  const auto nz = static_cast<Eigen::Index>(kernel.size());
  const auto nx = static_cast<Eigen::Index>(meso.size());
  const auto shape = meso_equilibrium_shape(kernel, meso);
  const auto slice = h.slice(ix);
  Eigen::MatrixXd b(nx, nz);
  for (Eigen::Index k = 0; k < nz; ++k)
    for (Eigen::Index m = 0; m < nx; ++m) {
      const auto at = static_cast<std::size_t>(k * nx + m);
      b(m, k) = slice[at] / shape[at];
    }
  const Eigen::MatrixXd out = meso.matrix() * b * kernel.matrix().transpose();
  std::vector<double> result(static_cast<std::size_t>(nz * nx));
  for (Eigen::Index k = 0; k < nz; ++k)
    for (Eigen::Index m = 0; m < nx; ++m) result[static_cast<std::size_t>(k * nx + m)] = out(m, k);
  return result;
}

Moments moments(const MesoDistribution& h, const MesoKernel& meso) {
  const auto lay = h.layout();
  Moments out{std::vector<double>(lay.nx, 0.0), std::vector<double>(lay.nx, 0.0)};
#pragma omp parallel for schedule(static)
  for (std::size_t ix = 0; ix < lay.nx; ++ix) {
    double n = 0.0, phi = 0.0;
    for (std::size_t k = 0; k < lay.blocks; ++k) {
      double rn = 0.0, rphi = 0.0;
      for (std::size_t m = 0; m < lay.inner; ++m) {
        const double mass = h.at(ix, m, k) * meso.measure()[m];
        rn += mass;
        rphi += meso.speed()[m] * mass;
      }
      n += rn * h.e_z().width(k);
      phi += rphi * h.e_z().width(k);
    }
    out.density[ix] = n;
    out.flux[ix] = phi;
  }
  return out;
}

}  // namespace surfkin
