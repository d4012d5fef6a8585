#include "surfkin/kinetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "surfkin/errors.hpp"

namespace surfkin {

namespace {

void check_step(double dt, double limit, const char* what) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw StabilityError(std::string(what) + ": dt must be positive");
  if (dt > limit * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << what << ": dt = " << dt << " exceeds the Courant limit " << limit;
    throw StabilityError(msg.str());
  }
}

std::vector<double> column_measure(const SurfaceDistribution& g) {
  const auto lay = g.layout();
  std::vector<double> out(lay.slice());
  for (std::size_t k = 0; k < lay.blocks; ++k)
    for (std::size_t j = 0; j < lay.inner; ++j) out[k * lay.inner + j] = g.e().width(k) * g.v().dv();
  return out;
}

/// Reconstruction profiles exp(-U/T) along x and the face/cell Maxwellian along v, with the
/// matching discrete force. Together they make C exp(-U/T) M an exact fixed point of both stages.
struct Balanced {
  Balance x, v;
  std::vector<double> accel;
};

Balance x_profile(const XGrid& x, const TangentialPotential& u, double temperature) {
  Balance out;
  if (u.is_flat()) return out;
  const std::size_t n = x.size();
  out.cell.resize(n);
  out.face.resize(n + 1);
  for (std::size_t i = 0; i < n; ++i) out.cell[i] = std::exp(-u(x.center(i)) / temperature);
  for (std::size_t f = 0; f <= n; ++f)
    out.face[f] = std::exp(-u(x.lower() + static_cast<double>(f) * x.dx()) / temperature);
  return out;
}

Balanced balanced(const SurfaceDistribution& g, const TangentialPotential& u) {
  Balanced out;
  const double t = g.v().temperature();
  out.x = x_profile(g.x(), u, t);
  out.accel = acceleration(g.x(), u, t);
  if (!out.x.empty()) out.v = Balance{g.v().maxwellian(), g.v().face_maxwellian()};
  return out;
}

double x_stage(SurfaceDistribution& g, const Balanced& bal, double dt, const TransportOptions& opt) {
  const auto measure = column_measure(g);
  return advect_x(g.values(), g.layout(), g.v().nodes(), g.x().dx(), dt, measure, opt, bal.x);
}

void v_stage(SurfaceDistribution& g, const Balanced& bal, double dt, const TransportOptions& opt) {
  advect_v(g.values(), g.layout(), bal.accel, g.v().dv(), dt, opt, bal.v);
}

/// Implicit Euler for dg/dt = (Theta[g] l M - g) / tau_ms; Theta at the new level.
void relax(SurfaceDistribution& g, const RelaxationKernel& kernel, const Eigen::MatrixXd& map, double lambda,
           Execution exec) {
  const auto lay = g.layout();
  const auto& mx = g.v().maxwellian();
  const std::size_t n = lay.blocks;
  const double inv = 1.0 / (1.0 + lambda);
#pragma omp parallel for schedule(static) if (exec == Execution::parallel)
  for (std::size_t ix = 0; ix < lay.nx; ++ix) {
    const auto beta = equilibrium_ratio(kernel, g, ix);
    for (std::size_t k = 0; k < n; ++k) {
      double th = 0.0;
      for (std::size_t j = 0; j < n; ++j)
        th += map(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) * beta[j];
      const double target = lambda * th * kernel.shape()[k];
      double* line = g.slice(ix).data() + k * lay.inner;
      for (std::size_t j = 0; j < lay.inner; ++j) line[j] = (line[j] + target * mx[j]) * inv;
    }
  }
}

struct Relaxer {
  Relaxer(const RelaxationKernel& kernel, double dt)
      : on(kernel.relaxing()), lambda(on ? dt / kernel.tau_ms() : 0.0) {
    if (on) map = kernel.implicit_map(lambda);
  }
  void operator()(SurfaceDistribution& g, const RelaxationKernel& kernel, Execution exec) const {
    if (on) relax(g, kernel, map, lambda, exec);
  }
  bool on;
  double lambda;
  Eigen::MatrixXd map;
};

/// Positive-energy free cells; their mirrors carry the incoming half of the orbit.
std::vector<std::size_t> free_cells(const OrbitTable& orbit) {
  std::vector<std::size_t> out;
  const auto& grid = orbit.e_z();
  for (std::size_t k = 0; k < grid.size(); ++k)
    if (grid.node(k) > 0.0 && !orbit.trapped(k)) out.push_back(k);
  return out;
}

/// l f^s per unit of M_x, for each positive free cell, at reservoir density n_b = 1.
std::vector<double> source_profile(const OrbitTable& orbit, const RelaxationKernel& kernel,
                                   const BulkReservoir& res, std::span<const std::size_t> cells) {
  const double t = kernel.temperature();
  const double tb = res.temperature;
  const double wm = orbit.normal().plateau();
  std::vector<double> out;
  for (std::size_t k : cells) {
    double ratio = 1.0;
    if (tb != t) {
      const auto& cell = orbit.z_cells()[k];
      double num = 0.0, den = 0.0;
      for (std::size_t q = 0; q < cell.e.size(); ++q) {
        const double e2 = cell.e[q] * cell.e[q];
        num += cell.weight[q] * cell.ell[q] * std::exp(-e2 / (2.0 * tb));
        den += cell.weight[q] * cell.ell[q] * std::exp(-e2 / (2.0 * t));
      }
      ratio = num / den;
    }
    out.push_back(std::exp(wm / tb) / (2.0 * std::numbers::pi * tb) * kernel.shape()[k] * ratio);
  }
  return out;
}

void bulk_exchange(SurfaceDistribution& g, const BulkReservoir& res, std::span<const std::size_t> cells,
                   std::span<const double> profile, const RelaxationKernel& kernel, double dt,
                   ExchangeRecord& record, Execution exec) {
  const auto lay = g.layout();
  const double nb = res.density_at(g.time + 0.5 * dt);
  const auto mx = cell_maxwellian(g.v(), res.temperature);
  std::vector<double> out_x(lay.nx, 0.0);
  const double dv = g.v().dv(), dx = g.x().dx();
#pragma omp parallel for schedule(static) if (exec == Execution::parallel)
  for (std::size_t ix = 0; ix < lay.nx; ++ix) {
    double sent = 0.0;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const std::size_t k = cells[c];
      const std::size_t m = g.e().mirror(k);
      const double decay = std::exp(-dt / (2.0 * kernel.exchange_time()[k]));
      double gained = 0.0;
      for (std::size_t j = 0; j < lay.inner; ++j) {
        const double s = nb * profile[c] * mx[j];
        double& p = g.at(ix, k, j);
        const double next = s + (p - s) * decay;
        const double delta = next - p;
        p = next;
        g.at(ix, m, j) += delta;
        gained += delta;
      }
      sent -= 2.0 * gained * g.e().width(k);
    }
    out_x[ix] = sent * dv * dx;
  }
  if (record.bulk_outflux_per_x.empty()) record.bulk_outflux_per_x.assign(lay.nx, 0.0);
  for (std::size_t ix = 0; ix < lay.nx; ++ix) {
    record.bulk_outflux_per_x[ix] += out_x[ix];
    record.bulk_outflux += out_x[ix];
  }
}

void channel_exchange(SurfaceDistribution& a, SurfaceDistribution& b, std::span<const std::size_t> cells,
                      const RelaxationKernel& kernel, double scale, double dt, Execution exec) {
  const auto lay = a.layout();
#pragma omp parallel for schedule(static) if (exec == Execution::parallel)
  for (std::size_t ix = 0; ix < lay.nx; ++ix) {
    for (std::size_t k : cells) {
      const std::size_t m = a.e().mirror(k);
      const double frac = 0.5 * (1.0 - std::exp(-scale * dt / kernel.exchange_time()[k]));
      for (std::size_t j = 0; j < lay.inner; ++j) {
        const double delta = frac * (a.at(ix, k, j) - b.at(ix, m, j));
        a.at(ix, k, j) -= delta;
        a.at(ix, m, j) -= delta;
        b.at(ix, k, j) += delta;
        b.at(ix, m, j) += delta;
      }
    }
  }
}

void check_shared_grids(const SurfaceDistribution& a, const SurfaceDistribution& b) {
  if (!(a.x() == b.x()) || a.v().size() != b.v().size() || a.v().v_max() != b.v().v_max() ||
      a.e().edges() != b.e().edges())
    throw DomainError("channel layers must share their grids");
}

}  // namespace

double BulkReservoir::density_at(double t) const {
  switch (kind) {
    case Kind::vacuum:
      return 0.0;
    case Kind::constant:
      return density;
    case Kind::ramp: {
      const double s = std::clamp(t / ramp_time, 0.0, 1.0);
      return density + s * (final_density - density);
    }
  }
  return 0.0;
}

double BulkReservoir::balancing_density(double beta, double temperature, double plateau) {
  return 2.0 * std::numbers::pi * temperature * beta * std::exp(-plateau / temperature);
}

std::vector<double> acceleration(const XGrid& x, const TangentialPotential& u, double temperature) {
  std::vector<double> out(x.size(), 0.0);
  if (u.is_flat()) return out;
  const auto w = x_profile(x, u, temperature);
  for (std::size_t i = 0; i < x.size(); ++i)
    out[i] = temperature * (w.face[i + 1] - w.face[i]) / (x.dx() * w.cell[i]);
  return out;
}

double stable_dt(const SurfaceDistribution& g, const TangentialPotential& u, double cfl) {
  double limit = g.x().dx() / g.v().v_max();
  double force = 0.0;
  for (double a : acceleration(g.x(), u, g.v().temperature())) force = std::max(force, std::abs(a));
  if (force > 0.0) limit = std::min(limit, g.v().dv() / force);
  return cfl * limit;
}

double stable_dt(const MesoDistribution& h, const MesoKernel& meso, double cfl) {
  double speed = 0.0;
  for (double s : meso.speed()) speed = std::max(speed, std::abs(s));
  return speed > 0.0 ? cfl * h.x().dx() / speed : unbounded;
}

SurfaceDistribution step_trapped(const SurfaceDistribution& g, const RelaxationKernel& kernel,
                                 const TangentialPotential& u, double dt, const KineticOptions& options) {
  check_step(dt, stable_dt(g, u, 1.0), "step_trapped");
  const auto& opt = options.transport;
  const auto bal = balanced(g, u);
  const Relaxer relaxer(kernel, dt);
  SurfaceDistribution out = g;
  x_stage(out, bal, 0.5 * dt, opt);
  v_stage(out, bal, 0.5 * dt, opt);
  relaxer(out, kernel, opt.execution);
  v_stage(out, bal, 0.5 * dt, opt);
  x_stage(out, bal, 0.5 * dt, opt);
  out.time = g.time + dt;
  return out;
}

TwoGroupStep step_two_group(const SurfaceDistribution& g, const BulkReservoir& reservoir,
                            const OrbitTable& orbit, const RelaxationKernel& kernel,
                            const TangentialPotential& u, double dt, const KineticOptions& options) {
  if (!orbit.normal().has_free_states()) throw ConfigError("two-group model needs a finite plateau W_m");
  const auto cells = free_cells(orbit);
  if (cells.empty()) throw ConfigError("two-group model needs free energy cells");
  check_step(dt, stable_dt(g, u, 1.0), "step_two_group");
  const auto& opt = options.transport;
  const auto bal = balanced(g, u);
  const auto profile = source_profile(orbit, kernel, reservoir, cells);
  const Relaxer relaxer(kernel, dt);

  TwoGroupStep out{g, {}};
  auto& s = out.g;
  out.record.boundary_outflux += x_stage(s, bal, 0.5 * dt, opt);
  v_stage(s, bal, 0.5 * dt, opt);
  bulk_exchange(s, reservoir, cells, profile, kernel, 0.5 * dt, out.record, opt.execution);
  relaxer(s, kernel, opt.execution);
  s.time = g.time + 0.5 * dt;
  bulk_exchange(s, reservoir, cells, profile, kernel, 0.5 * dt, out.record, opt.execution);
  v_stage(s, bal, 0.5 * dt, opt);
  out.record.boundary_outflux += x_stage(s, bal, 0.5 * dt, opt);
  s.time = g.time + dt;
  return out;
}

ChannelState step_channel(const ChannelState& state, const OrbitTable& orbit, const RelaxationKernel& kernel,
                          const TangentialPotential& u, double dt, const KineticOptions& options) {
  check_shared_grids(state.lower, state.upper);
  check_step(dt, stable_dt(state.lower, u, 1.0), "step_channel");
  const auto& opt = options.transport;
  const auto bal = balanced(state.lower, u);
  const auto cells = free_cells(orbit);
  const Relaxer relaxer(kernel, dt);

  ChannelState out = state;
  for (auto* layer : {&out.lower, &out.upper}) {
    x_stage(*layer, bal, 0.5 * dt, opt);
    v_stage(*layer, bal, 0.5 * dt, opt);
  }
  channel_exchange(out.lower, out.upper, cells, kernel, state.coupling_scale, 0.5 * dt, opt.execution);
  relaxer(out.lower, kernel, opt.execution);
  relaxer(out.upper, kernel, opt.execution);
  channel_exchange(out.lower, out.upper, cells, kernel, state.coupling_scale, 0.5 * dt, opt.execution);
  for (auto* layer : {&out.lower, &out.upper}) {
    v_stage(*layer, bal, 0.5 * dt, opt);
    x_stage(*layer, bal, 0.5 * dt, opt);
    layer->time += dt;
  }
  return out;
}

namespace {

/// Implicit Euler for the mesoscopic relaxation, diagonal in the joint eigenbasis of S and K.
class MesoRelaxer {
 public:
  MesoRelaxer(const RelaxationKernel& kernel, const MesoKernel& meso, double dt) {
    on_ = kernel.relaxing();
    if (!on_) return;
    const double lambda = dt / kernel.tau_ms();
    const auto nx = static_cast<Eigen::Index>(meso.size());
    const auto nz = static_cast<Eigen::Index>(kernel.size());
    Eigen::VectorXd ps(nx), pz(nz);
    for (Eigen::Index m = 0; m < nx; ++m) ps(m) = std::sqrt(meso.weight()[static_cast<std::size_t>(m)]);
    for (Eigen::Index k = 0; k < nz; ++k) pz(k) = std::sqrt(kernel.cell_weight()[static_cast<std::size_t>(k)]);
    to_left_ = meso.eigenvectors().transpose() * ps.asDiagonal();
    to_right_ = pz.asDiagonal() * kernel.eigenvectors();
    from_left_ = ps.cwiseInverse().asDiagonal() * meso.eigenvectors();
    from_right_ = kernel.eigenvectors().transpose() * pz.cwiseInverse().asDiagonal();
    gain_.resize(nx, nz);
    for (Eigen::Index m = 0; m < nx; ++m)
      for (Eigen::Index k = 0; k < nz; ++k)
        gain_(m, k) = 1.0 / (1.0 + lambda - lambda * meso.eigenvalues()(m) * kernel.eigenvalues()(k));
    shape_ = meso_equilibrium_shape(kernel, meso);
  }

  void operator()(MesoDistribution& h, Execution exec) const {
    if (!on_) return;
    const auto lay = h.layout();
    const auto nx = static_cast<Eigen::Index>(lay.inner);
    const auto nz = static_cast<Eigen::Index>(lay.blocks);
#pragma omp parallel for schedule(static) if (exec == Execution::parallel)
    for (std::size_t ix = 0; ix < lay.nx; ++ix) {
      auto slice = h.slice(ix);
      Eigen::MatrixXd b(nx, nz);
      for (Eigen::Index k = 0; k < nz; ++k)
        for (Eigen::Index m = 0; m < nx; ++m) {
          const auto at = static_cast<std::size_t>(k * nx + m);
          b(m, k) = slice[at] / shape_[at];
        }
      Eigen::MatrixXd spectral = (to_left_ * b * to_right_).cwiseProduct(gain_);
      b.noalias() = from_left_ * spectral * from_right_;
      for (Eigen::Index k = 0; k < nz; ++k)
        for (Eigen::Index m = 0; m < nx; ++m) {
          const auto at = static_cast<std::size_t>(k * nx + m);
          slice[at] = b(m, k) * shape_[at];
        }
    }
  }

 private:
  bool on_ = false;
  Eigen::MatrixXd to_left_, to_right_, from_left_, from_right_, gain_;
  std::vector<double> shape_;
};

double meso_x_stage(MesoDistribution& h, const MesoKernel& meso, double dt, const TransportOptions& opt) {
  const auto lay = h.layout();
  std::vector<double> measure(lay.slice());
  for (std::size_t k = 0; k < lay.blocks; ++k)
    for (std::size_t m = 0; m < lay.inner; ++m) measure[k * lay.inner + m] = meso.measure()[m] * h.e_z().width(k);
  return advect_x(h.values(), lay, meso.speed(), h.x().dx(), dt, measure, opt);
}

}  // namespace

MesoDistribution step_mesoscopic(const MesoDistribution& h, const RelaxationKernel& kernel,
                                 const MesoKernel& meso, double dt, const KineticOptions& options) {
  check_step(dt, stable_dt(h, meso, 1.0), "step_mesoscopic");
  const auto& opt = options.transport;
  const MesoRelaxer relaxer(kernel, meso, dt);
  MesoDistribution out = h;
  meso_x_stage(out, meso, 0.5 * dt, opt);
  relaxer(out, opt.execution);
  meso_x_stage(out, meso, 0.5 * dt, opt);
  out.time = h.time + dt;
  return out;
}

double equilibrium_density(const RelaxationKernel& kernel, const VelocityGrid& v) {
  double total = 0.0;
  for (double w : kernel.cell_weight()) total += w;
  return total * v.gamma();
}

double equilibrium_density(const RelaxationKernel& kernel, const MesoKernel& meso) {
  double z = 0.0, x = 0.0;
  for (double w : kernel.cell_weight()) z += w;
  for (double w : meso.weight()) x += w;
  return z * x;
}

void fill_meso_equilibrium(const RelaxationKernel& kernel, const MesoKernel& meso, MesoDistribution& h,
                           std::span<const double> density) {
  const auto lay = h.layout();
  if (density.size() != lay.nx) throw DomainError("fill_meso_equilibrium: one density per x cell is required");
  const auto shape = meso_equilibrium_shape(kernel, meso);
  const double norm = equilibrium_density(kernel, meso);
  for (std::size_t ix = 0; ix < lay.nx; ++ix) {
    auto slice = h.slice(ix);
    for (std::size_t q = 0; q < slice.size(); ++q) slice[q] = density[ix] / norm * shape[q];
  }
}

double total_mass(const MesoDistribution& h, const MesoKernel& meso) {
  const auto mom = moments(h, meso);
  double total = 0.0;
  for (double n : mom.density) total += n;
  return total * h.x().dx();
}

}  // namespace surfkin
