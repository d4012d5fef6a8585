#include "surfkin/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "surfkin/errors.hpp"

namespace surfkin {

namespace {

struct VelocityMoments {
  double m0 = 0.0, m2 = 0.0, m4 = 0.0;
};

/// Trapezoid moments of exp(-v^2 / 2T) on [-10 sqrt T, 10 sqrt T]; spectrally accurate for a Gaussian.
VelocityMoments velocity_moments(double t) {
  constexpr int half = 2000;
  const double vmax = 10.0 * std::sqrt(t);
  const double h = vmax / half;
  VelocityMoments out;
  for (int k = -half; k <= half; ++k) {
    const double v = h * k;
    const double w = (k == -half || k == half) ? 0.5 * h : h;
    const double m = std::exp(-v * v / (2.0 * t));
    out.m0 += w * m;
    out.m2 += w * v * v * m;
    out.m4 += w * v * v * v * v * m;
  }
  return out;
}

/// Solves a tridiagonal system in place: lower[i] multiplies x[i-1], upper[i] multiplies x[i+1].
void solve_tridiagonal(const std::vector<double>& lower, const std::vector<double>& diag,
                       const std::vector<double>& upper, std::vector<double>& rhs) {
  const std::size_t n = diag.size();
  std::vector<double> c(n);
  double denom = diag[0];
  c[0] = upper[0] / denom;
  rhs[0] /= denom;
  for (std::size_t i = 1; i < n; ++i) {
    denom = diag[i] - lower[i] * c[i - 1];
    c[i] = i + 1 < n ? upper[i] / denom : 0.0;
    rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / denom;
  }
  for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= c[i] * rhs[i + 1];
}

/// Cyclic tridiagonal solve by Sherman-Morrison; corner entries are lower[0] (row 0, col n-1)
/// and upper[n-1] (row n-1, col 0).
void solve_cyclic(const std::vector<double>& lower, const std::vector<double>& diag,
                  const std::vector<double>& upper, std::vector<double>& rhs) {
  const std::size_t n = diag.size();
  const double top = lower[0];
  const double bottom = upper[n - 1];
  const double gamma = -diag[0];
  std::vector<double> bb = diag;
  bb[0] = diag[0] - gamma;
  bb[n - 1] = diag[n - 1] - bottom * top / gamma;
  std::vector<double> u(n, 0.0);
  u[0] = gamma;
  u[n - 1] = bottom;
  solve_tridiagonal(lower, bb, upper, rhs);
  solve_tridiagonal(lower, bb, upper, u);
  const double fact = (rhs[0] + top * rhs[n - 1] / gamma) / (1.0 + u[0] + top * u[n - 1] / gamma);
  for (std::size_t i = 0; i < n; ++i) rhs[i] -= fact * u[i];
}

/// Discrete operator L with (L N)_i = -(F_{i+1/2} - F_{i-1/2}) / dx stored as three diagonals.
struct Operator {
  std::vector<double> lower, diag, upper;
  double explicit_rate = 0.0;  // max over faces of 2D/dx^2 + |V|/dx
};

Operator assemble(const DensityField& n, std::span<const double> d, std::span<const double> thermal,
                  std::span<const double> temp, std::span<const double> tau, const TangentialPotential& u,
                  const DiffusionOptions& opt) {
  const std::size_t nx = n.x.size();
  const double dx = n.x.dx();
  const bool periodic = opt.boundary == DiffusionBoundary::periodic;
  std::vector<double> alpha(nx, 0.0), beta(nx, 0.0);  // face i + 1/2
  Operator op{std::vector<double>(nx, 0.0), std::vector<double>(nx, 0.0), std::vector<double>(nx, 0.0), 0.0};
  for (std::size_t i = 0; i < nx; ++i) {
    if (!periodic && i + 1 == nx) break;
    const std::size_t j = (i + 1) % nx;
    const double xc = n.x.center(i);
    const double du = u.is_flat() ? 0.0 : u(xc + dx) - u(xc);
    const double df = 0.5 * (d[i] + d[j]);
    const double drift = 0.5 * (tau[i] + tau[j]) * du / dx + 0.5 * (thermal[i] + thermal[j]) * (temp[j] - temp[i]) / dx;
    if (opt.drift == DriftScheme::centered) {
      alpha[i] = df / dx - 0.5 * drift;
      beta[i] = -df / dx - 0.5 * drift;
    } else if (drift <= 0.0) {
      alpha[i] = df / dx - drift;
      beta[i] = -df / dx;
    } else {
      alpha[i] = df / dx;
      beta[i] = -df / dx - drift;
    }
    op.explicit_rate = std::max(op.explicit_rate, 2.0 * df / (dx * dx) + std::abs(drift) / dx);
  }
  for (std::size_t i = 0; i < nx; ++i) {
    const std::size_t left = (i + nx - 1) % nx;
    const bool has_left = periodic || i > 0;
    op.diag[i] = -(alpha[i] - (has_left ? beta[left] : 0.0)) / dx;
    op.upper[i] = -beta[i] / dx;
    op.lower[i] = has_left ? alpha[left] / dx : 0.0;
  }
  return op;
}

std::vector<double> apply(const Operator& op, const std::vector<double>& v, bool periodic) {
  const std::size_t n = v.size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = op.diag[i] * v[i];
    if (i > 0) acc += op.lower[i] * v[i - 1];
    else if (periodic) acc += op.lower[i] * v[n - 1];
    if (i + 1 < n) acc += op.upper[i] * v[i + 1];
    else if (periodic) acc += op.upper[i] * v[0];
    out[i] = acc;
  }
  return out;
}

DensityField advance(const DensityField& n, std::span<const double> d, std::span<const double> thermal,
                     std::span<const double> temp, std::span<const double> tau, const TangentialPotential& u,
                     double dt, const DiffusionOptions& opt) {
  const std::size_t nx = n.x.size();
  if (n.n.size() != nx) throw DomainError("density field size does not match its grid");
  if (nx < 3) throw ConfigError("diffusion grid needs at least 3 cells");
  if (!(dt > 0.0)) throw StabilityError("diffusion step: dt must be positive");
  const bool periodic = opt.boundary == DiffusionBoundary::periodic;
  const auto op = assemble(n, d, thermal, temp, tau, u, opt);
  if (opt.time == TimeScheme::explicit_euler && dt * op.explicit_rate > 1.0 + 1e-12) {
    std::ostringstream msg;
    msg << "explicit diffusion step dt = " << dt << " exceeds the stability limit " << 1.0 / op.explicit_rate;
    throw StabilityError(msg.str());
  }
  const double theta = opt.time == TimeScheme::implicit_euler ? 1.0
                       : opt.time == TimeScheme::crank_nicolson ? 0.5
                                                                : 0.0;
  DensityField out = n;
  out.time = n.time + dt;
  std::vector<double> rhs = n.n;
  if (theta < 1.0) {
    const auto ln = apply(op, n.n, periodic);
    for (std::size_t i = 0; i < nx; ++i) rhs[i] += (1.0 - theta) * dt * ln[i];
  }
  if (theta > 0.0) {
    std::vector<double> lower(nx), diag(nx), upper(nx);
    for (std::size_t i = 0; i < nx; ++i) {
      lower[i] = -theta * dt * op.lower[i];
      diag[i] = 1.0 - theta * dt * op.diag[i];
      upper[i] = -theta * dt * op.upper[i];
    }
    if (periodic)
      solve_cyclic(lower, diag, upper, rhs);
    else
      solve_tridiagonal(lower, diag, upper, rhs);
  }
  out.n = std::move(rhs);
  return out;
}

}  // namespace

TransportCoefficients compute_coefficients(const OrbitTable& orbit, double temperature, double tau_ms) {
  if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
  if (!(tau_ms > 0.0) || !std::isfinite(tau_ms)) throw ConfigError("coefficients need a finite positive tau_ms");
  const double t = temperature;
  const double e_max = orbit.e_z().edges().back();
  const double tail = std::erfc(e_max / std::sqrt(2.0 * t));
  if (tail >= 1e-7) {
    std::ostringstream msg;
    msg << "orbit.normal_e_max = " << e_max << " leaves a Maxwellian tail of " << tail
        << " at T = " << t << " (needs < 1e-7)";
    throw ConfigError(msg.str());
  }
  double a = 0.0, b = 0.0, free_flux = 0.0;
  const auto& cells = orbit.z_cells();
  for (std::size_t k = 0; k < cells.size(); ++k) {
    const auto& cell = cells[k];
    for (std::size_t q = 0; q < cell.e.size(); ++q) {
      const double e = cell.e[q];
      const double mz = std::exp(-e * e / (2.0 * t));
      a += cell.weight[q] * cell.ell[q] * mz;
      b += cell.weight[q] * cell.ell[q] * e * e * mz;
      if (!orbit.trapped(k)) free_flux += cell.weight[q] * std::abs(e) * mz;
    }
  }
  const auto vm = velocity_moments(t);
  TransportCoefficients c;
  c.tau_ms = tau_ms;
  c.temperature = t;
  c.gamma = vm.m0 * a;
  c.gamma_prime = (vm.m2 * a + vm.m0 * b) / (2.0 * t * t);
  const double v2lm = vm.m2 * a;
  c.d0_n = tau_ms * v2lm / c.gamma;
  const double weighted = (vm.m4 * a + vm.m2 * b) / (2.0 * t * t);
  c.d0_t = tau_ms / c.gamma * (weighted - c.gamma_prime / c.gamma * v2lm);
  c.c0_p = c.d0_n / t;
  c.c0_t = c.d0_t - c.d0_n / t;
  c.c_coupling = free_flux / a;
  return c;
}

TransportCoefficients compute_coefficients(const OrbitTable& orbit, const EquilibriumWeights& eq, double tau_ms) {
  return compute_coefficients(orbit, eq.temperature(), tau_ms);
}

double density_form_flux(const TransportCoefficients& c, double n, double dn_dx, double dt_dx) {
  return c.d0_n * dn_dx + c.d0_t * n * dt_dx;
}

double pressure_form_flux(const TransportCoefficients& c, double n, double dn_dx, double dt_dx) {
  const double dp_dx = c.temperature * dn_dx + n * dt_dx;
  return c.c0_p * dp_dx + c.c0_t * n * dt_dx;
}

double DensityField::mass() const {
  double total = 0.0;
  for (double v : n) total += v;
  return total * x.dx();
}

double explicit_dt_limit(const DensityField& n, const TransportCoefficients& c, const TangentialPotential& u) {
  const std::size_t nx = n.x.size();
  const std::vector<double> d(nx, c.d0_n), th(nx, c.d0_t), temp(nx, c.temperature), tau(nx, c.tau_ms);
  const auto op = assemble(n, d, th, temp, tau, u, {});
  return op.explicit_rate > 0.0 ? 1.0 / op.explicit_rate : unbounded;
}

DensityField step_drift_diffusion(const DensityField& n, const TransportCoefficients& c,
                                  const TangentialPotential& u, double dt, const DiffusionOptions& options) {
  const std::size_t nx = n.x.size();
  const std::vector<double> d(nx, c.d0_n), th(nx, c.d0_t), temp(nx, c.temperature), tau(nx, c.tau_ms);
  return advance(n, d, th, temp, tau, u, dt, options);
}

DensityField step_nonisothermal(const DensityField& n, const TemperatureField& t,
                                std::span<const TransportCoefficients> per_cell, const TangentialPotential& u,
                                double dt, const DiffusionOptions& options) {
  const std::size_t nx = n.x.size();
  if (!(t.x == n.x) || t.t.size() != nx || per_cell.size() != nx)
    throw DomainError("temperature field and coefficients must match the density grid");
  std::vector<double> d(nx), th(nx), tau(nx);
  for (std::size_t i = 0; i < nx; ++i) {
    if (!(t.t[i] > 0.0)) throw DomainError("temperature must be strictly positive");
    d[i] = per_cell[i].d0_n;
    th[i] = per_cell[i].d0_t;
    tau[i] = per_cell[i].tau_ms;
  }
  return advance(n, d, th, t.t, tau, u, dt, options);
}

std::vector<TransportCoefficients> coefficients_for(const OrbitTable& orbit, const TemperatureField& t,
                                                    double tau_ms) {
  std::vector<TransportCoefficients> out;
  out.reserve(t.t.size());
  for (double temp : t.t) out.push_back(compute_coefficients(orbit, temp, tau_ms));
  return out;
}

namespace {

void exchange(DensityPair& p, double rate, double dt) {
  const double decay = std::exp(-2.0 * rate * dt);
  for (std::size_t i = 0; i < p.first.n.size(); ++i) {
    const double sum = p.first.n[i] + p.second.n[i];
    const double diff = (p.first.n[i] - p.second.n[i]) * decay;
    p.first.n[i] = 0.5 * (sum + diff);
    p.second.n[i] = 0.5 * (sum - diff);
  }
}

}  // namespace

DensityPair step_coupled(const DensityPair& pair, const TransportCoefficients& c, const TangentialPotential& u,
                         double dt, const DiffusionOptions& options) {
  if (!(pair.first.x == pair.second.x)) throw DomainError("coupled fields must share their grid");
  DensityPair out = pair;
  exchange(out, c.c_coupling, 0.5 * dt);
  out.first = step_drift_diffusion(out.first, c, u, dt, options);
  out.second = step_drift_diffusion(out.second, c, u, dt, options);
  exchange(out, c.c_coupling, 0.5 * dt);
  return out;
}

}  // namespace surfkin
