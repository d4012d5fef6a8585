#include "surfkin/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <sstream>

#include "surfkin/errors.hpp"

namespace surfkin {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double l1_norm(std::span<const double> v, double dx) {
  double s = 0.0;
  for (double x : v) s += std::abs(x) * dx;
  return s;
}

double l1_distance(std::span<const double> a, std::span<const double> b, double dx) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]) * dx;
  return s;
}

std::vector<double> centers(const XGrid& x) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x.center(i);
  return out;
}

StudyCase case_for(double parameter) {
  StudyCase c;
  c.parameter = parameter;
  return c;
}

StudyCheck check(std::string name, double value, double limit) {
  return {std::move(name), value, limit, value <= limit};
}

void require_decreasing(std::span<const double> values, const char* what, double upper) {
  if (values.empty()) throw ConfigError(std::string(what) + ": list is empty");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] > 0.0) || values[i] > upper) {
      std::ostringstream msg;
      msg << what << "[" << i << "] = " << values[i] << " must lie in (0, " << upper << "]";
      throw ConfigError(msg.str());
    }
    if (i > 0 && !(values[i] < values[i - 1])) throw ConfigError(std::string(what) + " must be strictly decreasing");
  }
}

/// Runs body(i) for every case, `jobs` at a time. A throwing case records its message instead.
template <class Body>
void run_cases(std::vector<StudyCase>& cases, std::size_t jobs, Body body) {
  const long n = static_cast<long>(cases.size());
  const int threads = static_cast<int>(std::max<std::size_t>(1, std::min<std::size_t>(jobs, cases.size())));
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (long i = 0; i < n; ++i) {
    auto& c = cases[static_cast<std::size_t>(i)];
    const auto start = Clock::now();
    try {
      body(c);
    } catch (const std::exception& e) {
      c.failure = e.what();
      c.mass_ok = false;
    }
    c.runtime_seconds = seconds_since(start);
  }
}

void finalize(ConvergenceReport& report) {
  report.complete = !report.cases.empty();
  std::vector<double> params, errors;
  for (const auto& c : report.cases) {
    if (!c.failure.empty() || !c.mass_ok) {
      report.complete = false;
      continue;
    }
    params.push_back(c.parameter);
    errors.push_back(c.error.l1);
  }
  report.monotone = report.complete;
  if (report.complete) {
    for (std::size_t i = 1; i < errors.size(); ++i) report.monotone = report.monotone && errors[i] < errors[i - 1];
    if (errors.size() >= 2) report.monotone = report.monotone && errors.front() > errors.back();
  }
  if (params.size() >= 2) report.fit = fit_order(params, errors);
}

KineticOptions kinetic_options(const StudyPhysics& p) {
  KineticOptions out;
  out.transport = p.transport;
  out.transport.boundary = XBoundary::periodic;
  out.cfl = p.cfl;
  return out;
}

VelocityGrid velocity_grid(const StudyPhysics& p, std::size_t nv) {
  return VelocityGrid(nv, p.v_max_factor * std::sqrt(p.temperature), p.temperature);
}

/// Integer step count reaching t_end exactly with dt no larger than the stable one.
std::pair<std::size_t, double> plan_steps(double t_end, double dt_max) {
  const auto steps = static_cast<std::size_t>(std::ceil(t_end / dt_max - 1e-9));
  const std::size_t n = std::max<std::size_t>(steps, 1);
  return {n, t_end / static_cast<double>(n)};
}

/// Drift-diffusion reference, Crank-Nicolson with `steps` equal steps.
DensityField diffuse(DensityField n, const TransportCoefficients& c, const TangentialPotential& u, double t_end,
                     std::size_t steps) {
  DiffusionOptions opt;
  opt.time = TimeScheme::crank_nicolson;
  const double dt = t_end / static_cast<double>(steps);
  for (std::size_t s = 0; s < steps; ++s) n = step_drift_diffusion(n, c, u, dt, opt);
  return n;
}

double relative_drift(double now, double start) {
  return start == 0.0 ? std::abs(now) : std::abs(now / start - 1.0);
}

/// Fills g with N0(x) / gamma * l M, or for ill-prepared data with N0(x) spread uniformly over e_z.
void fill_initial(const RelaxationKernel& kernel, SurfaceDistribution& g, std::span<const double> n0,
                  InitialData kind) {
  const double gamma = equilibrium_density(kernel, g.v());
  if (kind == InitialData::well_prepared) {
    std::vector<double> beta(n0.size());
    for (std::size_t i = 0; i < n0.size(); ++i) beta[i] = n0[i] / gamma;
    fill_equilibrium(kernel, g, beta);
    return;
  }
  const auto lay = g.layout();
  double e_measure = 0.0;
  for (std::size_t k = 0; k < lay.blocks; ++k) e_measure += g.e().width(k);
  const auto& mx = g.v().maxwellian();
  for (std::size_t ix = 0; ix < lay.nx; ++ix)
    for (std::size_t k = 0; k < lay.blocks; ++k)
      for (std::size_t j = 0; j < lay.inner; ++j) g.at(ix, k, j) = n0[ix] / (e_measure * g.v().gamma()) * mx[j];
}

}  // namespace

ErrorNorms error_norms(const DensityField& a, const DensityField& b) {
  if (!(a.x == b.x) || a.n.size() != b.n.size()) throw DomainError("error_norms: fields live on different grids");
  ErrorNorms out;
  const double dx = a.x.dx();
  double sq = 0.0;
  for (std::size_t i = 0; i < a.n.size(); ++i) {
    const double d = std::abs(a.n[i] - b.n[i]);
    out.l1 += d * dx;
    sq += d * d * dx;
    out.linf = std::max(out.linf, d);
  }
  out.l2 = std::sqrt(sq);
  return out;
}

OrderFit fit_order(std::span<const double> parameters, std::span<const double> errors) {
  OrderFit fit;
  const std::size_t n = std::min(parameters.size(), errors.size());
  if (n < 2) return fit;
  double sx = 0.0, sy = 0.0;
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(parameters[i] > 0.0) || !(errors[i] > 0.0)) return fit;
    lx[i] = std::log(parameters[i]);
    ly[i] = std::log(errors[i]);
    sx += lx[i];
    sy += ly[i];
  }
  const double mx = sx / static_cast<double>(n), my = sy / static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  if (sxx == 0.0) return fit;
  fit.order = sxy / sxx;
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = ly[i] - (my + fit.order * (lx[i] - mx));
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / static_cast<double>(n));
  return fit;
}

bool ConvergenceReport::passed() const {
  if (!complete) return false;
  if (cases.size() >= 2 && !monotone) return false;
  for (const auto& c : cases)
    for (const auto& ch : c.checks)
      if (!ch.passed) return false;
  return true;
}

ConvergenceReport run_diffusion_limit_study(const DiffusionLimitSetup& setup, std::span<const double> eps_list) {
  require_decreasing(eps_list, "eps_list", 0.25);
  if (setup.nx < 4 || setup.nv < 4) throw ConfigError("diffusion study: grid too small");
  ConvergenceReport report;
  report.study = "diffusion_limit";
  report.parameter_name = "eps";
  for (double eps : eps_list) report.cases.push_back(case_for(eps));

  const auto& phys = setup.physics;
  const OrbitTable orbit(phys.normal, setup.tangential, phys.orbit);
  const EquilibriumWeights eq(orbit, phys.temperature);
  const XGrid x(setup.nx, setup.x_lo, setup.x_hi);
  const VelocityGrid v = velocity_grid(phys, setup.nv);
  const double length = x.length();
  std::vector<double> n0(setup.nx);
  for (std::size_t i = 0; i < setup.nx; ++i)
    n0[i] = 1.0 + setup.amplitude * std::sin(2.0 * std::numbers::pi * (x.center(i) - x.lower()) / length);

  run_cases(report.cases, setup.jobs, [&](StudyCase& c) {
    const double eps = c.parameter;
    const double tau = eps * setup.tau_tilde;
    const double t_end = setup.t_tilde / eps;
    const RelaxationKernel kernel(orbit, eq, tau);
    const auto opt = kinetic_options(phys);
    SurfaceDistribution g(x, v, orbit.e_z());
    fill_initial(kernel, g, n0, setup.initial);
    const auto [steps, dt] = plan_steps(t_end, stable_dt(g, setup.tangential, phys.cfl));
    const double m0 = g.mass();
    for (std::size_t s = 0; s < steps; ++s) g = step_trapped(g, kernel, setup.tangential, dt, opt);
    const double kinetic_drift = relative_drift(g.mass(), m0);

    const auto coeffs = compute_coefficients(orbit, phys.temperature, tau);
    const DensityField start(x, n0);
    const auto limit = diffuse(start, coeffs, setup.tangential, t_end, 2 * steps);
    const double diffusion_drift = relative_drift(limit.mass(), start.mass());

    const DensityField observed(x, moments(g).density);
    c.error = error_norms(observed, limit);
    c.relative_l1 = c.error.l1 / l1_norm(limit.n, x.dx());
    c.mass_defect = std::max(kinetic_drift, diffusion_drift);
    c.mass_ok = c.mass_defect <= mass_tolerance;
    c.x = centers(x);
    c.profiles = {{"N_kinetic", observed.n}, {"N_diffusion", limit.n}};
    c.checks.push_back(check("mass_drift", c.mass_defect, mass_tolerance));
    c.diagnostics.push_back({"steps", static_cast<double>(steps)});
  });
  finalize(report);
  return report;
}

ConvergenceReport run_homogenization_study(const HomogenizationSetup& setup, std::span<const double> delta_list) {
  require_decreasing(delta_list, "delta_list", 0.5 * setup.length);
  ConvergenceReport report;
  report.study = "homogenization";
  report.parameter_name = "delta";
  const XGrid x(setup.nx, 0.0, setup.length);
  for (double delta : delta_list) {
    const double periods = setup.length / (2.0 * delta);
    const double cells = 2.0 * delta / x.dx();
    if (std::abs(periods - std::round(periods)) > 1e-9 || std::abs(cells - std::round(cells)) > 1e-9)
      throw ConfigError("homogenization: the domain must hold a whole number of periods, each a whole number of cells");
    if (std::round(cells) < 16.0) {
      std::ostringstream msg;
      msg << "homogenization: delta = " << delta << " gets " << cells << " cells per period (needs >= 16)";
      throw ConfigError(msg.str());
    }
    report.cases.push_back(case_for(delta));
  }
  const auto& phys = setup.physics;
  const VelocityGrid v = velocity_grid(phys, setup.nv);

  run_cases(report.cases, setup.jobs, [&](StudyCase& c) {
    const double delta = c.parameter;
    const TangentialPotential u(setup.shape, setup.amplitude, delta);
    const OrbitTable orbit(phys.normal, u, phys.orbit);
    const EquilibriumWeights eq(orbit, phys.temperature);
    const RelaxationKernel kernel(orbit, eq, setup.tau_ms);
    const MesoKernel meso(orbit, eq);
    const auto opt = kinetic_options(phys);
    const double t = phys.temperature;

    // Fine data b(x) exp(-U/T) l M is a function of e_x, so its homogenized partner is b(x) l M
    // with the period mean of exp(-U/T) gamma as the density factor.
    const auto per = static_cast<std::size_t>(std::lround(2.0 * delta / x.dx()));
    std::vector<double> b(setup.nx), beta(setup.nx), meso_density(setup.nx);
    SurfaceDistribution g(x, v, orbit.e_z());
    const double gamma = equilibrium_density(kernel, v);
    double mean_weight = 0.0;
    for (std::size_t i = 0; i < per; ++i) mean_weight += std::exp(-u(x.center(i)) / t) * gamma;
    mean_weight /= static_cast<double>(per);
    for (std::size_t i = 0; i < setup.nx; ++i) {
      b[i] = 1.0 + setup.density_amplitude * std::sin(2.0 * std::numbers::pi * x.center(i) / setup.length);
      beta[i] = b[i] * std::exp(-u(x.center(i)) / t);
      meso_density[i] = b[i] * mean_weight;
    }
    fill_equilibrium(kernel, g, beta);
    MesoDistribution h(x, orbit.e_x(), orbit.e_z());
    fill_meso_equilibrium(kernel, meso, h, meso_density);

    const double dt_max = std::min(stable_dt(g, u, phys.cfl), stable_dt(h, meso, phys.cfl));
    const auto [steps, dt] = plan_steps(setup.t_end, dt_max);
    const double g0 = g.mass(), h0 = total_mass(h, meso);
    for (std::size_t s = 0; s < steps; ++s) {
      g = step_trapped(g, kernel, u, dt, opt);
      h = step_mesoscopic(h, kernel, meso, dt, opt);
    }
    c.mass_defect = std::max(relative_drift(g.mass(), g0), relative_drift(total_mass(h, meso), h0));
    c.mass_ok = c.mass_defect <= mass_tolerance;

    const auto fine = moments(g).density;
    const auto coarse = moments(h, meso).density;
    const std::size_t np = setup.nx / per;
    const XGrid periods(np, 0.0, setup.length);
    DensityField fine_avg(periods, std::vector<double>(np)), meso_avg(periods, std::vector<double>(np));
    for (std::size_t p = 0; p < np; ++p) {
      double a = 0.0, m = 0.0;
      for (std::size_t i = p * per; i < (p + 1) * per; ++i) {
        a += fine[i];
        m += coarse[i];
      }
      fine_avg.n[p] = a / static_cast<double>(per);
      meso_avg.n[p] = m / static_cast<double>(per);
    }
    c.error = error_norms(fine_avg, meso_avg);
    c.relative_l1 = c.error.l1 / l1_norm(meso_avg.n, periods.dx());

    // Orbit classification of the fine run: bound when v^2 + 2U <= 2 U_m.
    const auto lay = g.layout();
    double fine_bound = 0.0, fine_total = 0.0;
    for (std::size_t i = 0; i < lay.nx; ++i) {
      const double twice_u = 2.0 * u(x.center(i));
      for (std::size_t k = 0; k < lay.blocks; ++k)
        for (std::size_t j = 0; j < lay.inner; ++j) {
          const double w = g.at(i, k, j) * orbit.e_z().width(k);
          fine_total += w;
          if (v.node(j) * v.node(j) + twice_u <= 2.0 * u.amplitude()) fine_bound += w;
        }
    }
    const auto hl = h.layout();
    double meso_bound = 0.0, meso_total = 0.0;
    for (std::size_t i = 0; i < hl.nx; ++i)
      for (std::size_t k = 0; k < hl.blocks; ++k)
        for (std::size_t m = 0; m < hl.inner; ++m) {
          const double w = h.at(i, m, k) * meso.measure()[m] * orbit.e_z().width(k);
          meso_total += w;
          if (meso.bound()[m]) meso_bound += w;
        }
    const double ff = fine_bound / fine_total, mf = meso_bound / meso_total;
    c.x = centers(periods);
    c.profiles = {{"N_fine_period_mean", fine_avg.n}, {"N_meso_period_mean", meso_avg.n}};
    c.checks.push_back(check("mass_drift", c.mass_defect, mass_tolerance));
    // Without a bound set (flat U) the relative difference is undefined; compare absolutely.
    const double bound_diff = mf > 0.0 ? std::abs(ff - mf) / mf : std::abs(ff - mf);
    c.checks.push_back(check("bound_fraction_rel_diff", bound_diff, setup.bound_fraction_tolerance));
    c.diagnostics.push_back({"bound_fraction_fine", ff});
    c.diagnostics.push_back({"bound_fraction_meso", mf});
  });
  finalize(report);
  return report;
}

CouplingRegime parse_regime(const std::string& name) {
  if (name == "strong") return CouplingRegime::strong;
  if (name == "moderate") return CouplingRegime::moderate;
  if (name == "weak") return CouplingRegime::weak;
  throw ConfigError("regime must be strong, moderate or weak (got '" + name + "')");
}

std::string to_string(CouplingRegime regime) {
  switch (regime) {
    case CouplingRegime::strong: return "strong";
    case CouplingRegime::moderate: return "moderate";
    case CouplingRegime::weak: return "weak";
  }
  return "unknown";
}

double coupling_scale(CouplingRegime regime, double eps) {
  switch (regime) {
    case CouplingRegime::strong: return 1.0 / eps;
    case CouplingRegime::moderate: return 1.0;
    case CouplingRegime::weak: return eps;
  }
  return 1.0;
}

ConvergenceReport run_coupling_regime_study(const CouplingSetup& setup, CouplingRegime regime,
                                            std::span<const double> eps_list) {
  require_decreasing(eps_list, "eps_list", 0.25);
  if (!setup.physics.normal.has_free_states()) throw ConfigError("coupling study needs a finite plateau W_m");
  ConvergenceReport report;
  report.study = "coupling_" + to_string(regime);
  report.parameter_name = "eps";
  for (double eps : eps_list) report.cases.push_back(case_for(eps));

  const auto& phys = setup.physics;
  const auto& u = setup.tangential;
  const OrbitTable orbit(phys.normal, u, phys.orbit);
  const EquilibriumWeights eq(orbit, phys.temperature);
  const XGrid x(setup.nx, setup.x_lo, setup.x_hi);
  const VelocityGrid v = velocity_grid(phys, setup.nv);
  const double length = x.length();
  std::vector<double> n1(setup.nx), n2(setup.nx);
  for (std::size_t i = 0; i < setup.nx; ++i) {
    const double phase = 2.0 * std::numbers::pi * (x.center(i) - x.lower()) / length;
    n1[i] = 1.0 + setup.amplitude * std::sin(phase);
    n2[i] = 0.5 * (1.0 + setup.amplitude * std::cos(phase));
  }

  run_cases(report.cases, setup.jobs, [&](StudyCase& c) {
    const double eps = c.parameter;
    const double tau = eps * setup.tau_tilde;
    const double scale = coupling_scale(regime, eps);
    const RelaxationKernel kernel(orbit, eq, tau);
    const auto coeffs = compute_coefficients(orbit, phys.temperature, tau);
    const double t_d = length * length / coeffs.d0_n;
    const double horizon = regime == CouplingRegime::strong     ? setup.strong_horizon
                           : regime == CouplingRegime::moderate ? setup.moderate_horizon
                                                                : setup.weak_horizon;
    const double t_end = horizon * t_d;
    const auto opt = kinetic_options(phys);

    ChannelState state{SurfaceDistribution(x, v, orbit.e_z()), SurfaceDistribution(x, v, orbit.e_z()), scale};
    fill_initial(kernel, state.lower, n1, InitialData::well_prepared);
    fill_initial(kernel, state.upper, n2, InitialData::well_prepared);
    const auto [steps, dt] = plan_steps(t_end, stable_dt(state.lower, u, phys.cfl));
    const double m0 = state.lower.mass() + state.upper.mass();
    const double gap0 = l1_distance(n1, n2, x.dx());
    double first_below = -1.0;
    for (std::size_t s = 0; s < steps; ++s) {
      state = step_channel(state, orbit, kernel, u, dt, opt);
      if (regime == CouplingRegime::strong && first_below < 0.0) {
        const auto a = moments(state.lower).density, b = moments(state.upper).density;
        if (l1_distance(a, b, x.dx()) < setup.decay_target * gap0) first_below = static_cast<double>(s + 1) * dt;
      }
    }
    const double kinetic_drift = relative_drift(state.lower.mass() + state.upper.mass(), m0);
    const DensityField first(x, moments(state.lower).density), second(x, moments(state.upper).density);

    c.x = centers(x);
    c.profiles = {{"N1_kinetic", first.n}, {"N2_kinetic", second.n}};
    c.diagnostics.push_back({"t_d", t_d});
    c.diagnostics.push_back({"t_end", t_end});
    c.diagnostics.push_back({"steps", static_cast<double>(steps)});
    double reference_drift = 0.0;
    if (regime == CouplingRegime::weak) {
      // Per-field exchange rate scale * c / 2: the kinetic layers lose their difference at rate scale * c.
      auto pair_coeffs = coeffs;
      pair_coeffs.c_coupling = 0.5 * scale * coeffs.c_coupling;
      DiffusionOptions dopt;
      dopt.time = TimeScheme::crank_nicolson;
      DensityPair pair{DensityField(x, n1), DensityField(x, n2)};
      const double m_pair = pair.first.mass() + pair.second.mass();
      const std::size_t ref_steps = 2 * steps;
      const double h = t_end / static_cast<double>(ref_steps);
      for (std::size_t s = 0; s < ref_steps; ++s) pair = step_coupled(pair, pair_coeffs, u, h, dopt);
      reference_drift = relative_drift(pair.first.mass() + pair.second.mass(), m_pair);
      const auto e1 = error_norms(first, pair.first), e2 = error_norms(second, pair.second);
      const double r1 = e1.l1 / l1_norm(pair.first.n, x.dx()), r2 = e2.l1 / l1_norm(pair.second.n, x.dx());
      c.error = {e1.l1 + e2.l1, std::hypot(e1.l2, e2.l2), std::max(e1.linf, e2.linf)};
      c.relative_l1 = std::max(r1, r2);
      c.profiles.push_back({"N1_two_field", pair.first.n});
      c.profiles.push_back({"N2_two_field", pair.second.n});
      c.checks.push_back(check("layer1_rel_l1", r1, setup.weak_tolerance));
      c.checks.push_back(check("layer2_rel_l1", r2, setup.weak_tolerance));

      // Uniform pair (2, 0): N1 - N2 = 2 exp(-2 c t) for the two-field system.
      const XGrid unit(8, 0.0, 1.0);
      DensityPair flat{DensityField(unit, std::vector<double>(8, 2.0)), DensityField(unit, std::vector<double>(8, 0.0))};
      const auto flat_u = TangentialPotential::flat(u.half_period());
      for (std::size_t s = 0; s < ref_steps; ++s) flat = step_coupled(flat, pair_coeffs, flat_u, h, dopt);
      double worst = 0.0;
      const double exact = 2.0 * std::exp(-2.0 * pair_coeffs.c_coupling * t_end);
      for (std::size_t i = 0; i < 8; ++i) worst = std::max(worst, std::abs(flat.first.n[i] - flat.second.n[i] - exact));
      c.checks.push_back(check("uniform_closed_form_abs", worst, setup.closed_form_tolerance));
    } else {
      const std::vector<double> sum0 = [&] {
        std::vector<double> s(setup.nx);
        for (std::size_t i = 0; i < setup.nx; ++i) s[i] = n1[i] + n2[i];
        return s;
      }();
      const DensityField start(x, sum0);
      const auto total = diffuse(start, coeffs, u, t_end, 2 * steps);
      reference_drift = relative_drift(total.mass(), start.mass());
      std::vector<double> kinetic_sum(setup.nx), half(setup.nx);
      for (std::size_t i = 0; i < setup.nx; ++i) {
        kinetic_sum[i] = first.n[i] + second.n[i];
        half[i] = 0.5 * total.n[i];
      }
      const DensityField half_field(x, half);
      const double total_norm = l1_norm(total.n, x.dx());
      const double sum_error = l1_distance(kinetic_sum, total.n, x.dx());
      const auto e1 = error_norms(first, half_field), e2 = error_norms(second, half_field);
      c.error = {e1.l1 + e2.l1, std::hypot(e1.l2, e2.l2), std::max(e1.linf, e2.linf)};
      c.relative_l1 = c.error.l1 / total_norm;
      c.profiles.push_back({"N_total_diffusion", total.n});
      // Each layer must sit at half the one-field solution up to the error of the sum itself.
      const double allowance = 0.5 * sum_error + setup.terminal_slack * total_norm;
      c.checks.push_back(check("layer1_vs_half_total_l1", e1.l1, allowance));
      c.checks.push_back(check("layer2_vs_half_total_l1", e2.l1, allowance));
      c.diagnostics.push_back({"sum_vs_total_rel_l1", sum_error / total_norm});
      if (regime == CouplingRegime::strong) {
        const double deadline = 0.1 * t_d;
        c.checks.push_back(check("decay_time_over_t_d", first_below < 0.0 ? unbounded : first_below / t_d,
                                 deadline / t_d));
        c.diagnostics.push_back({"final_gap_fraction", l1_distance(first.n, second.n, x.dx()) / gap0});
      }
    }
    c.mass_defect = std::max(kinetic_drift, reference_drift);
    c.mass_ok = c.mass_defect <= mass_tolerance;
    c.checks.push_back(check("mass_drift", c.mass_defect, mass_tolerance));
  });
  finalize(report);
  return report;
}

}  // namespace surfkin
