// Command-line front end: one subcommand per run, CSV outputs plus manifest.json.
//
// Exit status: 0 when every built-in check passed, 3 when the run finished but a check failed
// (outputs and manifest are still written), 1 on any error, 2 on a usage error.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <omp.h>

#include "surfkin/config.hpp"
#include "surfkin/diffusion.hpp"
#include "surfkin/errors.hpp"
#include "surfkin/harness.hpp"
#include "surfkin/kernel.hpp"
#include "surfkin/kinetic.hpp"
#include "surfkin/orbits.hpp"
#include "surfkin/output.hpp"

namespace {

using namespace surfkin;

struct Run {
  Config config;
  RunOutput out;
  std::size_t jobs;
  std::vector<ManifestCheck> checks;

  void check(std::string name, double value, double limit) {
    checks.push_back({std::move(name), value <= limit, value, limit});
  }
};

std::string num(double v) { return format_number(v); }
std::string flag(bool b) { return b ? "1" : "0"; }

double relative_drift(double now, double start) {
  return start == 0.0 ? std::abs(now) : std::abs(now / start - 1.0);
}

/// Initial density N0(x) of the run section. Random data comes from the seeded mt19937_64 with a
/// fixed bits-to-double map, so it does not depend on the standard library's distributions.
std::vector<double> initial_density(const Config& c, const XGrid& x, const TangentialPotential& u) {
  std::vector<double> n(x.size(), 1.0);
  const double a = c.run.amplitude;
  switch (c.run.initial) {
    case InitialProfile::uniform:
      break;
    case InitialProfile::sine:
      for (std::size_t i = 0; i < x.size(); ++i)
        n[i] = 1.0 + a * std::sin(2.0 * std::numbers::pi * (x.center(i) - x.lower()) / x.length());
      break;
    case InitialProfile::boltzmann: {
      double mean = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) mean += (n[i] = std::exp(-u(x.center(i)) / c.temperature));
      mean /= static_cast<double>(x.size());
      for (double& v : n) v /= mean;
      break;
    }
    case InitialProfile::random: {
      std::mt19937_64 rng(c.seed);
      for (double& v : n) v = 1.0 + a * (2.0 * static_cast<double>(rng() >> 11) * 0x1p-53 - 1.0);
      break;
    }
  }
  return n;
}

/// Output times t_k = k t_end / snapshots; the step is the same inside every interval.
struct Schedule {
  std::size_t steps_per_interval;
  double dt;
};

Schedule schedule(const Config& c, double dt_max) {
  const double interval = c.run.t_end / static_cast<double>(c.run.snapshots);
  const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(interval / dt_max - 1e-9)));
  return {n, interval / static_cast<double>(n)};
}

void fill_from_density(const RelaxationKernel& kernel, SurfaceDistribution& g, std::span<const double> n) {
  const double gamma = equilibrium_density(kernel, g.v());
  std::vector<double> beta(n.size());
  for (std::size_t i = 0; i < n.size(); ++i) beta[i] = n[i] / gamma;
  fill_equilibrium(kernel, g, beta);
}

void add_snapshot(CsvTable& t, double time, const XGrid& x, std::initializer_list<const Moments*> fields) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::vector<std::string> row{num(time), num(x.center(i))};
    for (const Moments* m : fields) {
      row.push_back(num(m->density[i]));
      row.push_back(num(m->flux[i]));
    }
    t.row(std::move(row));
  }
}

std::string dump(const SurfaceDistribution& g) {
  const auto l = g.layout();
  return distribution_dump({l.nx, l.blocks, l.inner, 1}, g.values());
}

struct Physics {
  OrbitTable orbit;
  EquilibriumWeights eq;
  RelaxationKernel kernel;
};

Physics physics(const Config& c) {
  OrbitTable orbit(c.normal, c.tangential, orbit_spec(c));
  EquilibriumWeights eq(orbit, c.temperature);
  RelaxationKernel kernel(orbit, eq, c.tau_ms, c.grid.kernel_points);
  return {std::move(orbit), std::move(eq), std::move(kernel)};
}

void cmd_orbit(Run& r) {
  const auto orbit = build_orbit_table(r.config.normal, r.config.tangential, orbit_spec(r.config));
  CsvTable z({"e", "z_minus", "z_plus", "tau", "ell", "trapped"});
  double worst = 0.0;
  for (const auto& n : orbit.z_nodes()) {
    z.row({num(n.e), num(n.z_minus), num(n.z_plus), num(n.tau), num(n.ell), flag(n.trapped)});
    worst = std::max(worst, std::abs(n.ell - std::abs(n.e) * n.tau) / n.ell);
  }
  CsvTable x({"e_x", "y_minus", "y_plus", "tau_fl", "w_x", "sigma_bar", "bound"});
  for (const auto& n : orbit.x_nodes()) {
    x.row({num(n.e), num(n.y_minus), num(n.y_plus), n.tau_fl.infinite ? "inf" : num(n.tau_fl.value), num(n.w_x),
           num(n.sigma_bar), flag(n.bound)});
  }
  r.out.write("orbit_z.csv", z.text());
  r.out.write("orbit_x.csv", x.text());
  r.check("ell_minus_e_tau_rel", worst, 1e-12);
}

void cmd_kernel(Run& r) {
  const auto p = physics(r.config);
  const auto& k = p.kernel.matrix();
  const auto n = p.kernel.size();
  std::vector<std::string> header{"e_z"};
  for (std::size_t j = 0; j < n; ++j) header.push_back("k" + std::to_string(j));
  CsvTable t(header);
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::string> row{num(p.orbit.e_z().node(i))};
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      row.push_back(num(k(i, j)));
      sum += k(i, j);
    }
    worst = std::max(worst, std::abs(sum - 1.0));
    t.row(std::move(row));
  }
  CsvTable w({"e_z", "cell_weight", "shape", "exchange_time"});
  for (std::size_t i = 0; i < n; ++i) {
    w.row({num(p.orbit.e_z().node(i)), num(p.kernel.cell_weight()[i]), num(p.kernel.shape()[i]),
           num(p.kernel.exchange_time()[i])});
  }
  r.out.write("kernel.csv", t.text());
  r.out.write("kernel_cells.csv", w.text());
  r.check("row_sum_defect_after", worst, 1e-12);
  r.check("row_sum_defect_before", p.kernel.row_sum_defect(), 1e-6);
}

void cmd_coeffs(Run& r) {
  const auto orbit = build_orbit_table(r.config.normal, r.config.tangential, orbit_spec(r.config));
  const auto c = compute_coefficients(orbit, r.config.temperature, r.config.tau_ms);
  CsvTable t({"name", "value"});
  t.row({"d0_n", num(c.d0_n)})
      .row({"d0_t", num(c.d0_t)})
      .row({"c0_p", num(c.c0_p)})
      .row({"c0_t", num(c.c0_t)})
      .row({"c_coupling", num(c.c_coupling)})
      .row({"gamma", num(c.gamma)})
      .row({"gamma_prime", num(c.gamma_prime)})
      .row({"tau_ms", num(c.tau_ms)})
      .row({"temperature", num(c.temperature)})
      .row({"tau_ms_times_T", num(c.tau_ms * c.temperature)});
  r.out.write("coeffs.csv", t.text());
  r.check("d0_n_vs_tau_T_rel", std::abs(c.d0_n / (c.tau_ms * c.temperature) - 1.0), 1e-8);
  r.check("c0_p_T_minus_d0_n", std::abs(c.c0_p * c.temperature - c.d0_n), 0.0);
}

void cmd_run_kinetic(Run& r) {
  const auto& c = r.config;
  const auto p = physics(c);
  const auto opt = kinetic_options(c);
  SurfaceDistribution g(x_grid(c), velocity_grid(c), p.orbit.e_z());
  fill_from_density(p.kernel, g, initial_density(c, g.x(), c.tangential));
  const auto plan = schedule(c, stable_dt(g, c.tangential, c.solver.cfl));
  CsvTable snaps({"t", "x", "N", "Phi"});
  auto m = moments(g);
  add_snapshot(snaps, g.time, g.x(), {&m});
  const double m0 = g.mass();
  for (std::size_t k = 1; k <= c.run.snapshots; ++k) {
    for (std::size_t s = 0; s < plan.steps_per_interval; ++s) g = step_trapped(g, p.kernel, c.tangential, plan.dt, opt);
    m = moments(g);
    add_snapshot(snaps, g.time, g.x(), {&m});
  }
  r.out.write("snapshots.csv", snaps.text());
  if (c.run.dump) r.out.write("final.bin", dump(g));
  if (c.solver.transport.boundary == XBoundary::periodic) r.check("mass_drift", relative_drift(g.mass(), m0), 1e-10);
}

void cmd_run_two_group(Run& r) {
  const auto& c = r.config;
  const auto p = physics(c);
  const auto opt = kinetic_options(c);
  SurfaceDistribution g(x_grid(c), velocity_grid(c), p.orbit.e_z());
  fill_from_density(p.kernel, g, initial_density(c, g.x(), c.tangential));
  const auto plan = schedule(c, stable_dt(g, c.tangential, c.solver.cfl));
  CsvTable snaps({"t", "x", "N", "Phi"});
  CsvTable ledger({"t", "mass", "sent_to_bulk", "boundary_outflow"});
  auto m = moments(g);
  add_snapshot(snaps, g.time, g.x(), {&m});
  const double m0 = g.mass();
  double bulk = 0.0, boundary = 0.0;
  ledger.row({num(g.time), num(m0), num(bulk), num(boundary)});
  for (std::size_t k = 1; k <= c.run.snapshots; ++k) {
    for (std::size_t s = 0; s < plan.steps_per_interval; ++s) {
      auto step = step_two_group(g, c.reservoir, p.orbit, p.kernel, c.tangential, plan.dt, opt);
      g = std::move(step.g);
      bulk += step.record.bulk_outflux;
      boundary += step.record.boundary_outflux;
    }
    m = moments(g);
    add_snapshot(snaps, g.time, g.x(), {&m});
    ledger.row({num(g.time), num(g.mass()), num(bulk), num(boundary)});
  }
  r.out.write("snapshots.csv", snaps.text());
  r.out.write("exchange.csv", ledger.text());
  if (c.run.dump) r.out.write("final.bin", dump(g));
  // Mass on the surface plus everything sent away must equal the initial mass.
  const double scale = std::max({m0, g.mass(), std::abs(bulk) + std::abs(boundary)});
  r.check("mass_balance", std::abs(g.mass() + bulk + boundary - m0) / scale, 1e-10);
}

void cmd_run_channel(Run& r) {
  const auto& c = r.config;
  const auto p = physics(c);
  const auto opt = kinetic_options(c);
  const double scale = coupling_scale(c.channel.regime, c.channel.eps);
  ChannelState state{SurfaceDistribution(x_grid(c), velocity_grid(c), p.orbit.e_z()),
                     SurfaceDistribution(x_grid(c), velocity_grid(c), p.orbit.e_z()), scale};
  const auto n1 = initial_density(c, state.lower.x(), c.tangential);
  fill_from_density(p.kernel, state.lower, n1);
  fill_from_density(p.kernel, state.upper, std::vector<double>(n1.size(), 0.5));
  const auto plan = schedule(c, stable_dt(state.lower, c.tangential, c.solver.cfl));
  CsvTable snaps({"t", "x", "N1", "Phi1", "N2", "Phi2"});
  auto a = moments(state.lower), b = moments(state.upper);
  add_snapshot(snaps, state.lower.time, state.lower.x(), {&a, &b});
  const double m0 = state.lower.mass() + state.upper.mass();
  for (std::size_t k = 1; k <= c.run.snapshots; ++k) {
    for (std::size_t s = 0; s < plan.steps_per_interval; ++s)
      state = step_channel(state, p.orbit, p.kernel, c.tangential, plan.dt, opt);
    a = moments(state.lower);
    b = moments(state.upper);
    add_snapshot(snaps, state.lower.time, state.lower.x(), {&a, &b});
  }
  r.out.write("snapshots.csv", snaps.text());
  if (c.run.dump) {
    r.out.write("final_lower.bin", dump(state.lower));
    r.out.write("final_upper.bin", dump(state.upper));
  }
  if (c.solver.transport.boundary == XBoundary::periodic)
    r.check("mass_drift", relative_drift(state.lower.mass() + state.upper.mass(), m0), 1e-10);
}

void cmd_run_meso(Run& r) {
  const auto& c = r.config;
  const auto p = physics(c);
  const MesoKernel meso(p.orbit, p.eq, c.grid.kernel_points);
  const auto opt = kinetic_options(c);
  MesoDistribution h(x_grid(c), p.orbit.e_x(), p.orbit.e_z());
  // The mesoscopic density is already a period mean, so the Boltzmann profile reduces to uniform.
  auto n0 = initial_density(c, h.x(), TangentialPotential::flat(c.tangential.half_period()));
  fill_meso_equilibrium(p.kernel, meso, h, n0);
  const auto plan = schedule(c, std::min(stable_dt(h, meso, c.solver.cfl), c.run.t_end));
  CsvTable snaps({"t", "x", "N", "Phi"});
  auto m = moments(h, meso);
  add_snapshot(snaps, h.time, h.x(), {&m});
  const double m0 = total_mass(h, meso);
  for (std::size_t k = 1; k <= c.run.snapshots; ++k) {
    for (std::size_t s = 0; s < plan.steps_per_interval; ++s) h = step_mesoscopic(h, p.kernel, meso, plan.dt, opt);
    m = moments(h, meso);
    add_snapshot(snaps, h.time, h.x(), {&m});
  }
  r.out.write("snapshots.csv", snaps.text());
  if (c.run.dump) {
    const auto l = h.layout();
    r.out.write("final.bin", distribution_dump({l.nx, l.blocks, l.inner, 1}, h.values()));
  }
  if (c.solver.transport.boundary == XBoundary::periodic)
    r.check("mass_drift", relative_drift(total_mass(h, meso), m0), 1e-10);
}

void cmd_run_diffusion(Run& r) {
  const auto& c = r.config;
  const auto orbit = build_orbit_table(c.normal, c.tangential, orbit_spec(c));
  const auto coeffs = compute_coefficients(orbit, c.temperature, c.tau_ms);
  const XGrid x(c.grid.diffusion_nx, c.grid.x_min, c.grid.x_max);
  DensityField n(x, initial_density(c, x, c.tangential));
  double dt_max = c.solver.diffusion_dt;
  if (c.solver.diffusion.time == TimeScheme::explicit_euler)
    dt_max = std::min(dt_max, c.solver.cfl * explicit_dt_limit(n, coeffs, c.tangential));
  const auto plan = schedule(c, dt_max);
  CsvTable snaps({"t", "x", "N"});
  auto add = [&] {
    for (std::size_t i = 0; i < x.size(); ++i) snaps.row({num(n.time), num(x.center(i)), num(n.n[i])});
  };
  add();
  const double m0 = n.mass();
  for (std::size_t k = 1; k <= c.run.snapshots; ++k) {
    for (std::size_t s = 0; s < plan.steps_per_interval; ++s)
      n = step_drift_diffusion(n, coeffs, c.tangential, plan.dt, c.solver.diffusion);
    add();
  }
  r.out.write("snapshots.csv", snaps.text());
  r.check("mass_drift", relative_drift(n.mass(), m0), 1e-10);
}

void write_report(Run& r, const ConvergenceReport& report) {
  CsvTable t({"study", "parameter_name", "parameter", "l1", "l2", "linf", "relative_l1", "mass_defect", "mass_ok",
              "checks_passed", "failure"});
  CsvTable checks({"parameter", "name", "value", "limit", "passed"});
  CsvTable diagnostics({"parameter", "name", "value"});
  for (const auto& c : report.cases) {
    bool ok = c.failure.empty();
    for (const auto& ch : c.checks) {
      ok = ok && ch.passed;
      checks.row({num(c.parameter), ch.name, num(ch.value), num(ch.limit), flag(ch.passed)});
      std::ostringstream name;
      name << report.parameter_name << "=" << c.parameter << ":" << ch.name;
      r.checks.push_back({name.str(), ch.passed, ch.value, ch.limit});
    }
    for (const auto& d : c.diagnostics) diagnostics.row({num(c.parameter), d.name, num(d.value)});
    std::string failure = c.failure;
    for (char& ch : failure)
      if (ch == ',' || ch == '\n') ch = ';';
    t.row({report.study, report.parameter_name, num(c.parameter), num(c.error.l1), num(c.error.l2),
           num(c.error.linf), num(c.relative_l1), num(c.mass_defect), flag(c.mass_ok), flag(ok), failure});
  }
  CsvTable summary({"name", "value"});
  summary.row({"order", num(report.fit.order)})
      .row({"fit_residual", num(report.fit.residual)})
      .row({"monotone", flag(report.monotone)})
      .row({"complete", flag(report.complete)})
      .row({"passed", flag(report.passed())});
  r.out.write("report.csv", t.text());
  r.out.write("checks.csv", checks.text());
  r.out.write("diagnostics.csv", diagnostics.text());
  r.out.write("summary.csv", summary.text());

  for (const auto& c : report.cases) {
    if (c.profiles.empty()) continue;
    std::vector<std::string> names{"x"};
    for (const auto& p : c.profiles) names.push_back(p.name);
    GnuplotData data(names);
    for (const auto& cc : report.cases) {
      if (cc.profiles.size() + 1 != names.size()) continue;
      std::vector<std::vector<double>> cols{cc.x};
      for (const auto& p : cc.profiles) cols.push_back(p.values);
      std::ostringstream title;
      title << report.parameter_name << " = " << cc.parameter;
      data.block(title.str(), cols);
    }
    r.out.write(report.study + ".dat", data.text());
    break;
  }
  r.checks.push_back({"complete", report.complete, 0.0, 0.0});
  if (report.cases.size() >= 2) r.checks.push_back({"monotone", report.monotone, 0.0, 0.0});
}

void cmd_verify_limit(Run& r) {
  auto setup = r.config.study.limit;
  setup.jobs = r.jobs;
  write_report(r, run_diffusion_limit_study(setup, r.config.study.eps_list));
}

void cmd_verify_homog(Run& r) {
  auto setup = r.config.study.homogenization;
  setup.jobs = r.jobs;
  write_report(r, run_homogenization_study(setup, r.config.study.delta_list));
}

void cmd_verify_coupling(Run& r) {
  auto setup = r.config.study.coupling;
  setup.jobs = r.jobs;
  write_report(r, run_coupling_regime_study(setup, r.config.study.regime, r.config.study.coupling_eps));
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<std::string, std::pair<std::function<void(Run&)>, const char*>> commands{
      {"orbit", {cmd_orbit, "orbit tables of the normal and tangential potentials"}},
      {"kernel", {cmd_kernel, "discrete relaxation kernel"}},
      {"coeffs", {cmd_coeffs, "drift-diffusion transport coefficients"}},
      {"run-kinetic", {cmd_run_kinetic, "trapped-molecule kinetic run"}},
      {"run-two-group", {cmd_run_two_group, "trapped and free molecules with bulk exchange"}},
      {"run-channel", {cmd_run_channel, "two coupled layers of a channel"}},
      {"run-meso", {cmd_run_meso, "homogenized mesoscopic run"}},
      {"run-diffusion", {cmd_run_diffusion, "drift-diffusion run"}},
      {"verify-limit", {cmd_verify_limit, "kinetic vs drift-diffusion study over eps_list"}},
      {"verify-homog", {cmd_verify_homog, "fine vs homogenized study over delta_list"}},
      {"verify-coupling", {cmd_verify_coupling, "channel coupling regime study"}},
  };

  CLI::App app{"surfkin: kinetic and diffusion models of molecules in surface potentials"};
  app.require_subcommand(1, 1);
  std::string config_path, out_dir = "surfkin_out";
  std::size_t jobs = 1;
  std::uint64_t seed = 0;
  bool seed_given = false;
  app.add_option("--config", config_path, "JSON run configuration")->required()->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory (SURFKIN_OUT overrides)");
  app.add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  app.add_option_function<std::uint64_t>(
      "--seed", [&](const std::uint64_t& s) { seed = s, seed_given = true; }, "seed for random initial data");
  for (const auto& [name, entry] : commands) app.add_subcommand(name, entry.second)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }
  const std::string subcommand = app.get_subcommands().front()->get_name();
  if (const char* env = std::getenv("SURFKIN_OUT"); env && *env) out_dir = env;

  const auto started = utc_now();
  const auto t0 = std::chrono::steady_clock::now();
  try {
    Run run{parse_config(config_path), RunOutput(out_dir), jobs, {}};
    if (seed_given) run.config.seed = seed;
    omp_set_num_threads(static_cast<int>(jobs));
    commands.at(subcommand).first(run);

    RunManifest manifest;
    manifest.config_hash = sha256_hex(run.config.canonical);
    manifest.version = SURFKIN_VERSION;
    manifest.subcommand = subcommand;
    manifest.seed = run.config.seed;
    manifest.jobs = jobs;
    manifest.started_utc = started;
    manifest.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    manifest.checks = run.checks;
    run.out.write_manifest(manifest);
    for (const auto& c : run.checks)
      if (!c.passed) std::cerr << "check failed: " << c.name << " = " << c.value << " (limit " << c.limit << ")\n";
    return manifest.passed() ? 0 : 3;
  } catch (const std::exception& e) {
    std::cerr << "surfkin " << subcommand << ": " << e.what() << '\n';
    return 1;
  }
}
