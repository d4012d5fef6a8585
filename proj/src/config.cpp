#include "surfkin/config.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "surfkin/errors.hpp"

namespace surfkin {
namespace {

using json = nlohmann::json;

/// Read cursor over one JSON object. Every key it is asked about is marked; finish() rejects the rest.
class Section {
 public:
  Section(const json* node, std::string path) : node_(node), path_(std::move(path)) {
    if (node_ && !node_->is_object()) throw ConfigError(path_ + ": expected an object");
  }

  bool has(const std::string& key) {
    used_.insert(key);
    return node_ && node_->contains(key);
  }

  [[noreturn]] void fail(const std::string& key, const std::string& reason) const {
    throw ConfigError(where(key) + ": " + reason);
  }

  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  Section child(const std::string& key) {
    if (!has(key)) return Section(nullptr, where(key));
    return Section(&node_->at(key), where(key));
  }

  double real(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const json& v = node_->at(key);
    if (!v.is_number()) fail(key, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(key, "must be finite");
    return x;
  }

  double positive(const std::string& key, double fallback) {
    const double x = real(key, fallback);
    if (!(x > 0.0)) fail(key, "must be positive");
    return x;
  }

  /// Positive number or the string "inf".
  double positive_or_inf(const std::string& key, double fallback) {
    if (has(key) && node_->at(key).is_string()) {
      if (node_->at(key).get<std::string>() != "inf") fail(key, "expected a number or \"inf\"");
      return unbounded;
    }
    return positive(key, fallback);
  }

  std::size_t count(const std::string& key, std::size_t fallback, std::size_t minimum = 1) {
    if (!has(key)) return fallback;
    const json& v = node_->at(key);
    if (!v.is_number_unsigned()) fail(key, "expected a non-negative integer");
    const auto n = v.get<std::size_t>();
    if (n < minimum) fail(key, "must be at least " + std::to_string(minimum));
    return n;
  }

  std::uint64_t u64(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    const json& v = node_->at(key);
    if (!v.is_number_unsigned()) fail(key, "expected a non-negative integer");
    return v.get<std::uint64_t>();
  }

  bool flag(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = node_->at(key);
    if (!v.is_boolean()) fail(key, "expected true or false");
    return v.get<bool>();
  }

  std::string word(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const json& v = node_->at(key);
    if (!v.is_string()) fail(key, "expected a string");
    return v.get<std::string>();
  }

  std::vector<double> reals(const std::string& key, std::vector<double> fallback) {
    if (!has(key)) return fallback;
    const json& v = node_->at(key);
    if (!v.is_array() || v.empty()) fail(key, "expected a non-empty array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) fail(key, "expected a non-empty array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  /// Maps a string onto one of `choices`.
  template <class E>
  E choice(const std::string& key, E fallback, std::initializer_list<std::pair<const char*, E>> choices) {
    if (!has(key)) return fallback;
    const std::string name = word(key, "");
    std::string listed;
    for (const auto& [label, value] : choices) {
      if (name == label) return value;
      listed += listed.empty() ? label : std::string(", ") + label;
    }
    fail(key, "unknown value \"" + name + "\" (expected one of " + listed + ")");
  }

  void finish() const {
    if (!node_) return;
    for (const auto& [key, value] : node_->items()) {
      if (!used_.count(key)) fail(key, "unknown key");
    }
  }

 private:
  const json* node_;
  std::string path_;
  std::set<std::string> used_;
};

std::string resolve(const std::string& base_dir, const std::string& file) {
  const std::filesystem::path p(file);
  return p.is_absolute() ? file : (std::filesystem::path(base_dir) / p).string();
}

/// Table given inline as two arrays or as a CSV file.
TabulatedProfile table(Section& s, const char* coordinate, const char* energy, const std::string& base_dir) {
  const bool inline_table = s.has(coordinate) || s.has(energy);
  if (s.has("file")) {
    if (inline_table) s.fail("file", "give either a file or inline arrays, not both");
    try {
      return read_profile_csv(resolve(base_dir, s.word("file", "")));
    } catch (const ConfigError& e) {
      throw ConfigError(s.where("file") + ": " + e.what());
    }
  }
  if (!inline_table) s.fail("file", "tabulated variant needs a file or inline arrays");
  TabulatedProfile t{s.reals(coordinate, {}), s.reals(energy, {})};
  if (t.coordinate.size() != t.energy.size()) s.fail(energy, "length differs from " + std::string(coordinate));
  return t;
}

template <class Build>
auto construct(const Section& s, Build&& build) {
  try {
    return build();
  } catch (const ConfigError& e) {
    throw ConfigError(s.where("variant") + ": " + e.what());
  } catch (const DomainError& e) {
    throw ConfigError(s.where("variant") + ": " + e.what());
  }
}

NormalPotential parse_normal(Section s, const std::string& base_dir) {
  const double plateau = s.positive_or_inf("W_m", 1.0);
  const double width = s.positive("L", 1.0);
  const std::string variant = s.word("variant", "tent");
  NormalPotential::Shape shape;
  if (variant == "tent") {
    shape = Tent{s.positive("a", 2.0), s.positive("z_m", 0.5)};
  } else if (variant == "morse") {
    shape = Morse{s.positive("alpha", 4.0), s.positive("z_m", 0.5)};
  } else if (variant == "square_well") {
    shape = SquareWell{s.positive("z_w", 0.5)};
  } else if (variant == "tabulated") {
    shape = table(s, "z", "W", base_dir);
  } else {
    s.fail("variant", "unknown value \"" + variant + "\" (expected tent, morse, square_well or tabulated)");
  }
  s.finish();
  return construct(s, [&] { return NormalPotential(std::move(shape), plateau, width); });
}

TangentialPotential parse_tangential(Section s, const TangentialPotential& fallback, const std::string& base_dir) {
  const double delta = s.positive("delta", fallback.half_period());
  const std::string variant = s.word("variant", fallback.name());
  TangentialPotential::Shape shape;
  const bool amplitude_given = s.has("U_m");
  double amplitude = s.real("U_m", fallback.is_flat() ? 1.0 : fallback.amplitude());
  if (amplitude < 0.0) s.fail("U_m", "must be non-negative");
  if (variant == "zero") {
    shape = FlatU{};
    amplitude = 0.0;
  } else if (variant == "parabolic") {
    shape = ParabolicU{};
  } else if (variant == "cosine") {
    shape = CosineU{};
  } else if (variant == "tabulated") {
    auto t = table(s, "y", "U", base_dir);
    if (!amplitude_given && !t.energy.empty()) amplitude = t.energy.back();
    shape = TabulatedU{std::move(t.coordinate), std::move(t.energy)};
  } else {
    s.fail("variant", "unknown value \"" + variant + "\" (expected zero, parabolic, cosine or tabulated)");
  }
  s.finish();
  return construct(s, [&] { return TangentialPotential(std::move(shape), amplitude, delta); });
}

void require_decreasing(Section& s, const std::string& key, const std::vector<double>& values, double upper) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] > 0.0) || values[i] > upper) {
      s.fail(key, "entries must lie in (0, " + std::to_string(upper) + "]");
    }
    if (i > 0 && !(values[i] < values[i - 1])) s.fail(key, "must be strictly decreasing");
  }
}

const std::initializer_list<std::pair<const char*, CouplingRegime>> regimes{
    {"strong", CouplingRegime::strong}, {"moderate", CouplingRegime::moderate}, {"weak", CouplingRegime::weak}};

void parse_study(Section s, Config& c, const std::string& base_dir) {
  auto& st = c.study;
  st.eps_list = s.reals("eps_list", st.eps_list);
  require_decreasing(s, "eps_list", st.eps_list, 0.25);
  st.delta_list = s.reals("delta_list", st.delta_list);
  require_decreasing(s, "delta_list", st.delta_list, 1.0);

  {
    Section l = s.child("limit");
    auto& d = st.limit;
    d.nx = l.count("nx", d.nx, 4);
    d.nv = l.count("nv", d.nv, 4);
    d.x_lo = l.real("x_min", d.x_lo);
    d.x_hi = l.real("x_max", d.x_hi);
    if (!(d.x_hi > d.x_lo)) l.fail("x_max", "must exceed x_min");
    d.tau_tilde = l.positive("tau_tilde", d.tau_tilde);
    d.t_tilde = l.positive("t_tilde", d.t_tilde);
    d.amplitude = l.real("amplitude", d.amplitude);
    if (!(std::abs(d.amplitude) < 1.0)) l.fail("amplitude", "must lie in (-1, 1)");
    d.initial = l.choice("initial", d.initial,
                         {{"well_prepared", InitialData::well_prepared}, {"ill_prepared", InitialData::ill_prepared}});
    d.tangential = parse_tangential(l.child("tangential"), d.tangential, base_dir);
    l.finish();
  }
  {
    Section h = s.child("homogenization");
    auto& d = st.homogenization;
    const std::string variant = h.word("variant", "parabolic");
    if (variant == "parabolic") d.shape = ParabolicU{};
    else if (variant == "cosine") d.shape = CosineU{};
    else if (variant == "zero") d.shape = FlatU{};
    else h.fail("variant", "unknown value \"" + variant + "\" (expected parabolic, cosine or zero)");
    d.amplitude = h.real("U_m", d.amplitude);
    if (d.amplitude < 0.0) h.fail("U_m", "must be non-negative");
    d.nx = h.count("nx", d.nx, 16);
    d.nv = h.count("nv", d.nv, 4);
    d.length = h.positive("length", d.length);
    d.tau_ms = h.positive_or_inf("tau_ms", d.tau_ms);
    d.t_end = h.positive("t_end", d.t_end);
    d.density_amplitude = h.real("amplitude", d.density_amplitude);
    if (!(std::abs(d.density_amplitude) < 1.0)) h.fail("amplitude", "must lie in (-1, 1)");
    d.bound_fraction_tolerance = h.positive("bound_tolerance", d.bound_fraction_tolerance);
    h.finish();
  }
  {
    Section k = s.child("coupling");
    auto& d = st.coupling;
    st.regime = k.choice("regime", st.regime, regimes);
    st.coupling_eps = k.reals("eps_list", st.coupling_eps);
    require_decreasing(k, "eps_list", st.coupling_eps, 0.25);
    d.nx = k.count("nx", d.nx, 4);
    d.nv = k.count("nv", d.nv, 4);
    d.x_lo = k.real("x_min", d.x_lo);
    d.x_hi = k.real("x_max", d.x_hi);
    if (!(d.x_hi > d.x_lo)) k.fail("x_max", "must exceed x_min");
    d.tau_tilde = k.positive("tau_tilde", d.tau_tilde);
    d.amplitude = k.real("amplitude", d.amplitude);
    if (!(std::abs(d.amplitude) < 1.0)) k.fail("amplitude", "must lie in (-1, 1)");
    d.strong_horizon = k.positive("strong_horizon", d.strong_horizon);
    d.moderate_horizon = k.positive("moderate_horizon", d.moderate_horizon);
    d.weak_horizon = k.positive("weak_horizon", d.weak_horizon);
    d.decay_target = k.positive("decay_target", d.decay_target);
    d.terminal_slack = k.positive("terminal_slack", d.terminal_slack);
    d.weak_tolerance = k.positive("weak_tolerance", d.weak_tolerance);
    d.closed_form_tolerance = k.positive("closed_form_tolerance", d.closed_form_tolerance);
    d.tangential = parse_tangential(k.child("tangential"), d.tangential, base_dir);
    k.finish();
  }
  s.finish();
}

}  // namespace

Config parse_config_text(const std::string& text, const std::string& base_dir) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: parse error: ") + e.what());
  }
  Config c;
  c.canonical = root.dump();
  Section top(&root, "");

  {
    Section pot = top.child("potential");
    if (!pot.has("normal")) pot.fail("normal", "required");
    c.normal = parse_normal(pot.child("normal"), base_dir);
    c.tangential = parse_tangential(pot.child("tangential"), c.tangential, base_dir);
    pot.finish();
  }
  {
    Section p = top.child("physics");
    c.temperature = p.positive("T", c.temperature);
    c.tau_ms = p.positive_or_inf("tau_ms", c.tau_ms);
    p.finish();
  }
  {
    Section g = top.child("grid");
    auto& d = c.grid;
    d.nx = g.count("nx", d.nx, 4);
    d.nv = g.count("nv", d.nv, 4);
    d.nez = g.count("nez", d.nez, 2);
    if (d.nez % 2) g.fail("nez", "must be even");
    d.nex = g.count("nex", d.nex, 2);
    if (d.nex % 2) g.fail("nex", "must be even");
    d.x_min = g.real("x_min", d.x_min);
    d.x_max = g.real("x_max", d.x_max);
    if (!(d.x_max > d.x_min)) g.fail("x_max", "must exceed x_min");
    d.v_max_factor = g.positive("v_max_factor", d.v_max_factor);
    d.ez_max = g.positive("ez_max", d.ez_max);
    d.ex_max = g.positive("ex_max", d.ex_max);
    d.guard_band = g.positive("guard_band", d.guard_band);
    if (d.guard_band >= 0.5) g.fail("guard_band", "must be below 0.5");
    d.cell_points = g.count("cell_points", d.cell_points, 2);
    d.kernel_points = g.count("kernel_points", d.kernel_points, 2);
    d.diffusion_nx = g.count("diffusion_nx", d.diffusion_nx, 4);
    g.finish();
  }
  {
    Section s = top.child("solver");
    auto& d = c.solver;
    d.cfl = s.positive("cfl", d.cfl);
    if (d.cfl > 1.0) s.fail("cfl", "must not exceed 1");
    d.transport.scheme = s.choice("transport", d.transport.scheme,
                                  {{"finite_volume", TransportScheme::finite_volume},
                                   {"semi_lagrangian", TransportScheme::semi_lagrangian}});
    d.transport.limiter =
        s.choice("limiter", d.transport.limiter, {{"van_leer", Limiter::van_leer}, {"upwind", Limiter::upwind}});
    d.transport.boundary =
        s.choice("x_boundary", d.transport.boundary, {{"periodic", XBoundary::periodic}, {"open", XBoundary::open}});
    d.diffusion.time = s.choice("time_scheme", d.diffusion.time,
                                {{"implicit_euler", TimeScheme::implicit_euler},
                                 {"explicit_euler", TimeScheme::explicit_euler},
                                 {"crank_nicolson", TimeScheme::crank_nicolson}});
    d.diffusion.drift =
        s.choice("drift", d.diffusion.drift, {{"centered", DriftScheme::centered}, {"upwind", DriftScheme::upwind}});
    d.diffusion_dt = s.positive("diffusion_dt", d.diffusion_dt);
    d.diffusion.boundary =
        d.transport.boundary == XBoundary::periodic ? DiffusionBoundary::periodic : DiffusionBoundary::no_flux;
    s.finish();
  }
  {
    Section r = top.child("run");
    auto& d = c.run;
    d.t_end = r.positive("t_end", d.t_end);
    d.snapshots = r.count("snapshots", d.snapshots, 1);
    d.initial = r.choice("initial", d.initial,
                         {{"uniform", InitialProfile::uniform},
                          {"sine", InitialProfile::sine},
                          {"boltzmann", InitialProfile::boltzmann},
                          {"random", InitialProfile::random}});
    d.amplitude = r.real("amplitude", d.amplitude);
    if (!(std::abs(d.amplitude) < 1.0)) r.fail("amplitude", "must lie in (-1, 1)");
    d.dump = r.flag("dump", d.dump);
    r.finish();
  }
  {
    Section b = top.child("reservoir");
    auto& d = c.reservoir;
    d.kind = b.choice("kind", d.kind,
                      {{"vacuum", BulkReservoir::Kind::vacuum},
                       {"constant", BulkReservoir::Kind::constant},
                       {"ramp", BulkReservoir::Kind::ramp}});
    d.density = b.real("density", d.density);
    if (d.density < 0.0) b.fail("density", "must be non-negative");
    d.final_density = b.real("final_density", d.final_density);
    if (d.final_density < 0.0) b.fail("final_density", "must be non-negative");
    d.ramp_time = b.positive("ramp_time", d.ramp_time);
    d.temperature = b.positive("T", c.temperature);
    b.finish();
  }
  {
    Section h = top.child("channel");
    c.channel.regime = h.choice("regime", c.channel.regime, regimes);
    c.channel.eps = h.positive("eps", c.channel.eps);
    h.finish();
  }
  parse_study(top.child("study"), c, base_dir);
  c.seed = top.u64("seed", c.seed);
  top.finish();

  auto& st = c.study;
  st.limit.physics = st.homogenization.physics = st.coupling.physics = study_physics(c);
  return c;
}

Config parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  const auto dir = std::filesystem::path(path).parent_path();
  return parse_config_text(text.str(), dir.empty() ? "." : dir.string());
}

OrbitGridSpec orbit_spec(const Config& c) {
  OrbitGridSpec s;
  s.normal_nodes = c.grid.nez;
  s.tangential_nodes = c.grid.nex;
  s.normal_e_max = c.grid.ez_max;
  s.tangential_e_max = c.grid.ex_max;
  s.guard_band = c.grid.guard_band;
  s.cell_points = c.grid.cell_points;
  return s;
}

VelocityGrid velocity_grid(const Config& c) {
  return VelocityGrid(c.grid.nv, c.grid.v_max_factor * std::sqrt(c.temperature), c.temperature);
}

XGrid x_grid(const Config& c) { return XGrid(c.grid.nx, c.grid.x_min, c.grid.x_max); }

KineticOptions kinetic_options(const Config& c) { return {c.solver.transport, c.solver.cfl}; }

StudyPhysics study_physics(const Config& c) {
  StudyPhysics p;
  p.normal = c.normal;
  p.orbit = orbit_spec(c);
  p.temperature = c.temperature;
  p.v_max_factor = c.grid.v_max_factor;
  p.cfl = c.solver.cfl;
  p.transport = c.solver.transport;
  return p;
}

}  // namespace surfkin
