#include "surfkin/orbits.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>

#include <boost/math/tools/toms748_solve.hpp>

#include "surfkin/errors.hpp"

namespace surfkin {

namespace {

constexpr double tiny_z = std::numeric_limits<double>::min();

std::vector<double> cuts_between(double a, double b, const std::vector<double>& interior) {
  std::vector<double> cuts{a};
  for (double c : interior)
    if (c > a && c < b) cuts.push_back(c);
  cuts.push_back(b);
  return cuts;
}

/// Integral of dz / sqrt(e^2 - 2 V(z)) over the allowed part of [a, b], where V is monotone
/// (or constant) on the open interval. The integration variable is the potential itself,
/// w = lo + H sin^2(t/2), so the orbit turning point sits exactly at t = pi whatever the
/// rounding of its z location, and a vanishing slope at the bottom is absorbed by sin(t/2).
template <class Pot, class Slope>
double inverse_speed_piece(const Pot& pot, const Slope& slope, double e, double a, double b) {
  const double a_in = std::nextafter(a, b), b_in = std::nextafter(b, a);
  const double va = pot(a_in), vb = pot(b_in);
  const double level = 0.5 * e * e;
  const double lo = std::min(va, vb), top = std::max(va, vb);
  if (lo >= level) return 0.0;
  if (top - lo <= 1e-14 * top)
    return (b - a) / std::sqrt(e * e - 2.0 * (0.5 * (lo + top)));

  // A cut placed at a turning point is only known to a few ulps in z.
  const double z_noise = 8.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(a), std::abs(b)) *
                         std::max(std::abs(slope(a_in)), std::abs(slope(b_in)));
  const bool reaches = top >= level * (1.0 - 1e-12) - z_noise;
  const double hi = reaches ? level : top;
  const double span = hi - lo;
  const double r_top = reaches ? 0.0 : e * e - 2.0 * hi;
  const bool rising = vb > va;
  auto z_of = [&](double w) {
    if (w <= lo) return rising ? a_in : b_in;
    if (w >= top) return rising ? b_in : a_in;
    auto f = [&](double z) { return pot(z) - w; };
    std::uintmax_t iters = 200;
    const auto r = boost::math::tools::toms748_solve(f, a_in, b_in, va - w, vb - w,
                                                     boost::math::tools::eps_tolerance<double>(52), iters);
    return 0.5 * (r.first + r.second);
  };
  auto g = [&](double t) {
    const double s = std::sin(0.5 * t), c = std::cos(0.5 * t);
    const double d = std::abs(slope(z_of(lo + span * s * s)));
    if (d == 0.0) return 0.0;
    return span * s * c / (d * std::sqrt(r_top + 2.0 * span * c * c));
  };
  // Tiny orbits span few representable z values; relax the target to what z can resolve.
  const double resolvable = 64.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(a), std::abs(b)) / (b - a);
  return integrate_adaptive(g, 0.0, std::numbers::pi, std::max(1e-10, resolvable));
}

template <class Pot, class Slope>
double inverse_speed_integral(const Pot& pot, const Slope& slope, double e, const std::vector<double>& cuts) {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    total += inverse_speed_piece(pot, slope, e, cuts[i], cuts[i + 1]);
  return total;
}

double inverse_speed_integral_y(const TangentialPotential& pot, double e, double a, double b) {
  auto v = [&](double y) { return pot.reduced(y); };
  auto dv = [&](double y) { return pot.reduced_slope(y); };
  return inverse_speed_integral(v, dv, e, cuts_between(a, b, pot.breakpoints()));
}

std::vector<double> uniform_edges(double lo, double hi, std::size_t cells) {
  std::vector<double> out(cells + 1);
  for (std::size_t k = 0; k <= cells; ++k)
    out[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(cells);
  out.back() = hi;
  return out;
}

/// Runs body(k) for every node, collecting the first failure with its node index.
template <class Body>
void for_each_node(std::size_t n, const std::vector<double>& nodes, const char* label, Body body) {
  std::vector<std::string> failures(n);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t k = 0; k < n; ++k) {
    try {
      body(k);
    } catch (const std::exception& ex) {
      failures[k] = ex.what();
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (!failures[k].empty()) {
      std::ostringstream msg;
      msg << label << " node " << k << " (e = " << nodes[k] << "): " << failures[k];
      throw NumericalError(msg.str());
    }
  }
}

}  // namespace

double equivalent_velocity_z(const NormalPotential& pot, double z, double v_z) {
  if (pot.has_free_states() && z > pot.layer_width())
    throw DomainError("equivalent velocity requires z in (0, L]");
  return std::copysign(std::sqrt(v_z * v_z + 2.0 * pot(z)), v_z);
}

double v_z_of(const NormalPotential& pot, double z, double e_z) {
  const double scale = std::max(e_z * e_z, 1.0);
  const bool free = pot.has_free_states() && 0.5 * e_z * e_z >= pot.plateau();
  if (free && z > pot.layer_width()) throw DomainError("z lies beyond the layer for a free orbit");
  const double r = e_z * e_z - 2.0 * pot(z);
  if (r < -1e-12 * scale) throw DomainError("z lies outside the orbit interval");
  return std::copysign(std::sqrt(std::max(r, 0.0)), e_z);
}

TurningPoints turning_points_z(const NormalPotential& pot, double e_z) {
  const double zm = pot.well_position();
  if (e_z == 0.0) return {zm, zm};
  const double level = 0.5 * e_z * e_z;
  auto f = [&](double z) { return pot(std::max(z, tiny_z)) - level; };

  double lower = 0.0;
  if (pot.wall_value() > level)
    lower = bracket_root(f, 0.0, zm, pot.wall_value() - level, -level, "inner turning point").inside;

  if (pot.has_free_states() && level >= pot.plateau()) return {lower, pot.layer_width()};
  double hi = pot.has_free_states() ? pot.layer_width() : zm + 1.0;
  double f_hi = f(hi);
  for (int k = 0; k < 200 && f_hi <= 0.0; ++k) {
    hi = zm + 2.0 * (hi - zm);
    f_hi = f(hi);
  }
  if (std::isinf(f_hi)) {
    // Unbounded square well: the wall sits at the well edge.
    double lo = zm;
    for (int k = 0; k < 200 && hi - lo > 1e-15 * hi; ++k) {
      const double mid = 0.5 * (lo + hi);
      (f(mid) <= 0.0 ? lo : hi) = mid;
    }
    return {lower, lo};
  }
  const double upper = bracket_root(f, zm, hi, -level, f_hi, "outer turning point").inside;
  return {lower, upper};
}

CrossingTime tau_z_and_l(const NormalPotential& pot, double e_z) {
  if (e_z == 0.0) throw DomainError("crossing time is undefined at e_z = 0");
  const auto tp = turning_points_z(pot, e_z);
  auto w = [&](double z) { return pot(z); };
  auto dw = [&](double z) { return pot.slope(z); };
  const double tau = inverse_speed_integral(w, dw, e_z, cuts_between(tp.lower, tp.upper, pot.breakpoints()));
  return {tau, std::abs(e_z) * tau};
}

TurningPoints turning_points_y(const TangentialPotential& pot, double e_x) {
  const double level = 0.5 * e_x * e_x;
  if (level > pot.amplitude()) return {-1.0, 1.0};
  const double ym = pot.well_position();
  if (e_x == 0.0) return {ym, ym};
  auto f = [&](double y) { return pot.reduced(y) - level; };
  const double top = pot.amplitude() - level;
  const double upper = bracket_root(f, ym, 1.0, -level, top, "upper tangential turning point").inside;
  const double lower = bracket_root(f, -1.0, ym, top, -level, "lower tangential turning point").inside;
  return {lower, upper};
}

FlightResult tau_fl_and_w(const TangentialPotential& pot, double e_x) {
  if (0.5 * e_x * e_x <= pot.amplitude()) return {FlightTime{0.0, true}, 0.0};
  const double delta = pot.half_period();
  const double tau = delta * inverse_speed_integral_y(pot, e_x, -1.0, 1.0);
  return {FlightTime{tau, false}, std::copysign(2.0 * delta / tau, e_x)};
}

double sigma_bar_x(const TangentialPotential& pot, double e_x) {
  if (e_x == 0.0) throw DomainError("sigma_bar_x is undefined at e_x = 0");
  const auto tp = turning_points_y(pot, e_x);
  return 0.5 * inverse_speed_integral_y(pot, e_x, tp.lower, tp.upper);
}

EnergyGrid::EnergyGrid(std::vector<double> edges) : edges_(std::move(edges)) {
  for (std::size_t i = 0; i + 1 < edges_.size(); ++i) {
    if (!(edges_[i + 1] > edges_[i])) throw ConfigError("energy grid edges must increase");
    nodes_.push_back(0.5 * (edges_[i] + edges_[i + 1]));
    widths_.push_back(edges_[i + 1] - edges_[i]);
  }
}

EnergyGrid make_energy_grid(std::size_t n, double separatrix, double e_max, double guard_band) {
  if (n < 2 || n % 2 != 0) throw ConfigError("energy grid size must be even and at least 2");
  if (!(e_max > 0.0) || !std::isfinite(e_max)) throw ConfigError("energy cutoff must be positive");
  const std::size_t half = n / 2;
  std::vector<double> pos;
  if (!(separatrix > 0.0) || separatrix >= e_max || half == 1) {
    pos = uniform_edges(0.0, e_max, half);
  } else {
    const auto share = static_cast<long>(std::lround(static_cast<double>(half) * separatrix / e_max));
    const auto inner = static_cast<std::size_t>(std::clamp<long>(share, 1, static_cast<long>(half) - 1));
    pos = uniform_edges(0.0, separatrix, inner);
    const auto outer = uniform_edges(separatrix, e_max, half - inner);
    pos.insert(pos.end(), outer.begin() + 1, outer.end());
  }
  std::vector<double> edges;
  for (std::size_t k = pos.size(); k-- > 1;) edges.push_back(-pos[k]);
  edges.insert(edges.end(), pos.begin(), pos.end());
  EnergyGrid grid(std::move(edges));
  if (separatrix > 0.0 && std::isfinite(separatrix)) {
    for (double e : grid.nodes()) {
      if (std::abs(std::abs(e) - separatrix) < guard_band * separatrix) {
        std::ostringstream msg;
        msg << "energy node " << e << " lies inside the separatrix guard band around " << separatrix;
        throw ConfigError(msg.str());
      }
    }
  }
  return grid;
}

OrbitTable::OrbitTable(NormalPotential w, TangentialPotential u, const OrbitGridSpec& spec)
    : w_(std::move(w)), u_(std::move(u)), spec_(spec) {
  ez_ = make_energy_grid(spec.normal_nodes, w_.separatrix(), spec.normal_e_max, spec.guard_band);
  ex_ = make_energy_grid(spec.tangential_nodes, std::sqrt(2.0 * u_.amplitude()), spec.tangential_e_max,
                         spec.guard_band);
  const auto reference = gauss_legendre(spec.cell_points);

  znodes_.resize(ez_.size());
  zcells_.resize(ez_.size());
  for_each_node(ez_.size(), ez_.nodes(), "normal orbit", [&](std::size_t k) {
    const double e = ez_.node(k);
    const auto tp = turning_points_z(w_, e);
    const auto ct = tau_z_and_l(w_, e);
    const bool trapped = !w_.has_free_states() || 0.5 * e * e < w_.plateau();
    znodes_[k] = {e, tp.lower, tp.upper, ct.tau, ct.ell, trapped};
    const auto rule = cosine_mapped_rule(ez_.lower(k), ez_.upper(k), reference);
    CellQuadrature cell;
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      cell.e.push_back(rule.nodes[q]);
      cell.weight.push_back(rule.weights[q]);
      cell.ell.push_back(tau_z_and_l(w_, rule.nodes[q]).ell);
    }
    zcells_[k] = std::move(cell);
  });

  xnodes_.resize(ex_.size());
  for_each_node(ex_.size(), ex_.nodes(), "tangential orbit", [&](std::size_t m) {
    const double e = ex_.node(m);
    const auto tp = turning_points_y(u_, e);
    const auto fl = tau_fl_and_w(u_, e);
    xnodes_[m] = {e, tp.lower, tp.upper, fl.tau_fl, fl.w_x, sigma_bar_x(u_, e), fl.tau_fl.infinite};
  });
}

OrbitTable build_orbit_table(const NormalPotential& w, const TangentialPotential& u,
                             const OrbitGridSpec& spec) {
  return OrbitTable(w, u, spec);
}

}  // namespace surfkin
