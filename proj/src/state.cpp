#include "surfkin/state.hpp"

#include <cmath>

#include "surfkin/errors.hpp"

namespace surfkin {

XGrid::XGrid(std::size_t n, double lo, double hi) : n_(n), lo_(lo), hi_(hi) {
  if (n == 0) throw ConfigError("x grid needs at least one cell");
  if (!(hi > lo) || !std::isfinite(hi - lo)) throw ConfigError("x grid bounds must satisfy lo < hi");
  dx_ = (hi - lo) / static_cast<double>(n);
}

VelocityGrid::VelocityGrid(std::size_t n, double v_max, double temperature)
    : v_max_(v_max), t_(temperature) {
  if (n < 2 || n % 2 != 0) throw ConfigError("velocity grid size must be even and at least 2");
  if (!(v_max > 0.0) || !std::isfinite(v_max)) throw ConfigError("v_max must be positive");
  if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
  dv_ = 2.0 * v_max / static_cast<double>(n);
  nodes_.resize(n);
  maxwellian_.resize(n);
  // Mirror-symmetric by construction so odd moments of even data vanish exactly.
  for (std::size_t j = 0; j < n / 2; ++j) {
    const double v = v_max - (static_cast<double>(j) + 0.5) * dv_;
    nodes_[n - 1 - j] = v;
    nodes_[j] = -v;
  }
  face_maxwellian_.assign(n + 1, 0.0);
  for (std::size_t f = 1; f < n; ++f) {
    const double v = nodes_[f] - 0.5 * dv_;
    face_maxwellian_[f] = std::exp(-v * v / (2.0 * t_));
  }
  maxwellian_ = cell_maxwellian(*this, t_);
  for (std::size_t j = 0; j < n; ++j) gamma_ += maxwellian_[j] * dv_;
}

std::vector<double> cell_maxwellian(const VelocityGrid& grid, double temperature) {
  if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
  const std::size_t n = grid.size();
  const double dv = grid.dv();
  auto face = [&](std::size_t f) {
    if (f == 0 || f == n) return 0.0;
    const double v = grid.node(f) - 0.5 * dv;
    return std::exp(-v * v / (2.0 * temperature));
  };
  std::vector<double> out(n);
  for (std::size_t j = 0; j < n; ++j) out[j] = temperature * (face(j) - face(j + 1)) / (grid.node(j) * dv);
  return out;
}

SurfaceDistribution::SurfaceDistribution(XGrid x, VelocityGrid v, EnergyGrid e)
    : x_(std::move(x)), v_(std::move(v)), e_(std::move(e)), g_(layout().total(), 0.0) {}

double SurfaceDistribution::mass() const {
  const auto lay = layout();
  double total = 0.0;
  for (std::size_t ix = 0; ix < lay.nx; ++ix)
    for (std::size_t k = 0; k < lay.blocks; ++k) {
      double row = 0.0;
      for (std::size_t j = 0; j < lay.inner; ++j) row += g_[lay(ix, k, j)];
      total += row * e_.width(k);
    }
  return total * x_.dx() * v_.dv();
}

MesoDistribution::MesoDistribution(XGrid x, EnergyGrid e_x, EnergyGrid e_z)
    : x_(std::move(x)), ex_(std::move(e_x)), ez_(std::move(e_z)), h_(layout().total(), 0.0) {}

Moments moments(const SurfaceDistribution& g) {
  const auto lay = g.layout();
  Moments out{std::vector<double>(lay.nx, 0.0), std::vector<double>(lay.nx, 0.0)};
  const auto& v = g.v().nodes();
  const double dv = g.v().dv();
#pragma omp parallel for schedule(static)
  for (std::size_t ix = 0; ix < lay.nx; ++ix) {
    double n = 0.0, phi = 0.0;
    for (std::size_t k = 0; k < lay.blocks; ++k) {
      double rn = 0.0, rphi = 0.0;
      const double* line = g.slice(ix).data() + k * lay.inner;
      for (std::size_t j = 0; j < lay.inner; ++j) {
        const double val = line[j];
        rn += val;
        rphi += v[j] * val;
      }
      n += rn * g.e().width(k);
      phi += rphi * g.e().width(k);
    }
    out.density[ix] = n * dv;
    out.flux[ix] = phi * dv;
  }
  return out;
}

}  // namespace surfkin
