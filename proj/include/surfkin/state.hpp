#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "surfkin/orbits.hpp"

namespace surfkin {

enum class XBoundary { periodic, open };

/// Uniform cell-centred grid on [lo, hi).
class XGrid {
 public:
  XGrid() = default;
  XGrid(std::size_t n, double lo, double hi);
  std::size_t size() const { return n_; }
  double lower() const { return lo_; }
  double upper() const { return hi_; }
  double length() const { return hi_ - lo_; }
  double dx() const { return dx_; }
  double center(std::size_t i) const { return lo_ + (static_cast<double>(i) + 0.5) * dx_; }
  bool operator==(const XGrid&) const = default;

 private:
  std::size_t n_ = 0;
  double lo_ = 0.0, hi_ = 1.0, dx_ = 1.0;
};

/// Uniform symmetric v_x grid on [-v_max, v_max] with the discrete Maxwellian at T.
class VelocityGrid {
 public:
  VelocityGrid() = default;
  VelocityGrid(std::size_t n, double v_max, double temperature);
  std::size_t size() const { return nodes_.size(); }
  double v_max() const { return v_max_; }
  double dv() const { return dv_; }
  double node(std::size_t j) const { return nodes_[j]; }
  const std::vector<double>& nodes() const { return nodes_; }
  /// Cell Maxwellian T (M(v_j - dv/2) - M(v_j + dv/2)) / (v_j dv), M(v) = exp(-v^2 / 2T), with the
  /// two outermost faces taken as 0. It equals exp(-v_j^2 / 2T) to O(dv^2) and makes the discrete
  /// identity (face difference) / dv = -v_j M_j / T exact, which is what keeps exp(-U/T) M a
  /// discrete steady state of the force-balanced transport.
  const std::vector<double>& maxwellian() const { return maxwellian_; }
  /// Face values of M (n + 1 entries, zero at both ends).
  const std::vector<double>& face_maxwellian() const { return face_maxwellian_; }
  /// Discrete counterpart of sqrt(2 pi T): sum of maxwellian * dv.
  double gamma() const { return gamma_; }
  double temperature() const { return t_; }

 private:
  double v_max_ = 0.0, dv_ = 0.0, t_ = 1.0, gamma_ = 0.0;
  std::vector<double> nodes_, maxwellian_, face_maxwellian_;
};

/// Index helper for data stored as [x][block][inner] with the inner index contiguous.
struct Layout {
  std::size_t nx = 0, blocks = 0, inner = 0;
  std::size_t slice() const { return blocks * inner; }
  std::size_t total() const { return nx * blocks * inner; }
  std::size_t operator()(std::size_t ix, std::size_t b, std::size_t i) const {
    return (ix * blocks + b) * inner + i;
  }
};

/// g(x, v_x, e_z): density per unit length per unit (v_x, e_z) area; stored [x][e_z][v_x].
class SurfaceDistribution {
 public:
  SurfaceDistribution() = default;
  SurfaceDistribution(XGrid x, VelocityGrid v, EnergyGrid e);

  const XGrid& x() const { return x_; }
  const VelocityGrid& v() const { return v_; }
  const EnergyGrid& e() const { return e_; }
  Layout layout() const { return {x_.size(), e_.size(), v_.size()}; }

  double& at(std::size_t ix, std::size_t ie, std::size_t iv) { return g_[layout()(ix, ie, iv)]; }
  double at(std::size_t ix, std::size_t ie, std::size_t iv) const { return g_[layout()(ix, ie, iv)]; }
  std::span<double> values() { return g_; }
  std::span<const double> values() const { return g_; }
  std::span<double> slice(std::size_t ix) { return {g_.data() + ix * layout().slice(), layout().slice()}; }
  std::span<const double> slice(std::size_t ix) const {
    return {g_.data() + ix * layout().slice(), layout().slice()};
  }
  /// Sum of g times the cell measure dx dv de.
  double mass() const;

  double time = 0.0;

 private:
  XGrid x_;
  VelocityGrid v_;
  EnergyGrid e_;
  std::vector<double> g_;
};

/// h(x, e_x, e_z) on the mesoscopic grids; stored [x][e_z][e_x].
class MesoDistribution {
 public:
  MesoDistribution() = default;
  MesoDistribution(XGrid x, EnergyGrid e_x, EnergyGrid e_z);

  const XGrid& x() const { return x_; }
  const EnergyGrid& e_x() const { return ex_; }
  const EnergyGrid& e_z() const { return ez_; }
  Layout layout() const { return {x_.size(), ez_.size(), ex_.size()}; }

  double& at(std::size_t ix, std::size_t ie_x, std::size_t ie_z) { return h_[layout()(ix, ie_z, ie_x)]; }
  double at(std::size_t ix, std::size_t ie_x, std::size_t ie_z) const {
    return h_[layout()(ix, ie_z, ie_x)];
  }
  std::span<double> values() { return h_; }
  std::span<const double> values() const { return h_; }
  std::span<double> slice(std::size_t ix) { return {h_.data() + ix * layout().slice(), layout().slice()}; }
  std::span<const double> slice(std::size_t ix) const {
    return {h_.data() + ix * layout().slice(), layout().slice()};
  }

  double time = 0.0;

 private:
  XGrid x_;
  EnergyGrid ex_, ez_;
  std::vector<double> h_;
};

/// Two symmetric layers of a channel; coupling_scale multiplies the exchange term.
struct ChannelState {
  SurfaceDistribution lower;
  SurfaceDistribution upper;
  double coupling_scale = 1.0;
};

/// Balanced cell Maxwellian of `grid` at another temperature (same construction as maxwellian()).
std::vector<double> cell_maxwellian(const VelocityGrid& grid, double temperature);

struct Moments {
  std::vector<double> density;
  std::vector<double> flux;
};

Moments moments(const SurfaceDistribution& g);

}  // namespace surfkin
