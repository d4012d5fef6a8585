#pragma once

#include <limits>
#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace surfkin {

inline constexpr double unbounded = std::numeric_limits<double>::infinity();

/// Monotone piecewise-cubic interpolant over strictly increasing knots; clamps outside them.
class MonotoneCubic {
 public:
  MonotoneCubic(std::vector<double> x, std::vector<double> y);
  double operator()(double t) const;
  double slope(double t) const;
  double front() const { return lo_; }
  double back() const { return hi_; }

 private:
  struct Impl;
  std::shared_ptr<const Impl> impl_;
  double lo_, hi_;
};

struct Tent {
  double slope;
  double well;
};

struct Morse {
  double stiffness;
  double well;
};

struct SquareWell {
  double width;
};

struct TabulatedProfile {
  std::vector<double> coordinate;
  std::vector<double> energy;
};

/// Wall potential W(z) on (0, L]; W = plateau beyond the layer width.
/// A hard reflecting wall sits at z = 0 for orbits that would otherwise reach it.
class NormalPotential {
 public:
  using Shape = std::variant<Tent, Morse, SquareWell, TabulatedProfile>;

  /// plateau may be `unbounded`, in which case every orbit is trapped.
  NormalPotential(Shape shape, double plateau, double layer_width);

  double operator()(double z) const;
  /// dW/dz; one-sided (from the left) at breakpoints.
  double slope(double z) const;
  double plateau() const { return plateau_; }
  double layer_width() const { return width_; }
  double well_position() const { return well_; }
  /// Limit of W as z -> 0+.
  double wall_value() const { return wall_; }
  bool has_free_states() const { return plateau_ < unbounded; }
  /// Separatrix |e| = sqrt(2 W_m); infinite when no free states exist.
  double separatrix() const;
  /// Points in (0, z_max) where W is not smooth; used as quadrature breakpoints.
  std::vector<double> breakpoints() const;
  /// Largest z an orbit can reach (L when free states exist).
  double outer_limit(double energy_speed) const;
  const Shape& shape() const { return shape_; }
  std::string name() const;

 private:
  double eval(double z) const;

  Shape shape_;
  double plateau_;
  double width_;
  double well_ = 0.0;
  double wall_ = 0.0;
  double morse_depth_ = 0.0;
  std::shared_ptr<const MonotoneCubic> table_;
};

double eval_w(const NormalPotential& pot, double z);

struct FlatU {};
struct ParabolicU {};
struct CosineU {};
struct TabulatedU {
  std::vector<double> y;
  std::vector<double> energy;
};

/// Periodic tangential potential U(x) = Uhat(wrap(x/delta)), Uhat of period 2.
class TangentialPotential {
 public:
  using Shape = std::variant<FlatU, ParabolicU, CosineU, TabulatedU>;

  TangentialPotential(Shape shape, double amplitude, double half_period);
  static TangentialPotential flat(double half_period = 1.0) {
    return TangentialPotential(FlatU{}, 0.0, half_period);
  }

  double operator()(double x) const;
  double slope(double x) const;
  /// Reduced profile on [-1, 1).
  double reduced(double y) const;
  double reduced_slope(double y) const;
  /// Maps x to y = x/delta folded into [-1, 1).
  double fold(double x) const;

  double amplitude() const { return amplitude_; }
  double half_period() const { return delta_; }
  bool is_flat() const { return std::holds_alternative<FlatU>(shape_) || amplitude_ == 0.0; }
  /// Location of the minimum of the reduced profile.
  double well_position() const { return well_; }
  std::vector<double> breakpoints() const;
  const Shape& shape() const { return shape_; }
  std::string name() const;

 private:
  Shape shape_;
  double amplitude_;
  double delta_;
  double well_ = 0.0;
  std::shared_ptr<const MonotoneCubic> table_;
};

double eval_u(const TangentialPotential& pot, double x);
double eval_u_prime(const TangentialPotential& pot, double x);

/// Reads a two-column CSV (coordinate, energy); '#' lines and a non-numeric header are skipped.
TabulatedProfile read_profile_csv(const std::string& path);

}  // namespace surfkin
