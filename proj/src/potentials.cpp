#include "surfkin/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

// The boost 1.74 pchip header calls isnan unqualified.
#include <math.h>
#include <boost/math/interpolators/pchip.hpp>

#include "surfkin/errors.hpp"

namespace surfkin {

namespace {

using Pchip = boost::math::interpolators::pchip<std::vector<double>>;

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

/// Index of the minimum sample; checks the profile falls to it and rises after it.
std::size_t check_single_well(const std::vector<double>& x, const std::vector<double>& e,
                              const std::string& label) {
  require(x.size() == e.size(), label + ": coordinate/energy length mismatch");
  require(x.size() >= 4, label + ": at least four samples required");
  for (std::size_t i = 1; i < x.size(); ++i)
    require(x[i] > x[i - 1], label + ": coordinates must be strictly increasing");
  auto it = std::min_element(e.begin(), e.end());
  const auto k = static_cast<std::size_t>(it - e.begin());
  const double scale = *std::max_element(e.begin(), e.end());
  require(std::abs(*it) <= 1e-12 * std::max(scale, 1.0), label + ": minimum energy must be 0");
  for (std::size_t i = 1; i <= k; ++i)
    require(e[i] <= e[i - 1], label + ": energy must be nonincreasing before the minimum");
  for (std::size_t i = k + 1; i < e.size(); ++i)
    require(e[i] >= e[i - 1], label + ": energy must be nondecreasing after the minimum");
  return k;
}

}  // namespace

struct MonotoneCubic::Impl {
  Pchip spline;
};

MonotoneCubic::MonotoneCubic(std::vector<double> x, std::vector<double> y)
    : lo_(x.front()), hi_(x.back()) {
  impl_ = std::make_shared<const Impl>(Impl{Pchip(std::move(x), std::move(y))});
}

double MonotoneCubic::operator()(double t) const {
  return impl_->spline(std::clamp(t, lo_, hi_));
}

double MonotoneCubic::slope(double t) const {
  if (t < lo_ || t > hi_) return 0.0;
  return impl_->spline.prime(t);
}

NormalPotential::NormalPotential(Shape shape, double plateau, double layer_width)
    : shape_(std::move(shape)), plateau_(plateau), width_(layer_width) {
  require(plateau_ >= 0.0, "normal potential: plateau must be nonnegative");
  require(width_ > 0.0 && std::isfinite(width_), "normal potential: layer width must be positive");
  std::visit(
      [&](const auto& s) {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Tent>) {
          require(s.slope > 0.0, "tent: slope must be positive");
          require(s.well > 0.0 && s.well < width_, "tent: well must lie inside (0, L)");
          well_ = s.well;
          wall_ = s.slope * s.well;
        } else if constexpr (std::is_same_v<S, Morse>) {
          require(s.stiffness > 0.0, "morse: stiffness must be positive");
          require(s.well > 0.0 && s.well < width_, "morse: well must lie inside (0, L)");
          require(has_free_states() && plateau_ > 0.0, "morse: plateau must be finite and positive");
          const double edge = 1.0 - std::exp(-s.stiffness * (width_ - s.well));
          morse_depth_ = plateau_ / (edge * edge);
          well_ = s.well;
          const double w0 = 1.0 - std::exp(s.stiffness * s.well);
          wall_ = morse_depth_ * w0 * w0;
        } else if constexpr (std::is_same_v<S, SquareWell>) {
          require(s.width > 0.0, "square_well: width must be positive");
          require(!has_free_states() || s.width <= width_, "square_well: width must not exceed L");
          well_ = 0.5 * s.width;
          wall_ = 0.0;
        } else {
          require(has_free_states(), "tabulated normal potential: plateau must be finite");
          const auto k = check_single_well(s.coordinate, s.energy, "tabulated normal potential");
          require(s.coordinate.front() >= 0.0 && s.coordinate.back() <= width_,
                  "tabulated normal potential: samples must lie in [0, L]");
          require(s.energy.back() <= plateau_, "tabulated normal potential: energy exceeds plateau");
          well_ = s.coordinate[k];
          require(well_ > 0.0, "tabulated normal potential: minimum must be at z > 0");
          wall_ = s.energy.front();
          table_ = std::make_shared<const MonotoneCubic>(s.coordinate, s.energy);
        }
      },
      shape_);
}

double NormalPotential::eval(double z) const {
  return std::visit(
      [&](const auto& s) -> double {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Tent>) {
          if (z < s.well) return s.slope * (s.well - z);
          return std::min(s.slope * (z - s.well), plateau_);
        } else if constexpr (std::is_same_v<S, Morse>) {
          const double d = -std::expm1(-s.stiffness * (z - s.well));
          return morse_depth_ * d * d;
        } else if constexpr (std::is_same_v<S, SquareWell>) {
          return z < s.width ? 0.0 : plateau_;
        } else {
          if (z > table_->back()) return s.energy.back();
          return std::max((*table_)(z), 0.0);
        }
      },
      shape_);
}

double NormalPotential::operator()(double z) const {
  if (!(z > 0.0)) throw DomainError("W(z) requires z > 0, got " + std::to_string(z));
  if (has_free_states() && z >= width_) return plateau_;
  return eval(z);
}

double NormalPotential::slope(double z) const {
  if (!(z > 0.0)) throw DomainError("W'(z) requires z > 0, got " + std::to_string(z));
  if (has_free_states() && z >= width_) return 0.0;
  return std::visit(
      [&](const auto& s) -> double {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Tent>) {
          if (z <= s.well) return -s.slope;
          return s.slope * (z - s.well) < plateau_ ? s.slope : 0.0;
        } else if constexpr (std::is_same_v<S, Morse>) {
          const double d = -std::expm1(-s.stiffness * (z - s.well));
          return 2.0 * morse_depth_ * s.stiffness * d * (1.0 - d);
        } else if constexpr (std::is_same_v<S, SquareWell>) {
          return 0.0;
        } else {
          if (z > table_->back()) return 0.0;
          return table_->slope(z);
        }
      },
      shape_);
}

double NormalPotential::separatrix() const {
  return has_free_states() ? std::sqrt(2.0 * plateau_) : unbounded;
}

std::vector<double> NormalPotential::breakpoints() const {
  std::vector<double> out{well_};
  std::visit(
      [&](const auto& s) {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Tent>) {
          if (has_free_states()) out.push_back(s.well + plateau_ / s.slope);
        } else if constexpr (std::is_same_v<S, SquareWell>) {
          out.push_back(s.width);
        } else if constexpr (std::is_same_v<S, TabulatedProfile>) {
          out.insert(out.end(), s.coordinate.begin(), s.coordinate.end());
        }
      },
      shape_);
  const double top = has_free_states() ? width_ : unbounded;
  std::erase_if(out, [&](double z) { return !(z > 0.0 && z < top); });
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double NormalPotential::outer_limit(double energy_speed) const {
  if (has_free_states()) return width_;
  return std::visit(
      [&](const auto& s) -> double {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Tent>) {
          return s.well + 0.5 * energy_speed * energy_speed / s.slope;
        } else if constexpr (std::is_same_v<S, SquareWell>) {
          return s.width;
        } else {
          return width_;
        }
      },
      shape_);
}

std::string NormalPotential::name() const {
  static const char* names[] = {"tent", "morse", "square_well", "tabulated"};
  return names[shape_.index()];
}

double eval_w(const NormalPotential& pot, double z) { return pot(z); }

TangentialPotential::TangentialPotential(Shape shape, double amplitude, double half_period)
    : shape_(std::move(shape)), amplitude_(amplitude), delta_(half_period) {
  require(delta_ > 0.0 && std::isfinite(delta_), "tangential potential: half period must be positive");
  require(amplitude_ >= 0.0 && std::isfinite(amplitude_),
          "tangential potential: amplitude must be finite and nonnegative");
  if (std::holds_alternative<FlatU>(shape_)) amplitude_ = 0.0;
  if (auto* t = std::get_if<TabulatedU>(&shape_)) {
    const auto k = check_single_well(t->y, t->energy, "tabulated tangential potential");
    require(t->y.front() == -1.0 && t->y.back() == 1.0,
            "tabulated tangential potential: samples must span [-1, 1]");
    require(std::abs(t->energy.front() - amplitude_) <= 1e-12 * std::max(amplitude_, 1.0) &&
                std::abs(t->energy.back() - amplitude_) <= 1e-12 * std::max(amplitude_, 1.0),
            "tabulated tangential potential: end values must equal the amplitude");
    well_ = t->y[k];
    table_ = std::make_shared<const MonotoneCubic>(t->y, t->energy);
  }
}

double TangentialPotential::fold(double x) const {
  const double period = 2.0 * delta_;
  double r = std::fmod(x, period);
  if (r < 0.0) r += period;
  if (r >= delta_) r -= period;
  double y = r / delta_;
  if (y >= 1.0) y -= 2.0;
  if (y < -1.0) y = -1.0;
  return y;
}

double TangentialPotential::reduced(double y) const {
  return std::visit(
      [&](const auto& s) -> double {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, FlatU>) {
          return 0.0;
        } else if constexpr (std::is_same_v<S, ParabolicU>) {
          return amplitude_ * y * y;
        } else if constexpr (std::is_same_v<S, CosineU>) {
          return 0.5 * amplitude_ * (1.0 - std::cos(std::numbers::pi * y));
        } else {
          return std::max((*table_)(y), 0.0);
        }
      },
      shape_);
}

double TangentialPotential::reduced_slope(double y) const {
  return std::visit(
      [&](const auto& s) -> double {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, FlatU>) {
          return 0.0;
        } else if constexpr (std::is_same_v<S, ParabolicU>) {
          return 2.0 * amplitude_ * y;
        } else if constexpr (std::is_same_v<S, CosineU>) {
          return 0.5 * amplitude_ * std::numbers::pi * std::sin(std::numbers::pi * y);
        } else {
          return table_->slope(y);
        }
      },
      shape_);
}

double TangentialPotential::operator()(double x) const { return reduced(fold(x)); }

double TangentialPotential::slope(double x) const { return reduced_slope(fold(x)) / delta_; }

std::vector<double> TangentialPotential::breakpoints() const {
  std::vector<double> out{well_};
  if (const auto* t = std::get_if<TabulatedU>(&shape_)) out.insert(out.end(), t->y.begin(), t->y.end());
  std::erase_if(out, [](double y) { return !(y > -1.0 && y < 1.0); });
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::string TangentialPotential::name() const {
  static const char* names[] = {"zero", "parabolic", "cosine", "tabulated"};
  return names[shape_.index()];
}

double eval_u(const TangentialPotential& pot, double x) { return pot(x); }

double eval_u_prime(const TangentialPotential& pot, double x) { return pot.slope(x); }

TabulatedProfile read_profile_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open profile file '" + path + "'");
  TabulatedProfile out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    double a = 0.0, b = 0.0;
    if (!(fields >> a >> b)) {
      if (out.coordinate.empty()) continue;  // header row
      throw ConfigError("profile file '" + path + "': malformed row '" + line + "'");
    }
    out.coordinate.push_back(a);
    out.energy.push_back(b);
  }
  return out;
}

}  // namespace surfkin
