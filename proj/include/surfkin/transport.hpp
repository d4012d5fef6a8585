#pragma once

#include <span>
#include <vector>

#include "surfkin/state.hpp"

namespace surfkin {

/// serial is the reference path; parallel must reproduce it bit for bit.
enum class Execution { serial, parallel };
enum class Limiter { van_leer, upwind };
enum class TransportScheme { finite_volume, semi_lagrangian };

struct TransportOptions {
  TransportScheme scheme = TransportScheme::finite_volume;
  Limiter limiter = Limiter::van_leer;
  XBoundary boundary = XBoundary::periodic;
  Execution execution = Execution::parallel;
};

/// Profile the finite-volume reconstruction is taken relative to along one direction.
/// The limiter acts on g / cell[i] and the face flux is speed * face[f] * (reconstructed ratio),
/// so data proportional to the profile is transported with exact face values.
/// face[i] is the left face of cell i (n + 1 entries). Empty means the plain scheme.
struct Balance {
  std::vector<double> cell;
  std::vector<double> face;
  bool empty() const { return cell.empty(); }
};

/// Shifts every [block][inner] column of `data` along x by speed[inner] * dt.
/// Open boundaries take zero inflow; the return value is the mass carried out through them,
/// weighted by column_measure (one entry per block * inner column).
double advect_x(std::span<double> data, const Layout& layout, std::span<const double> speed, double dx,
                double dt, std::span<const double> column_measure, const TransportOptions& options,
                const Balance& balance = {});

/// Velocity-space transport d_t g + accel(x) d_v g = 0 along the inner index, zero flux at
/// +-v_max. accel holds one value per x cell.
void advect_v(std::span<double> data, const Layout& layout, std::span<const double> accel, double dv,
              double dt, const TransportOptions& options, const Balance& balance = {});

}  // namespace surfkin
