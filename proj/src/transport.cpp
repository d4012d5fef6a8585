#include "surfkin/transport.hpp"

#include <cmath>
#include <vector>

#include "surfkin/errors.hpp"

namespace surfkin {

namespace {

/// Branch-free so the face loops vectorize.
inline double van_leer(double left, double right) {
  const double prod = left * right;
  const bool same_sign = prod > 0.0;
  const double ratio = 2.0 * prod / (same_sign ? left + right : 1.0);
  return same_sign ? ratio : 0.0;
}

/// Limited MUSCL upwind flux through the face between m0 and p0 (cells m1, m0 | p0, p1).
/// Both upwind candidates are formed and the sign of a selects one; a = 0 gives 0.
/// use_left / use_right are 0 or 1 and switch the slope off next to an open boundary.
inline double face_flux_select(double a, double m1, double m0, double p0, double p1, double use_left,
                               double use_right) {
  const double from_left = a * (m0 + 0.5 * use_left * van_leer(m0 - m1, p0 - m0));
  const double from_right = a * (p0 - 0.5 * use_right * van_leer(p0 - m0, p1 - p0));
  return a > 0.0 ? from_left : from_right;
}

struct CubicWeights {
  long base;  // index of the first of four stencil points
  double w[4];
};

/// Lagrange cubic weights for sampling at fractional index p.
CubicWeights cubic_at(double p) {
  const double fl = std::floor(p);
  const double t = p - fl;
  CubicWeights out{static_cast<long>(fl) - 1, {}};
  out.w[0] = -t * (t - 1.0) * (t - 2.0) / 6.0;
  out.w[1] = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
  out.w[2] = -(t + 1.0) * t * (t - 2.0) / 2.0;
  out.w[3] = (t + 1.0) * t * (t - 1.0) / 6.0;
  return out;
}

long wrap(long i, long n) {
  const long r = i % n;
  return r < 0 ? r + n : r;
}

// Both finite-volume paths take one Heun (SSP-RK2) step of the semi-discrete limited scheme.
// Its second-order term is the square of the discrete operator, so when the x and v substeps
// cancel on a balanced state the Strang composition keeps that state to third order per step.

double advect_x_fv(std::span<double> data, const Layout& lay, std::span<const double> speed, double dx,
                   double dt, std::span<const double> measure, const TransportOptions& opt,
                   const Balance& balance) {
  const long nx = static_cast<long>(lay.nx);
  const std::size_t cols = lay.slice();
  const bool periodic = opt.boundary == XBoundary::periodic;
  const long faces = periodic ? nx : nx + 1;
  const long first = periodic ? 0 : -1;  // left cell index of face 0
  const bool weighted = !balance.empty();
  if (weighted && (balance.cell.size() != lay.nx || balance.face.size() != lay.nx + 1))
    throw DomainError("advect_x: balance profile does not match the grid");
  const bool parallel = opt.execution == Execution::parallel;
  const bool limited = opt.limiter == Limiter::van_leer;

  // Reused across calls: a fresh multi-megabyte buffer per stage costs more in page faults
  // than the stencil itself. Worker threads must see the caller's buffers, so only raw
  // pointers enter the parallel loops.
  thread_local std::vector<double> flux_buffer, stage_buffer, zero_buffer;
  flux_buffer.resize(static_cast<std::size_t>(faces) * cols);
  stage_buffer.resize(data.size());
  zero_buffer.assign(cols, 0.0);
  double* const flux = flux_buffer.data();
  double* const stage = stage_buffer.data();
  const double* const zeros = zero_buffer.data();

  auto inside = [&](long i) { return periodic || (i >= 0 && i < nx); };
  auto index = [&](long i) { return static_cast<std::size_t>(periodic ? wrap(i, nx) : i); };
  auto inverse_weight = [&](long i) { return weighted && inside(i) ? 1.0 / balance.cell[index(i)] : 1.0; };

  // Fills flux from src, then dst = keep * base + (1 - keep) * (src - dt/dx * divergence).
  auto sweep = [&](const double* src, const double* base, double* dst, double keep) {
    auto row = [&](long i) -> const double* { return inside(i) ? src + index(i) * cols : zeros; };
#pragma omp parallel for schedule(static) if (parallel)
    for (long f = 0; f < faces; ++f) {
      const long left = first + f;
      const double *m1 = row(left - 1), *m0 = row(left), *p0 = row(left + 1), *p1 = row(left + 2);
      const double im1 = inverse_weight(left - 1), im0 = inverse_weight(left), ip0 = inverse_weight(left + 1),
                   ip1 = inverse_weight(left + 2);
      const double face_w = weighted ? balance.face[index(left + 1)] : 1.0;
      const double use_left = limited && inside(left - 1) ? 1.0 : 0.0;
      const double use_right = limited && inside(left + 2) ? 1.0 : 0.0;
      double* const out = flux + static_cast<std::size_t>(f) * cols;
      const double* const a = speed.data();
      for (std::size_t off = 0; off < cols; off += lay.inner) {
#pragma omp simd
        for (std::size_t j = 0; j < lay.inner; ++j) {
          const std::size_t c = off + j;
          out[c] = face_w * face_flux_select(a[j], m1[c] * im1, m0[c] * im0, p0[c] * ip0, p1[c] * ip1,
                                             use_left, use_right);
        }
      }
    }
    const double ratio = dt / dx;
    const double mix = 1.0 - keep;
#pragma omp parallel for schedule(static) if (parallel)
    for (long i = 0; i < nx; ++i) {
      const std::size_t fr = static_cast<std::size_t>(i - first);
      const std::size_t fl = periodic ? static_cast<std::size_t>(wrap(i - 1, nx)) : fr - 1;
      const std::size_t at = static_cast<std::size_t>(i) * cols;
      for (std::size_t c = 0; c < cols; ++c)
        dst[at + c] = keep * base[at + c] +
                      mix * (src[at + c] - ratio * (flux[fr * cols + c] - flux[fl * cols + c]));
    }
  };

  auto boundary_mass = [&] {
    double out = 0.0;
    const std::size_t last = static_cast<std::size_t>(faces - 1) * cols;
    for (std::size_t c = 0; c < cols; ++c) out += measure[c] * dt * (flux[last + c] - flux[c]);
    return out;
  };

  sweep(data.data(), data.data(), stage, 0.0);
  const double first_out = periodic ? 0.0 : boundary_mass();
  sweep(stage, data.data(), data.data(), 0.5);
  return periodic ? 0.0 : 0.5 * (first_out + boundary_mass());
}

double advect_x_sl(std::span<double> data, const Layout& lay, std::span<const double> speed, double dx,
                   double dt, std::span<const double> measure, const TransportOptions& opt) {
  const long nx = static_cast<long>(lay.nx);
  const std::size_t cols = lay.slice();
  const bool periodic = opt.boundary == XBoundary::periodic;
  std::vector<double> old(data.begin(), data.end());
  auto value = [&](long i, std::size_t c) -> double {
    if (periodic) return old[static_cast<std::size_t>(wrap(i, nx)) * cols + c];
    if (i < 0 || i >= nx) return 0.0;
    return old[static_cast<std::size_t>(i) * cols + c];
  };
#pragma omp parallel for schedule(static) if (opt.execution == Execution::parallel)
  for (long i = 0; i < nx; ++i) {
    for (std::size_t c = 0; c < cols; ++c) {
      const auto cw = cubic_at(static_cast<double>(i) - speed[c % lay.inner] * dt / dx);
      double acc = 0.0;
      for (long q = 0; q < 4; ++q) acc += cw.w[q] * value(cw.base + q, c);
      data[static_cast<std::size_t>(i) * cols + c] = acc;
    }
  }
  if (periodic) return 0.0;
  double before = 0.0, after = 0.0;
  for (std::size_t k = 0; k < old.size(); ++k) {
    before += measure[k % cols] * old[k];
    after += measure[k % cols] * data[k];
  }
  return (before - after) * dx;
}

void advect_v_fv(std::span<double> data, const Layout& lay, std::span<const double> accel, double dv,
                 double dt, const TransportOptions& opt, const Balance& balance) {
  const std::size_t nv = lay.inner;
  const bool weighted = !balance.empty();
  if (weighted && (balance.cell.size() != nv || balance.face.size() != nv + 1))
    throw DomainError("advect_v: balance profile does not match the grid");
  std::vector<double> inv(nv, 1.0), face(nv + 1, 1.0);
  if (weighted) {
    for (std::size_t j = 0; j < nv; ++j) inv[j] = 1.0 / balance.cell[j];
    face = balance.face;
  }
  const double lim = opt.limiter == Limiter::van_leer ? 1.0 : 0.0;
  const double ratio = dt / dv;
#pragma omp parallel for schedule(static) if (opt.execution == Execution::parallel)
  for (std::size_t ix = 0; ix < lay.nx; ++ix) {
    const double a = accel[ix];
    if (a == 0.0) continue;
    std::vector<double> flux(nv + 1, 0.0), phi(nv), stage(nv);
    // Zero flux through both outer faces.
    auto divergence = [&](const double* g) {
      for (std::size_t j = 0; j < nv; ++j) phi[j] = g[j] * inv[j];
      if (nv > 2) {
        flux[1] = face[1] * face_flux_select(a, 0.0, phi[0], phi[1], phi[2], 0.0, lim);
#pragma omp simd
        for (std::size_t f = 2; f < nv - 1; ++f)
          flux[f] = face[f] * face_flux_select(a, phi[f - 2], phi[f - 1], phi[f], phi[f + 1], lim, lim);
        flux[nv - 1] = face[nv - 1] * face_flux_select(a, phi[nv - 3], phi[nv - 2], phi[nv - 1], 0.0, lim, 0.0);
      } else if (nv == 2) {
        flux[1] = face[1] * face_flux_select(a, 0.0, phi[0], phi[1], 0.0, 0.0, 0.0);
      }
    };
    for (std::size_t k = 0; k < lay.blocks; ++k) {
      double* line = data.data() + lay(ix, k, 0);
      divergence(line);
      for (std::size_t j = 0; j < nv; ++j) stage[j] = line[j] - ratio * (flux[j + 1] - flux[j]);
      divergence(stage.data());
      for (std::size_t j = 0; j < nv; ++j)
        line[j] = 0.5 * line[j] + 0.5 * (stage[j] - ratio * (flux[j + 1] - flux[j]));
    }
  }
}

void advect_v_sl(std::span<double> data, const Layout& lay, std::span<const double> accel, double dv,
                 double dt, const TransportOptions& opt) {
  const long nv = static_cast<long>(lay.inner);
#pragma omp parallel for schedule(static) if (opt.execution == Execution::parallel)
  for (std::size_t ix = 0; ix < lay.nx; ++ix) {
    if (accel[ix] == 0.0) continue;
    const auto cw = cubic_at(-accel[ix] * dt / dv);
    std::vector<double> old(static_cast<std::size_t>(nv));
    for (std::size_t k = 0; k < lay.blocks; ++k) {
      double* line = data.data() + lay(ix, k, 0);
      std::copy(line, line + nv, old.begin());
      for (long j = 0; j < nv; ++j) {
        double acc = 0.0;
        for (long q = 0; q < 4; ++q) {
          const long src = j + cw.base + q;
          if (src >= 0 && src < nv) acc += cw.w[q] * old[static_cast<std::size_t>(src)];
        }
        line[j] = acc;
      }
    }
  }
}

}  // namespace

double advect_x(std::span<double> data, const Layout& layout, std::span<const double> speed, double dx,
                double dt, std::span<const double> column_measure, const TransportOptions& options,
                const Balance& balance) {
  if (data.size() != layout.total() || speed.size() != layout.inner || column_measure.size() != layout.slice())
    throw DomainError("advect_x: array sizes do not match the layout");
  if (dt == 0.0 || layout.nx == 0) return 0.0;
  if (options.scheme == TransportScheme::semi_lagrangian)
    return advect_x_sl(data, layout, speed, dx, dt, column_measure, options);
  return advect_x_fv(data, layout, speed, dx, dt, column_measure, options, balance);
}

void advect_v(std::span<double> data, const Layout& layout, std::span<const double> accel, double dv,
              double dt, const TransportOptions& options, const Balance& balance) {
  if (data.size() != layout.total() || accel.size() != layout.nx)
    throw DomainError("advect_v: array sizes do not match the layout");
  if (dt == 0.0) return;
  if (options.scheme == TransportScheme::semi_lagrangian)
    advect_v_sl(data, layout, accel, dv, dt, options);
  else
    advect_v_fv(data, layout, accel, dv, dt, options, balance);
}

}  // namespace surfkin
