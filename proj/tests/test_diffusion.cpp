#include <cmath>
#include <numbers>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include "surfkin/diffusion.hpp"
#include "surfkin/errors.hpp"

using namespace surfkin;

namespace {

const NormalPotential tent(Tent{2.0, 0.5}, 1.0, 1.0);
const TangentialPotential flat = TangentialPotential::flat();
const TangentialPotential cosine(CosineU{}, 0.5, 0.5);

// e_max = 9 keeps the Maxwellian tail below the coefficient check up to T = 2.
OrbitTable table(const NormalPotential& w, std::size_t nez = 48) {
  OrbitGridSpec s;
  s.normal_nodes = nez;
  s.normal_e_max = 9.0;
  return build_orbit_table(w, flat, s);
}

DensityField field(std::size_t n, double lo, double hi, auto&& f) {
  XGrid x(n, lo, hi);
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = f(x.center(i));
  return {x, v};
}

DensityField random_field(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  return field(n, -0.5, 0.5, [&](double) { return dist(rng); });
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

DiffusionOptions with(TimeScheme time, DiffusionBoundary boundary = DiffusionBoundary::periodic) {
  DiffusionOptions o;
  o.time = time;
  o.boundary = boundary;
  return o;
}

constexpr TimeScheme all_schemes[] = {TimeScheme::implicit_euler, TimeScheme::explicit_euler,
                                      TimeScheme::crank_nicolson};

}  // namespace

TEST(Coefficients, DiffusivityIsTauTimesT) {
  for (const auto& w : {tent, NormalPotential(Morse{4.0, 0.5}, 1.0, 1.0), NormalPotential(SquareWell{0.5}, 1.0, 1.0)})
    for (double t : {0.5, 1.0, 2.0}) {
      const auto c = compute_coefficients(table(w), t, 0.7);
      EXPECT_LT(rel(c.d0_n, 0.7 * t), 1e-8) << w.name() << " T=" << t;
      EXPECT_EQ(c.c0_p, c.d0_n / t);
    }
}

TEST(Coefficients, GammaMatchesClosedFormOrbitLength) {
  // Tent with slope 2, W(0) = W_m = 1: l = e^2 on trapped orbits; a free orbit spans [0, L] with
  // tau = e - sqrt(e^2 - 2), so l = e (e - sqrt(e^2 - 2)).
  const auto c = compute_coefficients(table(tent), 1.0, 1.0);
  using boost::math::quadrature::gauss_kronrod;
  const double sep = std::sqrt(2.0);
  const double trapped = gauss_kronrod<double, 61>::integrate(
      [](double e) { return e * e * std::exp(-0.5 * e * e); }, 0.0, sep, 15, 1e-14);
  // s = sqrt(e^2 - 2) removes the square-root endpoint: de = s ds / e.
  const double free = gauss_kronrod<double, 61>::integrate(
      [](double s) {
        const double e = std::sqrt(s * s + 2.0);
        return (e - s) * std::exp(-0.5 * e * e) * s;
      },
      0.0, std::sqrt(79.0), 15, 1e-14);
  EXPECT_LT(rel(c.gamma, 2.0 * (trapped + free) * std::sqrt(2.0 * std::numbers::pi)), 1e-8);
}

TEST(Coefficients, CouplingLimits) {
  const auto closed = compute_coefficients(table(NormalPotential(Tent{2.0, 0.5}, unbounded, 1.0)), 1.0, 1.0);
  EXPECT_EQ(closed.c_coupling, 0.0);
  const auto open = compute_coefficients(table(NormalPotential(SquareWell{0.5}, 0.0, 1.0)), 1.0, 1.0);
  EXPECT_LT(rel(open.c_coupling, 2.0 / std::sqrt(2.0 * std::numbers::pi)), 1e-8);
}

TEST(Coefficients, PressureFormFluxMatchesDensityForm) {
  const auto c = compute_coefficients(table(tent), 1.3, 0.8);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  for (int i = 0; i < 100; ++i) {
    const double n = 1.0 + std::abs(dist(rng)), dn = dist(rng), dt = dist(rng);
    const double a = density_form_flux(c, n, dn, dt), b = pressure_form_flux(c, n, dn, dt);
    EXPECT_LE(std::abs(a - b), 1e-10 * std::max(1.0, std::abs(a)));
  }
}

TEST(DriftDiffusion, GaussianVarianceGrowsLinearly) {
  const auto c = compute_coefficients(table(tent), 1.0, 1.0);
  const double s0 = 0.05;
  auto n = field(2000, -10.0, 10.0, [&](double x) { return std::exp(-x * x / (2.0 * s0)); });
  const auto opt = with(TimeScheme::implicit_euler, DiffusionBoundary::no_flux);
  const double dt = 1e-3;
  for (int s = 0; s < 1000; ++s) n = step_drift_diffusion(n, c, flat, dt, opt);
  double m = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < n.n.size(); ++i) {
    m += n.n[i];
    m2 += n.n[i] * n.x.center(i) * n.x.center(i);
  }
  EXPECT_LT(rel(m2 / m - s0, 2.0 * c.d0_n * n.time), 1e-2);
}

TEST(DriftDiffusion, SteadyStateIsBoltzmann) {
  const auto c = compute_coefficients(table(tent), 1.0, 1.0);
  auto n = field(512, -0.5, 0.5, [](double) { return 1.0; });
  for (int s = 0; s < 400; ++s) n = step_drift_diffusion(n, c, cosine, 0.02, with(TimeScheme::implicit_euler));
  double z = 0.0, total = 0.0;
  for (std::size_t i = 0; i < n.n.size(); ++i) {
    z += std::exp(-cosine(n.x.center(i)));
    total += n.n[i];
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < n.n.size(); ++i) {
    const double expected = std::exp(-cosine(n.x.center(i))) / z;
    worst = std::max(worst, std::abs(n.n[i] / total - expected) / expected);
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(DriftDiffusion, ConservesMassEveryStep) {
  const auto c = compute_coefficients(table(tent), 1.0, 1.0);
  for (auto scheme : all_schemes)
    for (auto boundary : {DiffusionBoundary::periodic, DiffusionBoundary::no_flux}) {
      auto n = random_field(128, 4);
      const double dt = 0.9 * explicit_dt_limit(n, c, cosine);
      for (int s = 0; s < 100; ++s) {
        const auto next = step_drift_diffusion(n, c, cosine, dt, with(scheme, boundary));
        EXPECT_LE(std::abs(next.mass() / n.mass() - 1.0), 1e-12);
        n = next;
      }
    }
}

TEST(DriftDiffusion, MaximumPrinciple) {
  const auto c = compute_coefficients(table(tent), 1.0, 1.0);
  for (auto scheme : {TimeScheme::implicit_euler, TimeScheme::explicit_euler}) {
    auto n = random_field(64, 5);
    const double dt = scheme == TimeScheme::explicit_euler ? explicit_dt_limit(n, c, flat) : 0.01;
    for (int s = 0; s < 50; ++s) {
      const auto next = step_drift_diffusion(n, c, flat, dt, with(scheme));
      EXPECT_LE(*std::ranges::max_element(next.n), *std::ranges::max_element(n.n));
      EXPECT_GE(*std::ranges::min_element(next.n), *std::ranges::min_element(n.n));
      n = next;
    }
  }
}

TEST(DriftDiffusion, ZeroDensityIsFixedPoint) {
  const auto c = compute_coefficients(table(tent), 1.0, 1.0);
  const auto zero = field(32, -0.5, 0.5, [](double) { return 0.0; });
  for (auto scheme : all_schemes) {
    const auto next = step_drift_diffusion(zero, c, cosine, 1e-5, with(scheme));
    for (double v : next.n) EXPECT_EQ(v, 0.0);
    TemperatureField t{zero.x, std::vector<double>(32, 1.0)};
    for (std::size_t i = 0; i < 32; ++i) t.t[i] = 1.0 + 0.3 * std::sin(2.0 * std::numbers::pi * zero.x.center(i));
    const auto per_cell = coefficients_for(table(tent), t, 1.0);
    for (double v : step_nonisothermal(zero, t, per_cell, cosine, 1e-5, with(scheme)).n) EXPECT_EQ(v, 0.0);
    const auto pair = step_coupled({zero, zero}, c, cosine, 1e-5, with(scheme));
    for (double v : pair.first.n) EXPECT_EQ(v, 0.0);
    for (double v : pair.second.n) EXPECT_EQ(v, 0.0);
  }
}

TEST(DriftDiffusion, ExplicitStepAboveLimitIsRejected) {
  const auto c = compute_coefficients(table(tent), 1.0, 1.0);
  const auto n = random_field(64, 6);
  const double limit = explicit_dt_limit(n, c, cosine);
  EXPECT_THROW(step_drift_diffusion(n, c, cosine, 1.1 * limit, with(TimeScheme::explicit_euler)), StabilityError);
  EXPECT_NO_THROW(step_drift_diffusion(n, c, cosine, 1.1 * limit, with(TimeScheme::implicit_euler)));
}

TEST(NonIsothermal, ConstantTemperatureMatchesDriftDiffusion) {
  const auto orbit = table(tent);
  auto a = random_field(64, 7);
  auto b = a;
  const TemperatureField t{a.x, std::vector<double>(64, 1.0)};
  const auto per_cell = coefficients_for(orbit, t, 1.0);
  const auto c = compute_coefficients(orbit, 1.0, 1.0);
  for (int s = 0; s < 50; ++s) {
    a = step_nonisothermal(a, t, per_cell, cosine, 1e-3);
    b = step_drift_diffusion(b, c, cosine, 1e-3);
  }
  for (std::size_t i = 0; i < a.n.size(); ++i) EXPECT_NEAR(a.n[i], b.n[i], 1e-13);
}

TEST(NonIsothermal, ConservesMassWithTemperatureGradient) {
  const auto orbit = table(tent);
  auto n = random_field(64, 8);
  TemperatureField t{n.x, std::vector<double>(64)};
  for (std::size_t i = 0; i < 64; ++i) t.t[i] = 1.0 + 0.4 * std::cos(2.0 * std::numbers::pi * n.x.center(i));
  const auto per_cell = coefficients_for(orbit, t, 1.0);
  for (std::size_t i = 0; i < 64; ++i) EXPECT_LT(rel(per_cell[i].d0_n, t.t[i]), 1e-8);
  for (auto scheme : all_schemes)
    for (int s = 0; s < 20; ++s) {
      const auto next = step_nonisothermal(n, t, per_cell, cosine, 1e-5, with(scheme));
      EXPECT_LE(std::abs(next.mass() / n.mass() - 1.0), 1e-12);
      n = next;
    }
}

TEST(Coupled, UniformDifferenceDecaysAtTwiceTheRate) {
  const auto c = compute_coefficients(table(tent), 1.0, 1.0);
  ASSERT_GT(c.c_coupling, 0.0);
  DensityPair p{field(16, -0.5, 0.5, [](double) { return 2.0; }), field(16, -0.5, 0.5, [](double) { return 0.0; })};
  for (int s = 0; s < 300; ++s) p = step_coupled(p, c, flat, 1e-2);
  const double expected = 2.0 * std::exp(-2.0 * c.c_coupling * p.first.time);
  for (std::size_t i = 0; i < 16; ++i) {
    EXPECT_NEAR(p.first.n[i] - p.second.n[i], expected, 1e-6);
    EXPECT_NEAR(p.first.n[i] + p.second.n[i], 2.0, 1e-12);
  }
}

TEST(Coupled, EqualFieldsStayEqual) {
  const auto c = compute_coefficients(table(tent), 1.0, 1.0);
  const auto start = random_field(64, 9);
  DensityPair p{start, start};
  for (int s = 0; s < 100; ++s) p = step_coupled(p, c, cosine, 1e-3);
  EXPECT_EQ(p.first.n, p.second.n);
}

TEST(Coupled, ZeroRateGivesIndependentEquations) {
  auto c = compute_coefficients(table(NormalPotential(Tent{2.0, 0.5}, unbounded, 1.0)), 1.0, 1.0);
  ASSERT_EQ(c.c_coupling, 0.0);
  DensityPair p{random_field(64, 10), random_field(64, 11)};
  auto a = p.first, b = p.second;
  for (int s = 0; s < 100; ++s) {
    p = step_coupled(p, c, cosine, 1e-3);
    a = step_drift_diffusion(a, c, cosine, 1e-3);
    b = step_drift_diffusion(b, c, cosine, 1e-3);
  }
  for (std::size_t i = 0; i < 64; ++i) {
    EXPECT_NEAR(p.first.n[i], a.n[i], 1e-13);
    EXPECT_NEAR(p.second.n[i], b.n[i], 1e-13);
  }
}

TEST(Coupled, SumFollowsSingleFieldEquation) {
  const auto c = compute_coefficients(table(tent), 1.0, 1.0);
  for (auto scheme : all_schemes) {
    DensityPair p{random_field(64, 12), random_field(64, 13)};
    DensityField sum = p.first;
    for (std::size_t i = 0; i < 64; ++i) sum.n[i] += p.second.n[i];
    const double dt = 0.9 * explicit_dt_limit(sum, c, cosine);
    const double m0 = sum.mass();
    for (int s = 0; s < 100; ++s) {
      p = step_coupled(p, c, cosine, dt, with(scheme));
      sum = step_drift_diffusion(sum, c, cosine, dt, with(scheme));
      EXPECT_LE(std::abs((p.first.mass() + p.second.mass()) / m0 - 1.0), 1e-12);
    }
    for (std::size_t i = 0; i < 64; ++i) EXPECT_NEAR(p.first.n[i] + p.second.n[i], sum.n[i], 1e-12);
  }
}
