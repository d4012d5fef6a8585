#include <cmath>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "surfkin/errors.hpp"
#include "surfkin/potentials.hpp"

using namespace surfkin;

namespace {

NormalPotential tent() { return NormalPotential(Tent{2.0, 0.5}, 1.0, 1.0); }

std::vector<NormalPotential> all_normal() {
  return {tent(), NormalPotential(Morse{4.0, 0.5}, 1.0, 1.0), NormalPotential(SquareWell{0.5}, 1.0, 1.0),
          NormalPotential(TabulatedProfile{{0.1, 0.3, 0.5, 0.7, 1.0}, {3.0, 1.0, 0.0, 0.4, 1.0}}, 1.0, 1.0)};
}

std::vector<TangentialPotential> all_tangential(double delta) {
  return {TangentialPotential::flat(delta), TangentialPotential(ParabolicU{}, 1.0, delta),
          TangentialPotential(CosineU{}, 1.0, delta),
          TangentialPotential(TabulatedU{{-1.0, -0.5, 0.0, 0.5, 1.0}, {1.0, 0.3, 0.0, 0.3, 1.0}}, 1.0, delta)};
}

}  // namespace

TEST(NormalPotential, TentValues) {
  const auto w = tent();
  EXPECT_DOUBLE_EQ(eval_w(w, 0.5), 0.0);
  EXPECT_NEAR(eval_w(w, 0.75), 0.5, 1e-15);
}

TEST(NormalPotential, PlateauBeyondLayer) {
  for (const auto& w : all_normal()) EXPECT_EQ(eval_w(w, 1.5), 1.0) << w.name();
}

TEST(NormalPotential, NonPositiveHeightIsDomainError) {
  for (const auto& w : all_normal()) {
    EXPECT_THROW(eval_w(w, 0.0), DomainError);
    EXPECT_THROW(eval_w(w, -0.1), DomainError);
  }
}

TEST(NormalPotential, BoundsAndZeroAtWell) {
  for (const auto& w : all_normal()) {
    const double top = std::max(w.plateau(), w.wall_value());
    for (int i = 1; i <= 1000; ++i) {
      const double z = 1e-3 * i;
      const double v = w(z);
      EXPECT_GE(v, 0.0) << w.name() << " z=" << z;
      EXPECT_LE(v, top * (1 + 1e-14)) << w.name() << " z=" << z;
    }
    EXPECT_NEAR(w(w.well_position()), 0.0, 1e-15) << w.name();
  }
}

TEST(NormalPotential, MonotoneOnEachSideOfWell) {
  for (const auto& w : all_normal()) {
    const double zm = w.well_position();
    double prev = w(1e-4);
    for (double z = 2e-4; z <= zm; z += 1e-4) {
      EXPECT_LE(w(z), prev + 1e-14) << w.name();
      prev = w(z);
    }
    prev = w(zm);
    for (double z = zm; z <= 1.0; z += 1e-4) {
      EXPECT_GE(w(z), prev - 1e-14) << w.name();
      prev = w(z);
    }
  }
}

TEST(NormalPotential, TabulatedMustBeMonotoneAroundWell) {
  EXPECT_THROW(NormalPotential(TabulatedProfile{{0.1, 0.3, 0.5, 0.7, 1.0}, {3.0, 0.0, 0.5, 0.4, 1.0}}, 1.0, 1.0),
               ConfigError);
}

TEST(NormalPotential, UnboundedPlateauHasNoFreeStates) {
  const NormalPotential w(Tent{2.0, 0.5}, unbounded, 1.0);
  EXPECT_FALSE(w.has_free_states());
  EXPECT_TRUE(std::isinf(w.separatrix()));
}

TEST(TangentialPotential, Values) {
  EXPECT_EQ(eval_u(TangentialPotential::flat(1.0), 0.37), 0.0);
  const TangentialPotential p(ParabolicU{}, 1.0, 1.0);
  EXPECT_NEAR(eval_u(p, 1.0), 1.0, 1e-15);
  EXPECT_NEAR(eval_u(p, 2.5), 0.25, 1e-15);
  EXPECT_NEAR(eval_u_prime(p, 0.5), 1.0, 1e-15);
  EXPECT_NEAR(eval_u_prime(TangentialPotential(CosineU{}, 1.0, 1.0), 0.0), 0.0, 1e-15);
}

TEST(TangentialPotential, ReducedProfileBounds) {
  for (const auto& u : all_tangential(1.0)) {
    if (u.is_flat()) continue;
    EXPECT_NEAR(u.reduced(0.0), 0.0, 1e-15) << u.name();
    EXPECT_NEAR(u.reduced(-1.0), u.amplitude(), 1e-14) << u.name();
    for (int i = 0; i <= 2000; ++i) {
      const double y = -1.0 + 1e-3 * i;
      EXPECT_GE(u.reduced(y), -1e-15);
      EXPECT_LE(u.reduced(y), u.amplitude() + 1e-14);
    }
  }
}

TEST(TangentialPotential, ExactlyPeriodic) {
  for (const auto& u : all_tangential(1.0 / 16.0)) {
    const double period = 2.0 * u.half_period();
    for (int i = 0; i < 10000; ++i) {
      // Dyadic probes so that x + 2 delta is exact.
      const double x = -3.0 + 6.0 * i / 8192.0;
      EXPECT_EQ(eval_u(u, x + period), eval_u(u, x)) << u.name() << " x=" << x;
    }
  }
}

TEST(TangentialPotential, SlopeMatchesCenteredDifference) {
  for (const double delta : {1.0, 1.0 / 16.0}) {
    for (const auto& u : all_tangential(delta)) {
      if (std::holds_alternative<TabulatedU>(u.shape())) continue;
      const double h = 1e-6 * delta;
      for (int i = 0; i < 200; ++i) {
        const double x = delta * (-0.9 + 1.8 * i / 199.0);
        const double fd = (u(x + h) - u(x - h)) / (2.0 * h);
        const double scale = std::max(std::abs(u.slope(x)), u.amplitude() / delta);
        if (scale == 0.0) {
          EXPECT_EQ(u.slope(x), 0.0);
          continue;
        }
        EXPECT_LE(std::abs(fd - u.slope(x)), 1e-6 * scale) << u.name() << " x=" << x;
      }
    }
  }
}

TEST(TangentialPotential, ProfileCsvRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "surfkin_profile_test.csv";
  {
    std::ofstream out(path);
    out << "# tangential table\ny,U\n-1,1\n-0.5,0.25\n0,0\n0.5,0.25\n1,1\n";
  }
  const auto t = read_profile_csv(path.string());
  ASSERT_EQ(t.coordinate.size(), 5u);
  EXPECT_EQ(t.energy[1], 0.25);
  const TangentialPotential u(TabulatedU{t.coordinate, t.energy}, 1.0, 1.0);
  EXPECT_NEAR(u(0.5), 0.25, 1e-14);
  std::filesystem::remove(path);
  EXPECT_THROW(read_profile_csv("/nonexistent/profile.csv"), ConfigError);
}
