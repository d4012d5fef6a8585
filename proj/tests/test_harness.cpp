#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "surfkin/errors.hpp"
#include "surfkin/harness.hpp"

using namespace surfkin;

namespace {

DensityField field(std::size_t n, auto&& f) {
  XGrid x(n, 0.0, 1.0);
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = f(x.center(i));
  return {x, v};
}

StudyPhysics small_physics() {
  StudyPhysics p;
  p.orbit.normal_nodes = 16;
  p.orbit.tangential_nodes = 16;
  return p;
}

DiffusionLimitSetup small_limit() {
  DiffusionLimitSetup s;
  s.physics = small_physics();
  s.nx = 32;
  s.nv = 16;
  s.t_tilde = 0.01;
  return s;
}

bool same_report(const ConvergenceReport& a, const ConvergenceReport& b) {
  if (a.cases.size() != b.cases.size()) return false;
  for (std::size_t i = 0; i < a.cases.size(); ++i) {
    const auto &x = a.cases[i], &y = b.cases[i];
    if (x.error.l1 != y.error.l1 || x.error.l2 != y.error.l2 || x.error.linf != y.error.linf) return false;
    if (x.mass_defect != y.mass_defect || x.profiles.size() != y.profiles.size()) return false;
    for (std::size_t p = 0; p < x.profiles.size(); ++p)
      if (x.profiles[p].values != y.profiles[p].values) return false;
  }
  return true;
}

}  // namespace

TEST(ErrorNorms, EqualFieldsGiveZero) {
  const auto a = field(64, [](double x) { return std::cos(x); });
  const auto e = error_norms(a, a);
  EXPECT_EQ(e.l1, 0.0);
  EXPECT_EQ(e.l2, 0.0);
  EXPECT_EQ(e.linf, 0.0);
}

TEST(ErrorNorms, UnitConstantOnUnitDomain) {
  const auto a = field(100, [](double x) { return x + 1.0; });
  const auto b = field(100, [](double x) { return x; });
  const auto e = error_norms(a, b);
  EXPECT_NEAR(e.l1, 1.0, 1e-14);
  EXPECT_NEAR(e.l2, 1.0, 1e-14);
  EXPECT_NEAR(e.linf, 1.0, 1e-14);
}

TEST(ErrorNorms, SineOnFiveHundredTwelveCells) {
  const auto a = field(512, [](double x) { return std::sin(2.0 * std::numbers::pi * x); });
  const auto zero = field(512, [](double) { return 0.0; });
  const auto e = error_norms(a, zero);
  EXPECT_NEAR(e.l1, 2.0 / std::numbers::pi, 1e-4);
  EXPECT_NEAR(e.l2, std::sqrt(0.5), 1e-4);
  EXPECT_NEAR(e.linf, 1.0, 1e-4);
}

TEST(ErrorNorms, MismatchedGridsAreRejected) {
  EXPECT_THROW(error_norms(field(10, [](double) { return 0.0; }), field(12, [](double) { return 0.0; })),
               DomainError);
}

TEST(FitOrder, RecoversPowerLaw) {
  const std::vector<double> p{0.2, 0.1, 0.05};
  const std::vector<double> e{3.0 * 0.04, 3.0 * 0.01, 3.0 * 0.0025};
  const auto fit = fit_order(p, e);
  EXPECT_NEAR(fit.order, 2.0, 1e-12);
  EXPECT_NEAR(fit.residual, 0.0, 1e-12);
  const std::vector<double> one{0.1}, err{1.0};
  EXPECT_TRUE(std::isnan(fit_order(one, err).order));
}

TEST(Regimes, NamesAndScales) {
  EXPECT_EQ(parse_regime("weak"), CouplingRegime::weak);
  EXPECT_EQ(to_string(CouplingRegime::strong), "strong");
  EXPECT_THROW(parse_regime("medium"), ConfigError);
  EXPECT_EQ(coupling_scale(CouplingRegime::strong, 0.05), 20.0);
  EXPECT_EQ(coupling_scale(CouplingRegime::moderate, 0.05), 1.0);
  EXPECT_EQ(coupling_scale(CouplingRegime::weak, 0.05), 0.05);
}

TEST(DiffusionLimitStudy, RejectsBadParameterLists) {
  const auto s = small_limit();
  EXPECT_THROW(run_diffusion_limit_study(s, std::vector<double>{0.1, 0.2}), ConfigError);
  EXPECT_THROW(run_diffusion_limit_study(s, std::vector<double>{0.1, 0.1}), ConfigError);
  EXPECT_THROW(run_diffusion_limit_study(s, std::vector<double>{0.3, 0.1}), ConfigError);
  EXPECT_THROW(run_diffusion_limit_study(s, std::vector<double>{}), ConfigError);
}

TEST(DiffusionLimitStudy, EquilibriumWithoutPotentialIsExact) {
  auto s = small_limit();
  s.tangential = TangentialPotential::flat();
  s.amplitude = 0.0;
  const auto r = run_diffusion_limit_study(s, std::vector<double>{0.2, 0.1, 0.05});
  ASSERT_TRUE(r.complete);
  for (const auto& c : r.cases) EXPECT_LT(c.error.linf, 1e-12) << "eps=" << c.parameter;
}

TEST(DiffusionLimitStudy, ErrorDecreasesWithEpsAndIsDeterministic) {
  const auto s = small_limit();
  const std::vector<double> eps{0.2, 0.1};
  const auto a = run_diffusion_limit_study(s, eps);
  ASSERT_TRUE(a.complete);
  EXPECT_TRUE(a.monotone);
  EXPECT_GT(a.cases[0].error.l1, a.cases[1].error.l1);
  auto parallel = s;
  parallel.jobs = 2;
  const auto b = run_diffusion_limit_study(parallel, eps);
  EXPECT_TRUE(same_report(a, b));
}

TEST(DiffusionLimitStudy, GridRefinementBarelyMovesTheError) {
  auto coarse = small_limit();
  auto fine = coarse;
  fine.nx *= 2;
  fine.nv *= 2;
  const std::vector<double> eps{0.1};
  const double e1 = run_diffusion_limit_study(coarse, eps).cases[0].error.l1;
  const double e2 = run_diffusion_limit_study(fine, eps).cases[0].error.l1;
  EXPECT_LT(std::abs(e2 - e1) / e1, 0.2);
}

TEST(HomogenizationStudy, FlatPotentialLeavesOnlyDiscretizationError) {
  auto run = [](std::size_t nv, std::size_t nodes) {
    HomogenizationSetup s;
    s.physics = small_physics();
    s.physics.orbit.tangential_nodes = nodes;
    s.shape = FlatU{};
    s.nx = 64;
    s.nv = nv;
    s.t_end = 0.05;
    const auto r = run_homogenization_study(s, std::vector<double>{0.125});
    for (const auto& ch : r.cases[0].checks) EXPECT_TRUE(ch.passed) << ch.name << " " << ch.value;
    return r.cases[0].relative_l1;
  };
  const double coarse = run(16, 16), fine = run(32, 32);
  EXPECT_LT(coarse, 1e-2);
  EXPECT_LT(fine, 0.5 * coarse);
}

TEST(HomogenizationStudy, NeedsSixteenCellsPerPeriod) {
  HomogenizationSetup s;
  s.physics = small_physics();
  s.nx = 64;
  EXPECT_THROW(run_homogenization_study(s, std::vector<double>{1.0 / 32.0}), ConfigError);
  EXPECT_THROW(run_homogenization_study(s, std::vector<double>{0.3}), ConfigError);
}

TEST(CouplingStudy, UniformClosedFormAndDeterminism) {
  CouplingSetup s;
  s.physics = small_physics();
  s.nx = 16;
  s.nv = 16;
  s.weak_horizon = 0.05;
  const std::vector<double> eps{0.1};
  const auto a = run_coupling_regime_study(s, CouplingRegime::weak, eps);
  ASSERT_TRUE(a.complete);
  bool saw_closed_form = false;
  for (const auto& ch : a.cases[0].checks)
    if (ch.name.find("closed_form") != std::string::npos) {
      saw_closed_form = true;
      EXPECT_TRUE(ch.passed) << ch.name << " " << ch.value;
    }
  EXPECT_TRUE(saw_closed_form);
  auto parallel = s;
  parallel.jobs = 3;
  EXPECT_TRUE(same_report(a, run_coupling_regime_study(parallel, CouplingRegime::weak, eps)));
}

TEST(CouplingStudy, NeedsFreeStates) {
  CouplingSetup s;
  s.physics = small_physics();
  s.physics.normal = NormalPotential(Tent{2.0, 0.5}, unbounded, 1.0);
  EXPECT_THROW(run_coupling_regime_study(s, CouplingRegime::weak, std::vector<double>{0.05}), ConfigError);
}
