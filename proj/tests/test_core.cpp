#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "wavedisc/core.hpp"

using namespace wavedisc;

namespace {

Grid1D case1_grid() { return {6.0, 128, 5.0, 420}; }

}  // namespace

TEST(Grid, SpacingIncludesEndpoints) {
  const Grid1D g = case1_grid();
  EXPECT_DOUBLE_EQ(g.dx(), 6.0 / 127.0);
  EXPECT_DOUBLE_EQ(g.dt(), 5.0 / 419.0);
  EXPECT_DOUBLE_EQ(g.x(127), 6.0);
}

TEST(Grid, RejectsTooFewPoints) {
  EXPECT_THROW((Grid1D{1.0, 4, 1.0, 10}.validate()), ConfigError);
  EXPECT_THROW((Grid1D{1.0, 10, 1.0, 2}.validate()), ConfigError);
  EXPECT_THROW((Grid1D{0.0, 10, 1.0, 10}.validate()), ConfigError);
}

TEST(Ricker, EqualsMinusOneAtCentre) {
  const Grid1D g = case1_grid();
  const Field r = ricker_profile(g, {0.5});
  // x = 2.0 is not a grid node here; evaluate on a grid that has it
  const Field r2 = ricker_profile(Grid1D{6.0, 7, 1.0, 3}, {0.5});
  EXPECT_DOUBLE_EQ(r2[2], -1.0);
  EXPECT_EQ(r.size(), 128u);
}

TEST(Ricker, PeakMagnitudeNearestCentre) {
  const Grid1D g = case1_grid();
  const Field r = ricker_profile(g, {0.5});
  std::size_t arg = 0;
  for (std::size_t i = 0; i < r.size(); ++i)
    if (std::abs(r[i]) > std::abs(r[arg])) arg = i;
  std::size_t nearest = 0;
  for (std::size_t i = 0; i < g.nx; ++i)
    if (std::abs(g.x(i) - 2.0) < std::abs(g.x(nearest) - 2.0)) nearest = i;
  EXPECT_EQ(arg, nearest);
  EXPECT_NEAR(std::abs(r[arg]), 1.0, 1e-2);
}

TEST(Ricker, ValueAtOriginForUnitFrequency) {
  // (2 pi^2 - 1) exp(-pi^2), evaluated in long double
  const long double pi2 = std::numbers::pi_v<long double> * std::numbers::pi_v<long double>;
  const double expected = static_cast<double>((2.0L * pi2 - 1.0L) * std::exp(-pi2));
  const Field r = ricker_profile(Grid1D{3.0, 128, 3.0, 242}, {1.0});
  EXPECT_NEAR(r[0], expected, 1e-15);
  EXPECT_NEAR(r[0], 9.6925e-4, 1e-8);
}

TEST(Ricker, SymmetricAboutCentreAndBounded) {
  // 2/f0 = 4 so a grid on [0, 4] is symmetric about x = 2
  const Field r = ricker_profile(Grid1D{4.0, 101, 1.0, 3}, {0.5});
  for (std::size_t i = 0; i < 101; ++i) {
    EXPECT_NEAR(r[i], r[100 - i], 1e-14);
    EXPECT_LE(std::abs(r[i]), 2.0);
  }
}

TEST(Ricker, RejectsNonPositiveFrequency) {
  EXPECT_THROW(ricker_profile(case1_grid(), {0.0}), ConfigError);
  EXPECT_THROW(ricker_profile(case1_grid(), {-1.0}), ConfigError);
}

TEST(Cfl, CaseOneMargin) {
  const Grid1D g = case1_grid();
  const double m = cfl_margin(g, MediumSpec::uniform(g.nx, 2.5, 0.0));
  EXPECT_NEAR(m, (5.0 / 419.0) * 2.5 / (6.0 / 127.0), 1e-15);
  EXPECT_NEAR(m, 0.6315, 1e-4);
  EXPECT_LT(m, 1.0);
}

TEST(Cfl, UnitWhenStepMatchesSpeed) {
  // dx = 0.1, dt = 0.05, c = 2
  const Grid1D g{1.0, 11, 1.0, 21};
  EXPECT_NEAR(cfl_margin(g, MediumSpec::uniform(g.nx, 2.0, 0.0)), 1.0, 1e-14);
}

TEST(Cfl, ScalesWithTimeStep) {
  const Grid1D g{1.0, 11, 1.0, 21};
  const Grid1D g2{1.0, 11, 2.0, 21};
  const MediumSpec m = MediumSpec::uniform(11, 1.3, 0.0);
  EXPECT_NEAR(cfl_margin(g2, m), 2.0 * cfl_margin(g, m), 1e-14);
}

TEST(Cfl, RejectsNonPositiveSpeed) {
  const Grid1D g{1.0, 11, 1.0, 21};
  MediumSpec m = MediumSpec::uniform(11, 1.0, 0.0);
  m.csq[4] = 0.0;
  EXPECT_THROW(cfl_margin(g, m), ConfigError);
}

TEST(Medium, LinearVelocityEndpoints) {
  const Grid1D g{2.0, 128, 3.0, 302};
  const MediumSpec m = MediumSpec::linear_velocity(g, 0.6, 1.0, -0.5);
  EXPECT_NEAR(std::sqrt(m.csq[0]), 0.6, 1e-15);
  EXPECT_NEAR(std::sqrt(m.csq[127]), 1.0, 1e-15);
  for (std::size_t i = 1; i < 128; ++i) EXPECT_GT(m.csq[i], m.csq[i - 1]);
  EXPECT_EQ(m.eta[64], -0.5);
}

TEST(Boundary, RejectsBadTransmittingOrder) {
  EXPECT_THROW((BoundarySpec{Mtf{0, 1.0}, Dirichlet{}}.validate()), ConfigError);
  EXPECT_THROW((BoundarySpec{Dirichlet{}, Mtf{4, 1.0}}.validate()), ConfigError);
  EXPECT_NO_THROW((BoundarySpec{Mtf{3, 1.0}, Neumann{}}.validate()));
}
