#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "wavedisc/library.hpp"
#include "wavedisc/sampling.hpp"
#include "wavedisc/simulator.hpp"

using namespace wavedisc;

namespace {

SimConfig homogeneous(double length, std::size_t nt, double duration, double c, double eta, double f0) {
  return {{length, 128, duration, nt}, MediumSpec::uniform(128, c, eta), {f0}, {Dirichlet{}, Dirichlet{}}};
}

std::size_t col(const TermDescriptor& t) { return *term_index(t); }

}  // namespace

TEST(Terms, SixtyDistinctTerms) {
  const auto all = enumerate_terms();
  ASSERT_EQ(all.size(), 60u);
  std::set<std::string> names;
  for (const auto& t : all) names.insert(t.name());
  EXPECT_EQ(names.size(), 60u);
}

TEST(Terms, CanonicalPositions) {
  EXPECT_EQ(col(terms::u_xx), 2u);
  EXPECT_EQ(col(terms::u_t), 4u);
  EXPECT_EQ(col(terms::u), 15u);
  const auto all = enumerate_terms();
  for (std::size_t i = 0; i < all.size(); ++i) EXPECT_EQ(all[i].poly_power, static_cast<int>(i / 15));
}

TEST(Terms, ExactlyOneViscousTerm) {
  const auto all = enumerate_terms();
  EXPECT_EQ(std::count_if(all.begin(), all.end(), [](const TermDescriptor& t) { return t.is_viscous(); }), 1);
  EXPECT_TRUE(terms::u_t.is_viscous());
}

TEST(Terms, NamesRoundTrip) {
  for (const auto& t : enumerate_terms()) EXPECT_EQ(term_by_name(t.name()), t);
  EXPECT_EQ(term_by_name("u^2*u_x*u_t")->poly_power, 2);
  EXPECT_FALSE(term_by_name("u_tt").has_value());
}

TEST(Terms, EvaluateWithGradient) {
  const TermDescriptor t{2, {1, 0, 0, 1}};  // u^2 u_x u_t
  const std::array<double, kNumVars> q{2.0, 3.0, 5.0, 7.0, -1.0};
  std::array<double, kNumVars> g{};
  EXPECT_DOUBLE_EQ(t.evaluate(q, &g), -12.0);
  EXPECT_DOUBLE_EQ(g[kU], -12.0);
  EXPECT_DOUBLE_EQ(g[kUx], -4.0);
  EXPECT_DOUBLE_EQ(g[kUxx], 0.0);
  EXPECT_DOUBLE_EQ(g[kUt], 12.0);
}

TEST(BuildSystem, StaticRampDerivatives) {
  Wavefield w(6, 9);
  for (std::size_t t = 0; t < 6; ++t)
    for (std::size_t x = 0; x < 9; ++x) w(t, x) = 0.25 * static_cast<double>(x);
  const RegressionProblem p = build_system(w, 0.25, 0.1);
  const Eigen::MatrixXd raw = p.raw_theta();
  for (Eigen::Index r = 0; r < raw.rows(); ++r) {
    EXPECT_NEAR(raw(r, 1), 1.0, 1e-13);
    EXPECT_NEAR(raw(r, 2), 0.0, 1e-12);
    EXPECT_NEAR(raw(r, 3), 0.0, 1e-10);
    EXPECT_EQ(raw(r, 4), 0.0);
    EXPECT_EQ(p.target(r), 0.0);
  }
}

TEST(BuildSystem, CaseOneCoarseRowCount) {
  const Wavefield w = simulate(homogeneous(6.0, 420, 5.0, 2.5, 0.0, 0.5));
  const MeasurementSet m = downsample(w, 8, 12);
  const RegressionProblem p = build_system(m.values, 8.0 * 6.0 / 127.0, 12.0 * 5.0 / 419.0);
  EXPECT_EQ(p.cols(), 60u);
  EXPECT_EQ(p.rows(), 396u);
  EXPECT_TRUE(p.theta.allFinite());
}

TEST(BuildSystem, ZeroField) {
  const RegressionProblem p = build_system(Wavefield(10, 12), 0.1, 0.1);
  // the constant term "1" is the only column that does not vanish with u
  EXPECT_TRUE(p.theta.rightCols(59).isZero(0.0));
  EXPECT_TRUE(p.raw_theta().col(0).isOnes(0.0));
  EXPECT_TRUE(p.target.isZero(0.0));
}

TEST(BuildSystem, UnitColumnsAndExactUnscaling) {
  const Wavefield w = simulate(homogeneous(3.0, 242, 3.0, 1.2, -1.0, 1.0));
  const MeasurementSet m = downsample(w, 8, 12);
  const RegressionProblem p = build_system(m.values, 8.0 * 3.0 / 127.0, 12.0 * 3.0 / 241.0);
  for (Eigen::Index c = 0; c < p.theta.cols(); ++c)
    if (p.column_scales(c) > 0.0) {
      EXPECT_NEAR(p.theta.col(c).norm(), 1.0, 1e-12);
    }
  // raw u_xx column against the stencil applied directly
  const Eigen::MatrixXd raw = p.raw_theta();
  const double dx = 8.0 * 3.0 / 127.0;
  for (std::size_t r = 0; r < p.rows(); r += 17) {
    const auto [t, x] = p.row_map[r];
    const auto& v = m.values;
    const double uxx =
        (-v(t, x - 2) + 16.0 * v(t, x - 1) - 30.0 * v(t, x) + 16.0 * v(t, x + 1) - v(t, x + 2)) / (12.0 * dx * dx);
    EXPECT_NEAR(raw(static_cast<Eigen::Index>(r), 2), uxx, 1e-12 * std::max(1.0, std::abs(uxx)));
  }
}

TEST(BuildSystem, RowMapSorted) {
  const RegressionProblem p = build_system(downsample(simulate(homogeneous(6.0, 420, 5.0, 2.5, 0.0, 0.5)), 8, 12).values,
                                           1.0, 1.0);
  EXPECT_TRUE(std::is_sorted(p.row_map.begin(), p.row_map.end()));
  EXPECT_EQ(p.row_map.front(), (std::pair<std::size_t, std::size_t>{1, 2}));
}

TEST(BuildSystem, TooSmallLatticeThrows) {
  EXPECT_THROW(build_system(Wavefield(10, 4), 0.1, 0.1), ConfigError);
  EXPECT_THROW(build_system(Wavefield(2, 10), 0.1, 0.1), ConfigError);
}

TEST(BuildSystem, TrueEquationExplainsFineData) {
  for (const auto& [cfg, a, b] : {std::tuple{homogeneous(6.0, 420, 5.0, 2.5, 0.0, 0.5), 6.25, 0.0},
                                  std::tuple{homogeneous(3.0, 242, 3.0, 1.2, -1.0, 1.0), 1.44, -1.0}}) {
    const Wavefield w = simulate(cfg);
    const RegressionProblem p = build_system(w, cfg.grid.dx(), cfg.grid.dt());
    Eigen::VectorXd xi = Eigen::VectorXd::Zero(60);
    xi(2) = a;
    xi(4) = b;
    EXPECT_LT((p.target - p.raw_theta() * xi).norm() / p.target.norm(), 1e-2);
  }
}
