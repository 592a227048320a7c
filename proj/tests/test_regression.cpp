#include <gtest/gtest.h>

#include <random>

#include "wavedisc/regression.hpp"
#include "wavedisc/sampling.hpp"
#include "wavedisc/simulator.hpp"

using namespace wavedisc;

namespace {

constexpr std::size_t kColUxx = 2, kColUt = 4;

const Wavefield& case1_field() {
  static const Wavefield w = simulate(
      {{6.0, 128, 5.0, 420}, MediumSpec::uniform(128, 2.5, 0.0), {0.5}, {Dirichlet{}, Dirichlet{}}});
  return w;
}

// Case 1 fine field with the target replaced by 6.25 u_xx - 0.1 u_t
RegressionProblem planted() {
  const Wavefield& w = case1_field();
  RegressionProblem p = build_system(w, 6.0 / 127.0, 5.0 / 419.0);
  const Eigen::MatrixXd raw = p.raw_theta();
  p.target = 6.25 * raw.col(kColUxx) - 0.1 * raw.col(kColUt);
  return p;
}

RegressionProblem coarse_case1() {
  const MeasurementSet m = downsample(case1_field(), 8, 12);
  return build_system(m.values, 8.0 * 6.0 / 127.0, 12.0 * 5.0 / 419.0);
}

Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = g(rng);
  return m;
}

}  // namespace

TEST(Ridge, OrthonormalColumns) {
  const Eigen::MatrixXd q = random_matrix(30, 5, 3).householderQr().householderQ() * Eigen::MatrixXd::Identity(30, 5);
  const Eigen::VectorXd y = random_matrix(30, 1, 4).col(0);
  EXPECT_TRUE(ridge(q, y, 0.0).isApprox(q.transpose() * y, 1e-12));
}

TEST(Ridge, ExactRepresentation) {
  const Eigen::MatrixXd a = random_matrix(20, 4, 5);
  const Eigen::VectorXd xi = ridge(a, 3.0 * a.col(2), 0.0);
  Eigen::VectorXd expected = Eigen::VectorXd::Zero(4);
  expected(2) = 3.0;
  EXPECT_LT((xi - expected).norm(), 1e-12);
}

TEST(Ridge, ShrinksUnderLargePenalty) {
  const Eigen::MatrixXd a = random_matrix(20, 4, 6);
  const Eigen::VectorXd y = random_matrix(20, 1, 7).col(0);
  for (double lambda : {1e2, 1e4, 1e6}) EXPECT_LE(ridge(a, y, lambda).norm(), (a.transpose() * y).norm() / lambda);
}

TEST(Ridge, MatchesNormalEquations) {
  const Eigen::MatrixXd a = random_matrix(25, 6, 8);
  const Eigen::VectorXd y = random_matrix(25, 1, 9).col(0);
  const Eigen::MatrixXd n = a.transpose() * a + 0.3 * Eigen::MatrixXd::Identity(6, 6);
  EXPECT_TRUE(ridge(a, y, 0.3).isApprox(n.ldlt().solve(a.transpose() * y), 1e-10));
}

TEST(Ridge, RankDeficientWithoutPenaltyThrows) {
  Eigen::MatrixXd a = random_matrix(10, 3, 10);
  a.col(2) = a.col(0);
  EXPECT_THROW(ridge(a, a.col(1), 0.0), SingularSystemError);
  EXPECT_NO_THROW(ridge(a, a.col(1), 1e-3));
}

TEST(Stridge, RecoversPlantedCoefficients) {
  const RegressionProblem p = planted();
  const SparseSolution s = stridge(p, 1e-6, 0.01, {kColUt});
  EXPECT_EQ(s.support, (std::vector<std::size_t>{kColUxx, kColUt}));
  EXPECT_NEAR(s.xi(kColUxx), 6.25, 1e-6);
  EXPECT_NEAR(s.xi(kColUt), -0.1, 1e-6);
  for (Eigen::Index c = 0; c < 60; ++c)
    if (c != kColUxx && c != kColUt) {
      EXPECT_EQ(s.xi(c), 0.0);
    }
}

TEST(Stridge, ZeroTargetKeepsOnlyProtected) {
  RegressionProblem p = coarse_case1();
  p.target.setZero();
  const SparseSolution s = stridge(p, 1e-3, 0.1, {kColUt});
  EXPECT_EQ(s.support, (std::vector<std::size_t>{kColUt}));
  EXPECT_TRUE(s.xi.isZero(0.0));
}

TEST(Stridge, ProtectedColumnAlwaysPresent) {
  const RegressionProblem p = coarse_case1();
  for (double tol : default_tol_grid())
    for (double g : default_gamma_grid()) {
      const SparseSolution s = stridge(p, g, tol, {kColUt});
      EXPECT_TRUE(std::binary_search(s.support.begin(), s.support.end(), kColUt));
      for (Eigen::Index c = 0; c < 60; ++c)
        if (!std::binary_search(s.support.begin(), s.support.end(), static_cast<std::size_t>(c))) {
          EXPECT_EQ(s.xi(c), 0.0);
        }
    }
}

TEST(Stridge, SupportIsFixedPoint) {
  const Wavefield coarse = downsample(case1_field(), 8, 12).values;
  const double dx = 8.0 * 6.0 / 127.0, dt = 12.0 * 5.0 / 419.0;
  const RegressionProblem p = build_system(coarse, dx, dt);
  for (double tol : {0.01, 0.1}) {
    const SparseSolution s = stridge(p, 1e-5, tol, {kColUt});
    std::vector<TermDescriptor> sub;
    for (std::size_t c : s.support) sub.push_back(p.terms[c]);
    const RegressionProblem q = build_system(coarse, dx, dt, sub);
    const auto ut = static_cast<std::size_t>(std::find(sub.begin(), sub.end(), terms::u_t) - sub.begin());
    const SparseSolution again = stridge(q, 1e-5, tol, {ut});
    ASSERT_EQ(again.n_terms, s.n_terms);
    for (std::size_t k = 0; k < sub.size(); ++k)
      EXPECT_NEAR(again.xi(static_cast<Eigen::Index>(k)), s.xi(static_cast<Eigen::Index>(s.support[k])),
                  1e-9 * std::max(1.0, std::abs(s.xi(static_cast<Eigen::Index>(s.support[k])))));
  }
}

TEST(Stridge, LargerThresholdNeverGrowsSupport) {
  for (const RegressionProblem& p : {coarse_case1(), planted()}) {
    for (double g : default_gamma_grid()) {
      std::size_t last = std::numeric_limits<std::size_t>::max();
      for (double tol : default_tol_grid()) {
        const std::size_t k = stridge(p, g, tol, {kColUt}).n_terms;
        EXPECT_LE(k, last) << "gamma " << g << " tol " << tol;
        last = k;
      }
    }
  }
}

TEST(Stridge, DenormalisationIsConsistent) {
  const RegressionProblem p = coarse_case1();
  const SparseSolution s = stridge(p, 1e-4, 0.05, {kColUt});
  const Eigen::VectorXd scaled = s.xi.cwiseProduct(p.column_scales);
  EXPECT_TRUE((p.raw_theta() * s.xi).isApprox(p.theta * scaled, 1e-12));
}

TEST(Stridge, RejectsNonPositiveTolerance) {
  EXPECT_THROW(stridge(coarse_case1(), 1e-3, 0.0, {}), std::invalid_argument);
}

TEST(Pareto, SinglePairReturnedAsIs) {
  const ParetoChoice c = pareto_gamma(coarse_case1(), {0.37}, {0.21}, {kColUt});
  EXPECT_EQ(c.gamma, 0.37);
  EXPECT_EQ(c.tol, 0.21);
}

TEST(Pareto, ExactSystemPicksRecoveringPair) {
  const RegressionProblem p = planted();
  const ParetoChoice c = pareto_gamma(p, default_gamma_grid(), default_tol_grid(), {kColUt});
  const ParetoCell* chosen = nullptr;
  std::size_t min_k = 60;
  for (const auto& cell : c.cells) {
    if (cell.gamma == c.gamma && cell.tol == c.tol) chosen = &cell;
    if (cell.validation_error <= 1e-8) min_k = std::min(min_k, cell.n_terms);
  }
  ASSERT_NE(chosen, nullptr);
  EXPECT_LE(chosen->validation_error, 1e-8);
  EXPECT_EQ(chosen->n_terms, min_k);
  const SparseSolution s = stridge(p, c.gamma, c.tol, {kColUt});
  EXPECT_EQ(s.support, (std::vector<std::size_t>{kColUxx, kColUt}));
}

TEST(Pareto, PureNoiseSelectsAtMostOneTerm) {
  RegressionProblem p = coarse_case1();
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> g;
  for (Eigen::Index r = 0; r < p.target.size(); ++r) p.target(r) = g(rng);
  const ParetoChoice c = pareto_gamma(p, default_gamma_grid(), default_tol_grid(), {kColUt});
  EXPECT_LE(stridge(p, c.gamma, c.tol, {kColUt}).n_terms, 1u);
}

TEST(Pareto, ValidationFoldIsEveryFifthBlock) {
  EXPECT_FALSE(is_validation_row(39));
  EXPECT_TRUE(is_validation_row(40));
  EXPECT_TRUE(is_validation_row(49));
  EXPECT_FALSE(is_validation_row(50));
  const RegressionProblem p = coarse_case1();
  EXPECT_EQ(select_rows(p, true).rows() + select_rows(p, false).rows(), p.rows());
}
