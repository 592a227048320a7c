#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "wavedisc/library.hpp"

namespace wavedisc {

class SingularSystemError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// argmin ||y - A xi||^2 + lambda ||xi||^2.
/// lambda > 0 is solved as the stacked least-squares problem [A; sqrt(lambda) I]
/// by Householder QR, which avoids squaring the condition number of A.
inline Eigen::VectorXd ridge(const Eigen::MatrixXd& theta, const Eigen::VectorXd& target, double lambda) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("ridge: lambda must be >= 0");
  if (theta.rows() != target.rows()) throw std::invalid_argument("ridge: row mismatch");
  const Eigen::Index n = theta.cols();
  if (n == 0) return Eigen::VectorXd(0);
  if (lambda == 0.0) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(theta);
    if (qr.rank() < n) throw SingularSystemError("ridge: rank-deficient system at lambda = 0");
    return qr.solve(target);
  }
  Eigen::MatrixXd stacked(theta.rows() + n, n);
  stacked.topRows(theta.rows()) = theta;
  stacked.bottomRows(n) = std::sqrt(lambda) * Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(theta.rows() + n);
  rhs.head(theta.rows()) = target;
  return stacked.householderQr().solve(rhs);
}

/// Minimum-norm least squares; used for the unregularised refit on a support.
inline Eigen::VectorXd least_squares(const Eigen::MatrixXd& theta, const Eigen::VectorXd& target) {
  if (theta.cols() == 0) return Eigen::VectorXd(0);
  return theta.completeOrthogonalDecomposition().solve(target);
}

struct SparseSolution {
  Eigen::VectorXd xi;                // physical scale, zero off support
  std::vector<std::size_t> support;  // sorted column indices
  double train_error = 0.0;          // ||target - Theta xi|| / ||target||
  std::size_t n_terms = 0;
  double gamma = 0.0;
  double tol = 0.0;
};

struct StridgeOptions {
  int max_iterations = 25;
};

namespace detail {

inline Eigen::MatrixXd columns(const Eigen::MatrixXd& m, const std::vector<std::size_t>& idx) {
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = m.col(static_cast<Eigen::Index>(idx[k]));
  return out;
}

inline bool contains(const std::vector<std::size_t>& v, std::size_t i) {
  return std::find(v.begin(), v.end(), i) != v.end();
}

}  // namespace detail

/// Sequential threshold ridge regression on a column-normalised problem.
/// Coefficients are compared against `tol` in units of ||target||, i.e. a term
/// is dropped when its largest possible contribution is below tol * ||target||.
/// Protected columns are never thresholded.
inline SparseSolution stridge(const RegressionProblem& problem, double gamma, double tol,
                              const std::vector<std::size_t>& protected_cols, StridgeOptions opts = {}) {
  if (!(tol > 0.0)) throw std::invalid_argument("stridge: tol must be positive");
  if (!(gamma >= 0.0)) throw std::invalid_argument("stridge: gamma must be >= 0");
  const Eigen::Index ncols = problem.theta.cols();
  SparseSolution sol;
  sol.gamma = gamma;
  sol.tol = tol;
  sol.xi = Eigen::VectorXd::Zero(ncols);

  const double ynorm = problem.target.norm();
  std::vector<std::size_t> active;
  for (Eigen::Index c = 0; c < ncols; ++c)
    if (problem.column_scales(c) > 0.0 || detail::contains(protected_cols, static_cast<std::size_t>(c)))
      active.push_back(static_cast<std::size_t>(c));

  if (!(ynorm > 0.0)) {
    for (std::size_t c : protected_cols)
      if (static_cast<Eigen::Index>(c) < ncols) sol.support.push_back(c);
    std::sort(sol.support.begin(), sol.support.end());
    sol.n_terms = sol.support.size();
    return sol;
  }
  const Eigen::VectorXd y = problem.target / ynorm;

  auto solve = [&](const std::vector<std::size_t>& cols) -> Eigen::VectorXd {
    const Eigen::MatrixXd a = detail::columns(problem.theta, cols);
    if (gamma > 0.0) return ridge(a, y, gamma);
    return least_squares(a, y);
  };

  Eigen::VectorXd coef = solve(active);
  for (int it = 0; it < opts.max_iterations; ++it) {
    std::vector<std::size_t> kept;
    for (std::size_t k = 0; k < active.size(); ++k)
      if (std::abs(coef(static_cast<Eigen::Index>(k))) >= tol || detail::contains(protected_cols, active[k]))
        kept.push_back(active[k]);
    if (kept.size() == active.size()) break;
    active = std::move(kept);
    if (active.empty()) break;
    coef = solve(active);
  }

  coef = least_squares(detail::columns(problem.theta, active), y);
  for (std::size_t k = 0; k < active.size(); ++k) {
    const auto c = static_cast<Eigen::Index>(active[k]);
    const double s = problem.column_scales(c);
    sol.xi(c) = s > 0.0 ? coef(static_cast<Eigen::Index>(k)) * ynorm / s : 0.0;
  }
  sol.support = active;
  std::sort(sol.support.begin(), sol.support.end());
  sol.n_terms = sol.support.size();
  sol.train_error = (problem.target - problem.raw_theta() * sol.xi).norm() / ynorm;
  return sol;
}

/// Rows belonging to the validation fold: every fifth block of ten consecutive rows.
inline bool is_validation_row(std::size_t r) { return (r / 10) % 5 == 4; }

inline RegressionProblem select_rows(const RegressionProblem& p, bool validation) {
  std::vector<Eigen::Index> idx;
  for (std::size_t r = 0; r < p.rows(); ++r)
    if (is_validation_row(r) == validation) idx.push_back(static_cast<Eigen::Index>(r));
  RegressionProblem out;
  out.terms = p.terms;
  out.column_scales = p.column_scales;
  out.theta.resize(static_cast<Eigen::Index>(idx.size()), p.theta.cols());
  out.target.resize(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    out.theta.row(static_cast<Eigen::Index>(k)) = p.theta.row(idx[k]);
    out.target(static_cast<Eigen::Index>(k)) = p.target(idx[k]);
    out.row_map.push_back(p.row_map[static_cast<std::size_t>(idx[k])]);
  }
  return out;
}

struct ParetoCell {
  double gamma = 0.0;
  double tol = 0.0;
  double validation_error = 0.0;
  std::size_t n_terms = 0;
  double score = 0.0;
};

struct ParetoChoice {
  double gamma = 0.0;
  double tol = 0.0;
  std::vector<ParetoCell> cells;
};

inline std::vector<double> default_gamma_grid() { return {1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0}; }
inline std::vector<double> default_tol_grid() { return {0.01, 0.05, 0.1, 0.5, 1.0}; }

/// Grid search over (gamma, tol) on an 80/20 row split. The selected pair
/// minimises max(validation_error, floor) * (1 + complexity_weight * n_terms);
/// ties go to fewer terms, then to the larger gamma.
inline ParetoChoice pareto_gamma(const RegressionProblem& problem, const std::vector<double>& gamma_grid,
                                 const std::vector<double>& tol_grid, const std::vector<std::size_t>& protected_cols,
                                 double complexity_weight = 0.05, double floor = 0.0) {
  if (gamma_grid.empty() || tol_grid.empty()) throw std::invalid_argument("pareto_gamma: empty grid");
  ParetoChoice choice;
  if (gamma_grid.size() == 1 && tol_grid.size() == 1) {
    choice.gamma = gamma_grid[0];
    choice.tol = tol_grid[0];
    return choice;
  }
  const RegressionProblem train = select_rows(problem, false);
  const RegressionProblem valid = select_rows(problem, true);
  const Eigen::MatrixXd valid_raw = valid.raw_theta();
  const double vnorm = valid.target.norm();

  double best = std::numeric_limits<double>::infinity();
  std::size_t best_k = std::numeric_limits<std::size_t>::max();
  for (double g : gamma_grid) {
    for (double tol : tol_grid) {
      const SparseSolution s = stridge(train, g, tol, protected_cols);
      const double resid = (valid.target - valid_raw * s.xi).norm();
      ParetoCell cell{g, tol, vnorm > 0.0 ? resid / vnorm : resid, s.n_terms, 0.0};
      cell.score = std::max(cell.validation_error, floor) * (1.0 + complexity_weight * static_cast<double>(cell.n_terms));
      choice.cells.push_back(cell);
      const bool tie = cell.score == best;
      if (cell.score < best || (tie && cell.n_terms < best_k) || (tie && cell.n_terms == best_k && g > choice.gamma)) {
        best = cell.score;
        best_k = cell.n_terms;
        choice.gamma = g;
        choice.tol = tol;
      }
    }
  }
  return choice;
}

}  // namespace wavedisc
