#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <utility>
#include <vector>

#include "wavedisc/core.hpp"
#include "wavedisc/stencil.hpp"
#include "wavedisc/terms.hpp"

namespace wavedisc {

/// Theta(U) with unit-norm columns and the u_tt target, one row per sample
/// whose space and time receptive fields are complete.
struct RegressionProblem {
  Eigen::MatrixXd theta;
  Eigen::VectorXd target;
  Eigen::VectorXd column_scales;  // raw column = theta column * scale
  std::vector<std::pair<std::size_t, std::size_t>> row_map;  // (t, x) into the input lattice
  std::vector<TermDescriptor> terms;

  std::size_t rows() const { return static_cast<std::size_t>(theta.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(theta.cols()); }

  Eigen::MatrixXd raw_theta() const { return theta * column_scales.asDiagonal(); }
};

/// Evaluates the candidate library on a uniform lattice of samples. `data` is
/// either a coarse measurement grid or a full fine wavefield; the spacings are
/// the effective lattice spacings.
inline RegressionProblem build_system(const Wavefield& data, double dx_eff, double dt_eff,
                                      const std::vector<TermDescriptor>& library = enumerate_terms()) {
  const std::size_t nt = data.nt(), nx = data.nx();
  if (nx < 5 || nt < 3) throw ConfigError("build_system: lattice too small for the stencils");
  if (!(dx_eff > 0.0) || !(dt_eff > 0.0)) throw ConfigError("build_system: spacings must be positive");

  const Kernel kx = kernel(1, Axis::space), kxx = kernel(2, Axis::space), kxxx = kernel(3, Axis::space);
  const Kernel kt = kernel(1, Axis::time), ktt = kernel(2, Axis::time);

  // space derivatives for every interior time row
  std::vector<StencilResult> dx1(nt), dx2(nt), dx3(nt);
  for (std::size_t t = 1; t + 1 < nt; ++t) {
    dx1[t] = derivative(data.row(t), kx, dx_eff);
    dx2[t] = derivative(data.row(t), kxx, dx_eff);
    dx3[t] = derivative(data.row(t), kxxx, dx_eff);
  }

  const std::size_t rows = (nt - 2) * (nx - 4);
  RegressionProblem p;
  p.terms = library;
  p.theta.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(library.size()));
  p.target.resize(static_cast<Eigen::Index>(rows));
  p.row_map.reserve(rows);

  std::vector<double> column(nt);
  Eigen::Index r = 0;
  for (std::size_t t = 1; t + 1 < nt; ++t) {
    for (std::size_t x = 2; x + 2 < nx; ++x, ++r) {
      for (std::size_t k = 0; k < 3; ++k) column[k] = data(t - 1 + k, x);
      const double ut = derivative(std::span<const double>(column.data(), 3), kt, dt_eff).values[1];
      const double utt = derivative(std::span<const double>(column.data(), 3), ktt, dt_eff).values[1];
      const std::array<double, kNumVars> q{data(t, x), dx1[t].values[x], dx2[t].values[x], dx3[t].values[x], ut};
      for (std::size_t k = 0; k < library.size(); ++k) p.theta(r, static_cast<Eigen::Index>(k)) = library[k].evaluate(q);
      p.target(r) = utt;
      p.row_map.emplace_back(t, x);
    }
  }

  p.column_scales.resize(p.theta.cols());
  for (Eigen::Index c = 0; c < p.theta.cols(); ++c) {
    const double n = p.theta.col(c).norm();
    if (!std::isfinite(n)) throw ConfigError("build_system: non-finite library column");
    p.column_scales(c) = n;
    if (n > 0.0) p.theta.col(c) /= n;
  }
  if (!p.target.allFinite()) throw ConfigError("build_system: non-finite target");
  return p;
}

}  // namespace wavedisc
