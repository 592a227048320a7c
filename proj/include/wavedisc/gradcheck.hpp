#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "wavedisc/embedding.hpp"

namespace wavedisc {

/// A small random inversion problem used to compare adjoint gradients with
/// central finite differences of the forward rollout.
struct GradcheckInstance {
  Grid1D grid;
  BoundarySpec bc;
  DiscoveredEquation equation;
  Field u0;
  MeasurementSet measurements;
};

namespace detail {

template <typename Rng>
GradcheckInstance draw_instance(Rng& rng) {
  auto uniform = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
  auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };

  GradcheckInstance g;
  g.grid.nx = 8 + pick(9);   // 8..16
  g.grid.nt = 8 + pick(13);  // 8..20
  g.grid.length = 1.0;
  const double dx = g.grid.dx();
  const double dt = 0.4 * dx / std::sqrt(2.0);
  g.grid.duration = dt * static_cast<double>(g.grid.nt - 1);

  auto random_bc = [&]() -> BoundaryCondition {
    switch (pick(3)) {
      case 0: return Dirichlet{};
      case 1: return Neumann{};
      default: return Mtf{1 + static_cast<int>(pick(3)), uniform(0.3, 0.9) * dx / dt};
    }
  };
  g.bc.left = random_bc();
  g.bc.right = random_bc();

  // u_xx plus a few lower-order terms whose size keeps a short unroll tame
  static const std::vector<TermDescriptor> extras = {
      terms::u, terms::u_x, terms::u_t, TermDescriptor{1, {1, 0, 0, 0}}, TermDescriptor{1, {0, 1, 0, 0}},
      TermDescriptor{2, {0, 0, 0, 0}}, TermDescriptor{0, {0, 0, 0, 2}}, TermDescriptor{0, {1, 0, 0, 1}},
      TermDescriptor{1, {0, 0, 0, 1}}, TermDescriptor{3, {0, 0, 0, 0}}};
  std::vector<TermDescriptor> chosen{terms::u_xx};
  const std::size_t n_extra = 1 + pick(3);
  while (chosen.size() < 1 + n_extra) {
    const TermDescriptor& t = extras[pick(extras.size())];
    if (std::find(chosen.begin(), chosen.end(), t) == chosen.end()) chosen.push_back(t);
  }
  for (const auto& t : chosen) {
    Field c(g.grid.nx);
    for (std::size_t i = 0; i < g.grid.nx; ++i) c[i] = uniform(0.5, 2.0);
    g.equation.terms.push_back({t, c});
  }
  // u_xx coefficient scaled into the stable range of the explicit step
  for (std::size_t i = 0; i < g.grid.nx; ++i) g.equation.terms.front().coeff[i] *= 0.5;

  g.u0 = Field(g.grid.nx);
  const double k1 = uniform(1.0, 3.0), k2 = uniform(0.5, 2.0), ph = uniform(0.0, 6.283185307179586);
  const double amp = uniform(0.2, 0.6);
  for (std::size_t i = 0; i < g.grid.nx; ++i) {
    const double x = g.grid.x(i);
    g.u0[i] = amp * (std::sin(3.141592653589793 * k1 * x + ph) + 0.5 * std::cos(3.141592653589793 * k2 * x));
  }

  const Wavefield pred = rollout(g.equation, g.u0, g.bc, g.grid);
  g.measurements.time_indices = lattice(g.grid.nt, 1 + pick(3));
  g.measurements.space_indices = lattice(g.grid.nx, 1 + pick(3));
  g.measurements.values = Wavefield(g.measurements.time_indices.size(), g.measurements.space_indices.size());
  for (std::size_t a = 0; a < g.measurements.time_indices.size(); ++a)
    for (std::size_t b = 0; b < g.measurements.space_indices.size(); ++b)
      g.measurements.values(a, b) =
          pred(g.measurements.time_indices[a], g.measurements.space_indices[b]) + uniform(-0.2, 0.2);
  return g;
}

inline double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace detail

/// Draws instances from `seed` until the rollout stays within 5x the initial
/// amplitude; explosive unrolls make finite differences meaningless.
inline GradcheckInstance random_instance(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (;;) {
    GradcheckInstance g = detail::draw_instance(rng);
    try {
      const Wavefield w = rollout(g.equation, g.u0, g.bc, g.grid);
      const double peak = detail::max_abs(w.data());
      if (w.all_finite() && peak <= 5.0 * detail::max_abs(g.u0.span())) return g;
    } catch (const InstabilityError&) {
    }
  }
}

struct GradcheckResult {
  std::uint64_t seed = 0;
  std::size_t nx = 0, nt = 0, parameters = 0;
  double max_rel_error = 0.0;
  std::string worst;  // "term[node]"
};

/// Relative error per entry is |a - f| / max(|f|, floor * max_j |f_j|); central
/// differences at h = 1e-6 carry roughly 1e-11 absolute rounding noise, so
/// entries far below the gradient scale are compared on that scale.
inline GradcheckResult check_gradient(const GradcheckInstance& g, double rel_step = 1e-6, double floor = 1e-2) {
  GradcheckResult r;
  r.nx = g.grid.nx;
  r.nt = g.grid.nt;
  const EquationGradient eg = gradient(g.equation, g.u0, g.bc, g.grid, g.measurements);

  std::vector<std::vector<double>> fd(g.equation.terms.size(), std::vector<double>(g.grid.nx));
  double scale = 0.0;
  DiscoveredEquation probe = g.equation;
  for (std::size_t k = 0; k < probe.terms.size(); ++k)
    for (std::size_t i = 0; i < g.grid.nx; ++i) {
      const double c = g.equation.terms[k].coeff[i];
      const double h = rel_step * std::max(std::abs(c), 1e-3);
      probe.terms[k].coeff[i] = c + h;
      const double fp = loss(rollout(probe, g.u0, g.bc, g.grid), g.measurements);
      probe.terms[k].coeff[i] = c - h;
      const double fm = loss(rollout(probe, g.u0, g.bc, g.grid), g.measurements);
      probe.terms[k].coeff[i] = c;
      fd[k][i] = (fp - fm) / (2.0 * h);
      scale = std::max(scale, std::abs(fd[k][i]));
      ++r.parameters;
    }
  for (std::size_t k = 0; k < fd.size(); ++k)
    for (std::size_t i = 0; i < g.grid.nx; ++i) {
      const double denom = std::max(std::abs(fd[k][i]), floor * scale);
      const double e = denom > 0.0 ? std::abs(eg.terms[k][i] - fd[k][i]) / denom : 0.0;
      if (e >= r.max_rel_error) {
        r.max_rel_error = e;
        r.worst = g.equation.terms[k].term.name() + "[" + std::to_string(i) + "]";
      }
    }
  return r;
}

}  // namespace wavedisc
