#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "wavedisc/core.hpp"
#include "wavedisc/recurrence.hpp"
#include "wavedisc/terms.hpp"

namespace wavedisc {

/// Forward problem for u_tt = c^2(x) u_xx + eta(x) u_t.
struct SimConfig {
  Grid1D grid;
  MediumSpec medium;
  SourceSpec source;
  BoundarySpec boundaries;

  void validate() const {
    grid.validate();
    boundaries.validate();
    if (medium.csq.size() != grid.nx || medium.eta.size() != grid.nx)
      throw ConfigError("sim: medium fields must have nx entries");
    if (!medium.eta.all_finite()) throw ConfigError("sim: eta must be finite");
    const double m = cfl_margin(grid, medium);
    if (m > 1.0) throw ConfigError("sim: CFL margin " + std::to_string(m) + " exceeds 1");
  }
};

/// Replaces unset MTF artificial velocities by the local wave speed at the
/// boundary node.
inline BoundarySpec resolve_boundaries(const SimConfig& cfg) {
  BoundarySpec out = cfg.boundaries;
  auto fix = [&](BoundaryCondition& bc, std::size_t node) {
    if (auto* m = std::get_if<Mtf>(&bc); m && !(m->velocity > 0.0))
      m->velocity = std::sqrt(cfg.medium.csq[node]);
  };
  fix(out.left, 0);
  fix(out.right, cfg.grid.nx - 1);
  return out;
}

inline std::vector<TermCoefficient> medium_terms(const MediumSpec& m) {
  return {{terms::u_xx, m.csq}, {terms::u_t, m.eta}};
}

inline Recurrence make_recurrence(const SimConfig& cfg) {
  return Recurrence(cfg.grid, resolve_boundaries(cfg), medium_terms(cfg.medium));
}

/// u at t = dt from u0 with zero initial velocity (half-step Taylor expansion).
inline Field bootstrap_first_step(const Field& u0, const SimConfig& cfg) {
  cfg.validate();
  const auto rec = make_recurrence(cfg);
  Wavefield w(2, cfg.grid.nx);
  std::copy(u0.values().begin(), u0.values().end(), w.row(0).begin());
  rec.constrain_initial(w.row(0));
  rec.advance(w, 1);
  const auto r = w.row(1);
  return Field(std::vector<double>(r.begin(), r.end()));
}

/// One leapfrog step. `u_prev2` is only read by a third-order transmitting
/// boundary; pass nullptr to treat it as quiescent.
inline Field step(const Field& u_prev, const Field& u_curr, const SimConfig& cfg, const Field* u_prev2 = nullptr) {
  const std::size_t nx = cfg.grid.nx;
  if (u_prev.size() != nx || u_curr.size() != nx) throw ConfigError("step: field length != nx");
  const auto rec = make_recurrence(cfg);
  Wavefield w(4, nx);
  auto put = [&](std::size_t t, const Field& f) { std::copy(f.values().begin(), f.values().end(), w.row(t).begin()); };
  if (u_prev2) put(0, *u_prev2);
  put(1, u_prev);
  put(2, u_curr);
  rec.advance(w, 3);
  const auto r = w.row(3);
  return Field(std::vector<double>(r.begin(), r.end()));
}

/// Transmitting-boundary value from the snapshots 1..N steps back, each given
/// with the boundary node first and inward neighbours following.
inline double mtf_boundary(const MtfGeometry& geometry, std::span<const std::vector<double>> history) {
  return geometry.value([&](std::size_t j) -> std::span<const double> {
    if (j > history.size()) return {};
    const auto& snap = history[j - 1];
    for (const auto& p : geometry.points)
      if (p.nodes[2] >= snap.size()) throw ConfigError("mtf: interpolation point outside the snapshot");
    return snap;
  });
}

inline Wavefield simulate_from(const SimConfig& cfg, const Field& u0) {
  cfg.validate();
  return make_recurrence(cfg).run(u0.span());
}

/// Row 0 is the Ricker profile, row 1 the bootstrap step, later rows leapfrog.
inline Wavefield simulate(const SimConfig& cfg) {
  return simulate_from(cfg, ricker_profile(cfg.grid, cfg.source));
}

}  // namespace wavedisc
