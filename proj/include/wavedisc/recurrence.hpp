#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "wavedisc/core.hpp"
#include "wavedisc/stencil.hpp"
#include "wavedisc/terms.hpp"

namespace wavedisc {

/// A candidate term together with its coefficient at every grid node.
struct TermCoefficient {
  TermDescriptor term;
  Field coeff;
};

/// Interpolation geometry of a multi-transmitting boundary:
///   u_b^{p+1} = sum_j (-1)^{j+1} C(N, j) u(j * c_a * dt, p + 1 - j)
/// where each off-grid value is a 3-point Lagrange interpolation of the
/// snapshot j steps back. Node offsets count inward from the boundary node.
struct MtfGeometry {
  struct Point {
    double weight = 0.0;  // (-1)^{j+1} C(N, j)
    std::array<std::size_t, 3> nodes{};
    std::array<double, 3> lagrange{};
  };
  std::vector<Point> points;  // points[j - 1] reads the snapshot j steps back

  static MtfGeometry make(int order, double velocity, double dt, double dx, std::size_t nx) {
    if (order < 1 || order > 3) throw ConfigError("mtf: order must be 1, 2 or 3");
    if (!(velocity > 0.0)) throw ConfigError("mtf: artificial velocity must be positive");
    MtfGeometry g;
    const double s = velocity * dt / dx;  // grid units per step
    double binom = 1.0;
    for (int j = 1; j <= order; ++j) {
      binom = binom * static_cast<double>(order - j + 1) / static_cast<double>(j);
      const double pos = static_cast<double>(j) * s;
      if (!(pos > 0.0) || pos >= static_cast<double>(nx - 1))
        throw ConfigError("mtf: interpolation point lies outside the grid");
      long base = std::lround(pos) - 1;
      base = std::max(0L, std::min(base, static_cast<long>(nx) - 3));
      Point p;
      p.weight = (j % 2 == 1 ? 1.0 : -1.0) * binom;
      for (std::size_t m = 0; m < 3; ++m) p.nodes[m] = static_cast<std::size_t>(base) + m;
      for (std::size_t m = 0; m < 3; ++m) {
        double l = 1.0;
        for (std::size_t k = 0; k < 3; ++k) {
          if (k == m) continue;
          l *= (pos - static_cast<double>(p.nodes[k])) /
               (static_cast<double>(p.nodes[m]) - static_cast<double>(p.nodes[k]));
        }
        p.lagrange[m] = l;
      }
      g.points.push_back(p);
    }
    return g;
  }

  std::size_t order() const { return points.size(); }

  /// history(j) returns the snapshot j steps back as seen from the boundary
  /// (index 0 = boundary node), or an empty span before t = 0.
  template <typename History>
  double value(History&& history) const {
    double acc = 0.0;
    for (std::size_t j = 1; j <= points.size(); ++j) {
      const auto snap = history(j);
      if (snap.empty()) continue;
      const Point& p = points[j - 1];
      double v = 0.0;
      for (std::size_t m = 0; m < 3; ++m) v += p.lagrange[m] * snap[p.nodes[m]];
      acc += p.weight * v;
    }
    return acc;
  }
};

/// Explicit two-level time stepping of
///   u_tt = sum_k a_k(x) * term_k(u) ,
/// discretised with a centred second difference in time. Terms that are linear
/// in u_t (including the pure viscous term) are treated with the centred first
/// difference (u^{t+1} - u^{t-1}) / (2 dt), which keeps the update explicit;
/// u_t^2 terms use the lagged difference (u^t - u^{t-1}) / dt.
///
/// Boundary nodes are zero (Dirichlet), stepped with mirrored ghosts (Neumann),
/// or extrapolated by the transmitting formula (MTF).
class Recurrence {
public:
  Recurrence(const Grid1D& grid, const BoundarySpec& bc, std::vector<TermCoefficient> terms)
      : grid_(grid), bc_(bc), terms_(std::move(terms)), space_(grid.nx, grid.dx(), bc) {
    grid.validate();
    bc.validate();
    for (const auto& t : terms_) {
      if (t.coeff.size() != grid.nx) throw ConfigError("recurrence: coefficient field length != nx");
      if (t.term.ut_degree() > 2) throw ConfigError("recurrence: unsupported u_t power");
    }
    for (Side s : {Side::left, Side::right}) {
      const auto& b = bc.at(s);
      if (const auto* m = std::get_if<Mtf>(&b)) {
        mtf_[s == Side::left ? 0 : 1] = MtfGeometry::make(m->order, m->velocity, grid.dt(), grid.dx(), grid.nx);
      }
    }
    for (auto& v : d_) v.resize(grid.nx);
  }

  const Grid1D& grid() const { return grid_; }
  const BoundarySpec& boundaries() const { return bc_; }
  const std::vector<TermCoefficient>& terms() const { return terms_; }

  /// Enforces boundary values that hold at every time level (Dirichlet zeros).
  void constrain_initial(std::span<double> u0) const {
    if (std::holds_alternative<Dirichlet>(bc_.left)) u0[0] = 0.0;
    if (std::holds_alternative<Dirichlet>(bc_.right)) u0[grid_.nx - 1] = 0.0;
  }

  /// Fills row t (t >= 1) of w from the rows before it.
  void advance(Wavefield& w, std::size_t t) const {
    const std::size_t nx = grid_.nx;
    const double dt = grid_.dt();
    const auto cur = w.row(t - 1);
    const bool first = (t == 1);
    std::span<const double> prev = first ? std::span<const double>{} : w.row(t - 2);
    auto out = w.row(t);
    space_.apply(cur, d_);
    const std::size_t lo = updates_node(Side::left) ? 0 : 1;
    const std::size_t hi = updates_node(Side::right) ? nx : nx - 1;
    for (std::size_t i = lo; i < hi; ++i) {
      const Local l = local(cur, prev, i, first);
      out[i] = first ? cur[i] + 0.5 * dt * dt * l.r
                     : (4.0 * cur[i] + 2.0 * dt * dt * l.r - (2.0 + l.e * dt) * prev[i]) / (2.0 - l.e * dt);
    }
    set_boundary(w, t, Side::left);
    set_boundary(w, t, Side::right);
    for (std::size_t i = 0; i < nx; ++i)
      if (!std::isfinite(out[i])) throw InstabilityError("time stepping produced a non-finite value", t);
  }

  Wavefield run(std::span<const double> u0) const {
    if (u0.size() != grid_.nx) throw ConfigError("recurrence: initial field length != nx");
    Wavefield w(grid_.nt, grid_.nx);
    auto row0 = w.row(0);
    std::copy(u0.begin(), u0.end(), row0.begin());
    constrain_initial(row0);
    for (double v : row0)
      if (!std::isfinite(v)) throw InstabilityError("initial field is not finite", 0);
    for (std::size_t t = 1; t < grid_.nt; ++t) advance(w, t);
    return w;
  }

  /// Reverse sweep. `adjoint` holds dL/du for every entry of the forward
  /// wavefield `w` on entry and is consumed in place. Returns dL/da_k at every
  /// node for every term (row 0 is treated as a fixed input).
  std::vector<Field> backward(const Wavefield& w, Wavefield& adjoint) const {
    const std::size_t nx = grid_.nx;
    const double dt = grid_.dt();
    std::vector<Field> grads(terms_.size(), Field(nx));
    std::array<std::vector<double>, 3> seed;
    for (auto& s : seed) s.assign(nx, 0.0);

    for (std::size_t t = grid_.nt - 1; t >= 1; --t) {
      const auto cur = w.row(t - 1);
      const bool first = (t == 1);
      std::span<const double> prev = first ? std::span<const double>{} : w.row(t - 2);
      const auto out = w.row(t);
      auto a_out = adjoint.row(t);
      auto a_cur = adjoint.row(t - 1);

      // boundary nodes written by the transmitting formula
      for (Side s : {Side::left, Side::right}) {
        const auto& geo = mtf_[s == Side::left ? 0 : 1];
        if (geo.order() == 0) continue;
        const std::size_t b = s == Side::left ? 0 : nx - 1;
        const double a = a_out[b];
        if (a == 0.0) continue;
        for (std::size_t j = 1; j <= geo.order() && j <= t; ++j) {
          auto a_row = adjoint.row(t - j);
          const auto& p = geo.points[j - 1];
          for (std::size_t m = 0; m < 3; ++m) {
            const std::size_t node = s == Side::left ? p.nodes[m] : nx - 1 - p.nodes[m];
            a_row[node] += a * p.weight * p.lagrange[m];
          }
        }
      }

      space_.apply(cur, d_);
      for (auto& s : seed) std::fill(s.begin(), s.end(), 0.0);
      const std::size_t lo = updates_node(Side::left) ? 0 : 1;
      const std::size_t hi = updates_node(Side::right) ? nx : nx - 1;
      std::span<double> a_prev = first ? std::span<double>{} : adjoint.row(t - 2);
      for (std::size_t i = lo; i < hi; ++i) {
        const double a = a_out[i];
        if (a == 0.0) continue;
        const auto q = state(cur, prev, i, first);
        double seed_r, seed_e = 0.0;
        if (first) {
          a_cur[i] += a;
          seed_r = a * 0.5 * dt * dt;
        } else {
          double e = 0.0;
          for (const auto& tc : terms_)
            if (tc.term.ut_degree() == 1) e += tc.coeff[i] * tc.term.without_ut().evaluate(q);
          const double denom = 2.0 - e * dt;
          a_cur[i] += a * 4.0 / denom;
          a_prev[i] += -a * (2.0 + e * dt) / denom;
          seed_r = a * 2.0 * dt * dt / denom;
          seed_e = a * dt * (out[i] - prev[i]) / denom;
        }
        std::array<double, kNumVars> dq{};
        for (std::size_t k = 0; k < terms_.size(); ++k) {
          const auto& tc = terms_[k];
          std::array<double, kNumVars> g{};
          if (tc.term.ut_degree() == 1) {
            if (first) continue;
            const double h = tc.term.without_ut().evaluate(q, &g);
            grads[k][i] += seed_e * h;
            const double c = seed_e * tc.coeff[i];
            for (std::size_t j = 0; j < kNumVars; ++j) dq[j] += c * g[j];
          } else {
            const double v = tc.term.evaluate(q, &g);
            grads[k][i] += seed_r * v;
            const double c = seed_r * tc.coeff[i];
            for (std::size_t j = 0; j < kNumVars; ++j) dq[j] += c * g[j];
          }
        }
        a_cur[i] += dq[kU];
        seed[0][i] = dq[kUx];
        seed[1][i] = dq[kUxx];
        seed[2][i] = dq[kUxxx];
        if (!first && dq[kUt] != 0.0) {
          a_cur[i] += dq[kUt] / dt;
          a_prev[i] -= dq[kUt] / dt;
        }
      }
      space_.apply_transpose(seed, a_cur);
      if (t == 1) break;
    }
    return grads;
  }

private:
  struct Local {
    double r = 0.0;  // explicit right-hand side
    double e = 0.0;  // effective damping multiplying the centred u_t
  };

  bool updates_node(Side s) const { return std::holds_alternative<Neumann>(bc_.at(s)); }

  // (u, u_x, u_xx, u_xxx, lagged u_t) at node i; d_ must hold derivatives of cur.
  std::array<double, kNumVars> state(std::span<const double> cur, std::span<const double> prev, std::size_t i,
                                     bool first) const {
    return {cur[i], d_[0][i], d_[1][i], d_[2][i], first ? 0.0 : (cur[i] - prev[i]) / grid_.dt()};
  }

  Local local(std::span<const double> cur, std::span<const double> prev, std::size_t i, bool first) const {
    const auto q = state(cur, prev, i, first);
    Local l;
    for (const auto& tc : terms_) {
      if (tc.term.ut_degree() == 1) {
        if (!first) l.e += tc.coeff[i] * tc.term.without_ut().evaluate(q);
      } else {
        l.r += tc.coeff[i] * tc.term.evaluate(q);
      }
    }
    return l;
  }

  void set_boundary(Wavefield& w, std::size_t t, Side s) const {
    const std::size_t nx = grid_.nx;
    const std::size_t b = s == Side::left ? 0 : nx - 1;
    const auto& bc = bc_.at(s);
    if (std::holds_alternative<Dirichlet>(bc)) {
      w(t, b) = 0.0;
    } else if (std::holds_alternative<Mtf>(bc)) {
      const auto& geo = mtf_[s == Side::left ? 0 : 1];
      std::vector<double> buf;
      w(t, b) = geo.value([&](std::size_t j) -> std::span<const double> {
        if (j > t) return {};
        const auto row = w.row(t - j);
        if (s == Side::left) return row;
        // mirror the row so that index 0 is the boundary node
        buf.assign(row.rbegin(), row.rend());
        return buf;
      });
    }
  }

  Grid1D grid_;
  BoundarySpec bc_;
  std::vector<TermCoefficient> terms_;
  SpaceOperator space_;
  std::array<MtfGeometry, 2> mtf_{};
  mutable std::array<std::vector<double>, 3> d_;
};

}  // namespace wavedisc
