#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <string>
#include <vector>

#include "wavedisc/core.hpp"
#include "wavedisc/optim.hpp"
#include "wavedisc/recurrence.hpp"
#include "wavedisc/sampling.hpp"
#include "wavedisc/terms.hpp"

namespace wavedisc {

/// u_tt = sum_k Xi_k(x) S_k(u); the viscous factor is the coefficient of the
/// pure u_t term when that term is active.
struct DiscoveredEquation {
  std::vector<TermCoefficient> terms;

  std::size_t nx() const { return terms.empty() ? 0 : terms.front().coeff.size(); }

  const TermCoefficient* find(const TermDescriptor& d) const {
    for (const auto& t : terms)
      if (t.term == d) return &t;
    return nullptr;
  }
  TermCoefficient* find(const TermDescriptor& d) {
    for (auto& t : terms)
      if (t.term == d) return &t;
    return nullptr;
  }

  Field eta_field(std::size_t nx) const {
    const auto* v = find(terms::u_t);
    return v ? v->coeff : Field(nx, 0.0);
  }

  static DiscoveredEquation uniform(std::size_t nx, const std::vector<std::pair<TermDescriptor, double>>& coeffs) {
    DiscoveredEquation eq;
    for (const auto& [t, c] : coeffs) eq.terms.push_back({t, Field(nx, c)});
    return eq;
  }

  std::string to_string() const {
    std::string s = "u_tt =";
    if (terms.empty()) return s + " 0";
    bool first = true;
    for (const auto& t : terms) {
      const double c = t.coeff.mean();
      char buf[64];
      std::snprintf(buf, sizeof buf, "%s %.6g", first ? "" : (c < 0 ? " -" : " +"), first ? c : std::abs(c));
      s += buf;
      s += " " + t.term.name();
      first = false;
    }
    return s;
  }

  friend bool operator==(const DiscoveredEquation& a, const DiscoveredEquation& b) {
    if (a.terms.size() != b.terms.size()) return false;
    for (std::size_t i = 0; i < a.terms.size(); ++i)
      if (!(a.terms[i].term == b.terms[i].term) || !(a.terms[i].coeff == b.terms[i].coeff)) return false;
    return true;
  }
};

/// dt * sqrt(max u_xx coefficient) / dx, the stability margin implied by the
/// current equation (0 when u_xx is not active).
inline double implied_cfl_margin(const DiscoveredEquation& eq, const Grid1D& grid) {
  const auto* uxx = eq.find(terms::u_xx);
  if (!uxx) return 0.0;
  double m = 0.0;
  for (double v : uxx->coeff.values()) m = std::max(m, v);
  return m > 0.0 ? grid.dt() * std::sqrt(m) / grid.dx() : 0.0;
}

/// Unrolls the discovered equation from the known initial snapshot with the
/// same recurrence that generated the data.
inline Wavefield rollout(const DiscoveredEquation& eq, const Field& u0, const BoundarySpec& bc, const Grid1D& grid) {
  return Recurrence(grid, bc, eq.terms).run(u0.span());
}

inline void check_lattice(const Wavefield& pred, const MeasurementSet& m) {
  if (m.values.nt() != m.time_indices.size() || m.values.nx() != m.space_indices.size())
    throw std::invalid_argument("loss: measurement values do not match its index sets");
  for (std::size_t t : m.time_indices)
    if (t >= pred.nt()) throw std::invalid_argument("loss: time index outside prediction");
  for (std::size_t x : m.space_indices)
    if (x >= pred.nx()) throw std::invalid_argument("loss: space index outside prediction");
}

/// Mean squared misfit on the measurement lattice.
inline double loss(const Wavefield& pred, const MeasurementSet& m) {
  check_lattice(pred, m);
  double s = 0.0;
  for (std::size_t a = 0; a < m.time_indices.size(); ++a)
    for (std::size_t b = 0; b < m.space_indices.size(); ++b) {
      const double r = pred(m.time_indices[a], m.space_indices[b]) - m.values(a, b);
      s += r * r;
    }
  return s / static_cast<double>(m.count());
}

struct EquationGradient {
  double loss = 0.0;
  std::vector<Field> terms;  // dL/dXi_k(x), aligned with DiscoveredEquation::terms
  Wavefield prediction;
};

/// Exact derivative of loss(rollout(eq), m) w.r.t. every coefficient entry,
/// from one reverse sweep over the stored forward wavefield.
inline EquationGradient gradient(const DiscoveredEquation& eq, const Field& u0, const BoundarySpec& bc,
                                 const Grid1D& grid, const MeasurementSet& m) {
  const Recurrence rec(grid, bc, eq.terms);
  EquationGradient out;
  out.prediction = rec.run(u0.span());
  check_lattice(out.prediction, m);
  Wavefield adj(grid.nt, grid.nx);
  const double n = static_cast<double>(m.count());
  double s = 0.0;
  for (std::size_t a = 0; a < m.time_indices.size(); ++a)
    for (std::size_t b = 0; b < m.space_indices.size(); ++b) {
      const double r = out.prediction(m.time_indices[a], m.space_indices[b]) - m.values(a, b);
      s += r * r;
      adj(m.time_indices[a], m.space_indices[b]) += 2.0 * r / n;
    }
  out.loss = s / n;
  out.terms = rec.backward(out.prediction, adj);
  return out;
}

enum class CoefficientMode { scalar, field };

struct OptimizerConfig {
  optim::AdamOptions adam;
  optim::LbfgsOptions lbfgs;
  CoefficientMode mode = CoefficientMode::scalar;
  CoefficientMode eta_mode = CoefficientMode::scalar;
  double filter_threshold = 1e-3;
  int field_smoothing = 0;  // passes of the (1/6, 2/3, 1/6) reparameterisation in field mode
};

/// x = B z with B = tridiag(1/6, 2/3, 1/6), mirrored at both ends. B is
/// invertible (eigenvalues in [1/3, 1]), so every field stays reachable while
/// short-wavelength directions are damped in the optimiser's metric.
namespace smoothing {

inline void apply(std::span<double> v) {
  const std::size_t n = v.size();
  if (n < 2) return;
  std::vector<double> u(v.begin(), v.end());
  v[0] = (2.0 * u[0] + u[1]) / 3.0;
  v[n - 1] = (2.0 * u[n - 1] + u[n - 2]) / 3.0;
  for (std::size_t i = 1; i + 1 < n; ++i) v[i] = (u[i - 1] + 4.0 * u[i] + u[i + 1]) / 6.0;
}

inline void apply_transpose(std::span<double> v) {
  const std::size_t n = v.size();
  if (n < 2) return;
  std::vector<double> g(v.begin(), v.end());
  // column j of B: B(j-1, j), B(j, j), B(j+1, j)
  auto b = [n](std::size_t r, std::size_t c) -> double {
    if (r == c) return 2.0 / 3.0;
    if (r == 0 || r == n - 1) return 1.0 / 3.0;
    (void)c;
    return 1.0 / 6.0;
  };
  for (std::size_t j = 0; j < n; ++j) {
    double acc = b(j, j) * g[j];
    if (j > 0) acc += b(j - 1, j) * g[j - 1];
    if (j + 1 < n) acc += b(j + 1, j) * g[j + 1];
    v[j] = acc;
  }
}

/// Solves B z = v in place (Thomas algorithm; B is diagonally dominant).
inline void solve(std::span<double> v) {
  const std::size_t n = v.size();
  if (n < 2) return;
  std::vector<double> lo(n, 1.0 / 6.0), di(n, 2.0 / 3.0), up(n, 1.0 / 6.0);
  up[0] = 1.0 / 3.0;
  lo[n - 1] = 1.0 / 3.0;
  std::vector<double> c(n), d(n);
  c[0] = up[0] / di[0];
  d[0] = v[0] / di[0];
  for (std::size_t i = 1; i < n; ++i) {
    const double m = di[i] - lo[i] * c[i - 1];
    c[i] = i + 1 < n ? up[i] / m : 0.0;
    d[i] = (v[i] - lo[i] * d[i - 1]) / m;
  }
  v[n - 1] = d[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) v[i] = d[i] - c[i] * v[i + 1];
}

}  // namespace smoothing

/// Maps the optimiser's flat parameter vector onto coefficient fields. In field
/// mode, coefficients at boundary nodes that the recurrence never updates
/// (Dirichlet, MTF) cannot affect the model and are tied to their neighbour.
class ParameterLayout {
public:
  ParameterLayout(const DiscoveredEquation& eq, const BoundarySpec& bc, const OptimizerConfig& cfg)
      : nx_(eq.nx()), passes_(cfg.field_smoothing) {
    const bool tie_left = !std::holds_alternative<Neumann>(bc.left);
    const bool tie_right = !std::holds_alternative<Neumann>(bc.right);
    std::size_t offset = 0;
    for (const auto& t : eq.terms) {
      const CoefficientMode mode = t.term.is_viscous() ? cfg.eta_mode : cfg.mode;
      std::vector<std::size_t> map(nx_);
      if (mode == CoefficientMode::scalar) {
        std::fill(map.begin(), map.end(), offset);
        offset += 1;
      } else {
        const std::size_t lo = tie_left ? 1 : 0;
        const std::size_t hi = tie_right ? nx_ - 2 : nx_ - 1;
        for (std::size_t i = 0; i < nx_; ++i) map[i] = offset + (std::clamp(i, lo, hi) - lo);
        blocks_.emplace_back(offset, hi - lo + 1);
        offset += hi - lo + 1;
      }
      maps_.push_back(std::move(map));
    }
    size_ = offset;
  }

  std::size_t size() const { return size_; }

  optim::Vec pack(const DiscoveredEquation& eq) const {
    // mean over the nodes sharing a parameter, exact when they already agree
    optim::Vec x(size_, 0.0), dev(size_, 0.0);
    std::vector<int> count(size_, 0);
    for (std::size_t k = 0; k < maps_.size(); ++k)
      for (std::size_t i = 0; i < nx_; ++i) {
        const std::size_t j = maps_[k][i];
        if (count[j]++ == 0) x[j] = eq.terms[k].coeff[i];
        else dev[j] += eq.terms[k].coeff[i] - x[j];
      }
    for (std::size_t j = 0; j < size_; ++j) x[j] += dev[j] / count[j];
    for (const auto& [off, len] : blocks_)
      for (int p = 0; p < passes_; ++p) smoothing::solve(std::span<double>(x).subspan(off, len));
    return x;
  }

  void unpack(const optim::Vec& z, DiscoveredEquation& eq) const {
    const optim::Vec& x = smoothed(z);
    for (std::size_t k = 0; k < maps_.size(); ++k)
      for (std::size_t i = 0; i < nx_; ++i) eq.terms[k].coeff[i] = x[maps_[k][i]];
  }

  void reduce(const std::vector<Field>& grads, optim::Vec& g) const {
    std::fill(g.begin(), g.end(), 0.0);
    for (std::size_t k = 0; k < maps_.size(); ++k)
      for (std::size_t i = 0; i < nx_; ++i) g[maps_[k][i]] += grads[k][i];
    for (const auto& [off, len] : blocks_)
      for (int p = 0; p < passes_; ++p) smoothing::apply_transpose(std::span<double>(g).subspan(off, len));
  }

private:
  const optim::Vec& smoothed(const optim::Vec& z) const {
    if (passes_ == 0 || blocks_.empty()) return z;
    scratch_ = z;
    for (const auto& [off, len] : blocks_)
      for (int p = 0; p < passes_; ++p) smoothing::apply(std::span<double>(scratch_).subspan(off, len));
    return scratch_;
  }

  std::size_t nx_;
  int passes_ = 0;
  std::size_t size_ = 0;
  std::vector<std::vector<std::size_t>> maps_;
  std::vector<std::pair<std::size_t, std::size_t>> blocks_;  // (offset, length) of field-mode parameters
  mutable optim::Vec scratch_;
};

/// Drops every term whose coefficient field has mean |value| below threshold.
inline DiscoveredEquation filter_terms(const DiscoveredEquation& eq, double threshold = 1e-3) {
  DiscoveredEquation out;
  for (const auto& t : eq.terms)
    if (!(t.coeff.mean_abs() < threshold)) out.terms.push_back(t);
  return out;
}

struct TraceEntry {
  std::string phase;  // "adam" | "lbfgs"
  int iteration = 0;
  double loss = 0.0;
};

struct OptimizeResult {
  DiscoveredEquation equation;
  std::vector<TraceEntry> trace;
  double final_loss = 0.0;
  std::string lbfgs_stop;
  std::optional<std::string> failure;
};

/// Adam then L-BFGS on the coefficient fields, followed by term filtering.
inline OptimizeResult optimize(const DiscoveredEquation& eq, const Field& u0, const BoundarySpec& bc,
                               const Grid1D& grid, const MeasurementSet& m, const OptimizerConfig& cfg) {
  OptimizeResult res;
  res.equation = eq;
  if (cfg.adam.epochs <= 0 && cfg.lbfgs.max_iters <= 0) {
    res.final_loss = loss(rollout(eq, u0, bc, grid), m);
    return res;
  }
  if (eq.terms.empty()) {
    res.final_loss = loss(rollout(eq, u0, bc, grid), m);
    return res;
  }
  const ParameterLayout layout(eq, bc, cfg);
  DiscoveredEquation work = eq;
  // best evaluated point; Adam keeps moving at an optimum, so its last iterate is not returned
  optim::Vec best_x;
  double best_f = std::numeric_limits<double>::infinity();
  auto objective = [&](const optim::Vec& x, optim::Vec& g) -> double {
    layout.unpack(x, work);
    try {
      const EquationGradient eg = gradient(work, u0, bc, grid, m);
      layout.reduce(eg.terms, g);
      for (double v : g)
        if (!std::isfinite(v)) return std::numeric_limits<double>::infinity();
      if (eg.loss < best_f) {
        best_f = eg.loss;
        best_x = x;
      }
      return eg.loss;
    } catch (const InstabilityError&) {
      std::fill(g.begin(), g.end(), 0.0);
      return std::numeric_limits<double>::infinity();
    }
  };

  optim::Vec x = layout.pack(eq);
  if (cfg.adam.epochs > 0) {
    auto r = optim::adam(objective, x, cfg.adam,
                         [&](int it, double f) { res.trace.push_back({"adam", it, f}); });
    if (r.diverged) {
      res.failure = "adam: loss became non-finite at epoch " + std::to_string(r.iterations);
      return res;
    }
    x = std::move(r.x);
  }
  if (cfg.lbfgs.max_iters > 0) {
    auto r = optim::lbfgs(objective, x, cfg.lbfgs,
                          [&](int it, double f) { res.trace.push_back({"lbfgs", it, f}); });
    if (r.diverged) {
      res.failure = "lbfgs: loss became non-finite";
      return res;
    }
    res.lbfgs_stop = r.stop_reason;
    x = std::move(r.x);
  }
  if (!best_x.empty()) x = best_x;
  layout.unpack(x, work);
  res.equation = filter_terms(work, cfg.filter_threshold);
  res.final_loss = loss(rollout(res.equation, u0, bc, grid), m);
  return res;
}

}  // namespace wavedisc
