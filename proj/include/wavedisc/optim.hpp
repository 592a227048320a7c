#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

namespace wavedisc::optim {

using Vec = std::vector<double>;

inline double dot(const Vec& a, const Vec& b) { return std::inner_product(a.begin(), a.end(), b.begin(), 0.0); }
inline double max_abs(const Vec& a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

struct AdamOptions {
  double lr = 5e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int epochs = 0;
};

struct LbfgsOptions {
  int memory = 10;
  int max_iters = 100;
  double grad_tol = 1e-9;         // stop when max |g| falls below
  double rel_decrease_tol = 1e-12;  // ... or the loss stalls over `stall_window` iterations
  int stall_window = 5;
  double armijo_c1 = 1e-4;
  double contraction = 0.5;
  int max_backtracks = 50;
};

struct RunResult {
  Vec x;
  double f = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  std::string stop_reason;
  bool diverged = false;
};

/// Full-batch Adam. `fg(x, g)` returns the objective and writes its gradient;
/// `trace(iter, f)` observes the objective at every evaluated iterate.
template <typename Objective, typename Trace>
RunResult adam(Objective&& fg, Vec x, const AdamOptions& opt, Trace&& trace) {
  RunResult res;
  const std::size_t n = x.size();
  Vec g(n), m(n, 0.0), v(n, 0.0);
  double b1t = 1.0, b2t = 1.0;
  for (int it = 0; it < opt.epochs; ++it) {
    const double f = fg(x, g);
    trace(it, f);
    res.f = f;
    if (!std::isfinite(f)) {
      res.diverged = true;
      res.stop_reason = "non-finite loss";
      break;
    }
    b1t *= opt.beta1;
    b2t *= opt.beta2;
    for (std::size_t i = 0; i < n; ++i) {
      m[i] = opt.beta1 * m[i] + (1.0 - opt.beta1) * g[i];
      v[i] = opt.beta2 * v[i] + (1.0 - opt.beta2) * g[i] * g[i];
      const double mhat = m[i] / (1.0 - b1t);
      const double vhat = v[i] / (1.0 - b2t);
      x[i] -= opt.lr * mhat / (std::sqrt(vhat) + opt.eps);
    }
    res.iterations = it + 1;
  }
  if (res.stop_reason.empty()) res.stop_reason = "epochs";
  res.x = std::move(x);
  return res;
}

/// L-BFGS with two-loop recursion and backtracking Armijo line search.
/// Non-finite trial objectives are treated as failed trials and backtracked.
template <typename Objective, typename Trace>
RunResult lbfgs(Objective&& fg, Vec x, const LbfgsOptions& opt, Trace&& trace) {
  RunResult res;
  const std::size_t n = x.size();
  Vec g(n), gn(n), d(n), xn(n);
  std::deque<Vec> S, Y;
  std::deque<double> rho;
  std::vector<double> history;

  double f = fg(x, g);
  res.f = f;
  if (!std::isfinite(f)) {
    res.diverged = true;
    res.stop_reason = "non-finite loss";
    res.x = std::move(x);
    return res;
  }
  if (opt.max_iters <= 0) {
    res.stop_reason = "max iterations";
    res.x = std::move(x);
    return res;
  }
  trace(0, f);
  history.push_back(f);

  for (int it = 0; it < opt.max_iters; ++it) {
    if (max_abs(g) < opt.grad_tol) {
      res.stop_reason = "gradient tolerance";
      break;
    }
    // two-loop recursion: d = -H g
    Vec q = g;
    std::vector<double> alpha(S.size());
    for (std::size_t k = S.size(); k-- > 0;) {
      alpha[k] = rho[k] * dot(S[k], q);
      for (std::size_t i = 0; i < n; ++i) q[i] -= alpha[k] * Y[k][i];
    }
    double h0;
    if (S.empty()) {
      // first step moves the largest parameter component by 1e-3 of the parameter scale
      h0 = 1e-3 * std::max(1.0, max_abs(x)) / max_abs(g);
    } else {
      h0 = dot(S.back(), Y.back()) / dot(Y.back(), Y.back());
    }
    for (std::size_t i = 0; i < n; ++i) q[i] *= h0;
    for (std::size_t k = 0; k < S.size(); ++k) {
      const double beta = rho[k] * dot(Y[k], q);
      for (std::size_t i = 0; i < n; ++i) q[i] += S[k][i] * (alpha[k] - beta);
    }
    for (std::size_t i = 0; i < n; ++i) d[i] = -q[i];
    double slope = dot(g, d);
    if (!(slope < 0.0)) {
      // not a descent direction: restart from steepest descent
      S.clear();
      Y.clear();
      rho.clear();
      const double h = 1e-3 * std::max(1.0, max_abs(x)) / max_abs(g);
      for (std::size_t i = 0; i < n; ++i) d[i] = -h * g[i];
      slope = dot(g, d);
    }

    double step = 1.0, fn = 0.0;
    bool accepted = false;
    for (int bt = 0; bt < opt.max_backtracks; ++bt) {
      for (std::size_t i = 0; i < n; ++i) xn[i] = x[i] + step * d[i];
      fn = fg(xn, gn);
      if (std::isfinite(fn) && fn <= f + opt.armijo_c1 * step * slope) {
        accepted = true;
        break;
      }
      step *= opt.contraction;
    }
    if (!accepted) {
      res.stop_reason = "line search failed";
      break;
    }

    Vec s(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = xn[i] - x[i];
      y[i] = gn[i] - g[i];
    }
    const double sy = dot(s, y);
    if (sy > 1e-300 * std::max(1.0, dot(y, y))) {
      S.push_back(std::move(s));
      Y.push_back(std::move(y));
      rho.push_back(1.0 / sy);
      if (static_cast<int>(S.size()) > opt.memory) {
        S.pop_front();
        Y.pop_front();
        rho.pop_front();
      }
    }
    x.swap(xn);
    g.swap(gn);
    f = fn;
    res.f = f;
    res.iterations = it + 1;
    trace(it + 1, f);
    history.push_back(f);

    const std::size_t w = static_cast<std::size_t>(opt.stall_window);
    if (history.size() > w) {
      const double old = history[history.size() - 1 - w];
      const double denom = std::max(std::abs(old), std::numeric_limits<double>::min());
      if ((old - f) / denom < opt.rel_decrease_tol) {
        res.stop_reason = "insufficient decrease";
        break;
      }
    }
  }
  if (res.stop_reason.empty()) res.stop_reason = "max iterations";
  res.x = std::move(x);
  return res;
}

}  // namespace wavedisc::optim
