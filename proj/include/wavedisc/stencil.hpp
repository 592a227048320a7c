#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "wavedisc/core.hpp"

namespace wavedisc {

enum class Axis { time, space };

/// Central-difference taps in per-unit-spacing form. The derivative at node i
/// is scale * sum_k taps[k] * u[i - radius + k] / spacing^derivative_order.
struct Kernel {
  std::vector<double> taps;
  double scale = 1.0;
  Axis axis = Axis::space;
  int derivative_order = 1;

  std::size_t radius() const { return taps.size() / 2; }
};

inline Kernel kernel(int derivative_order, Axis axis) {
  if (axis == Axis::time) {
    switch (derivative_order) {
      case 1: return {{-1.0, 0.0, 1.0}, 1.0 / 2.0, axis, 1};
      case 2: return {{1.0, -2.0, 1.0}, 1.0, axis, 2};
      default: break;
    }
  } else {
    switch (derivative_order) {
      case 1: return {{1.0, -8.0, 0.0, 8.0, -1.0}, 1.0 / 12.0, axis, 1};
      case 2: return {{-1.0, 16.0, -30.0, 16.0, -1.0}, 1.0 / 12.0, axis, 2};
      case 3: return {{-1.0, 2.0, 0.0, -2.0, 1.0}, 1.0 / 2.0, axis, 3};
      default: break;
    }
  }
  throw ConfigError("kernel: unsupported derivative order " + std::to_string(derivative_order) +
                    (axis == Axis::time ? " in time" : " in space"));
}

inline double ipow(double base, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= base;
  return r;
}

/// Kernel applied on a sliding window. Only [first_valid, end_valid) carries
/// complete receptive fields; entries outside are left at zero.
struct StencilResult {
  std::vector<double> values;
  std::size_t first_valid = 0;
  std::size_t end_valid = 0;

  bool valid(std::size_t i) const { return i >= first_valid && i < end_valid; }
};

inline StencilResult derivative(std::span<const double> slice, const Kernel& k, double spacing) {
  if (slice.size() < k.taps.size())
    throw std::invalid_argument("derivative: slice shorter than kernel");
  const std::size_t r = k.radius();
  const double factor = k.scale / ipow(spacing, k.derivative_order);
  StencilResult out{std::vector<double>(slice.size(), 0.0), r, slice.size() - r};
  for (std::size_t i = r; i + r < slice.size(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < k.taps.size(); ++j) acc += k.taps[j] * slice[i - r + j];
    out.values[i] = acc * factor;
  }
  return out;
}

// Ghost node g (1 = adjacent to the boundary, 2 = next) is a fixed linear
// combination of the first three nodes counted inward from the boundary.
struct GhostRule {
  std::array<std::array<double, 3>, 2> weights{};

  static GhostRule zero() { return {}; }
  static GhostRule mirror() { return {{{{0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}}}}; }
  // Quadratic extrapolation through the boundary node and its two neighbours.
  static GhostRule extrapolate() { return {{{{3.0, -3.0, 1.0}, {6.0, -8.0, 3.0}}}}; }
};

inline GhostRule ghost_rule(const BoundaryCondition& bc) {
  if (std::holds_alternative<Dirichlet>(bc)) return GhostRule::zero();
  if (std::holds_alternative<Neumann>(bc)) return GhostRule::mirror();
  return GhostRule::extrapolate();
}

/// Extends `field` by `width` ghost values on one side. Dirichlet fills zeros,
/// Neumann mirrors about the boundary node (u[-k] = u[k]).
inline std::vector<double> pad(std::span<const double> field, std::size_t width, Side side,
                               const BoundaryCondition& bc) {
  if (width > 2) throw std::invalid_argument("pad: width exceeds the stencil radius of 2");
  if (field.size() < width + 1) throw std::invalid_argument("pad: field too short for padding width");
  if (std::holds_alternative<Mtf>(bc) && field.size() < 3)
    throw std::invalid_argument("pad: extrapolation needs three nodes");
  const GhostRule rule = ghost_rule(bc);
  const std::size_t n = field.size();
  auto inward = [&](std::size_t k) {
    return side == Side::left ? field[k] : field[n - 1 - k];
  };
  auto ghost = [&](std::size_t g) {
    double v = 0.0;
    for (std::size_t k = 0; k < 3 && k < n; ++k) {
      const double w = rule.weights[g - 1][k];
      if (w != 0.0) v += w * inward(k);
    }
    return v;
  };
  std::vector<double> out;
  out.reserve(n + width);
  if (side == Side::left) {
    for (std::size_t g = width; g >= 1; --g) out.push_back(ghost(g));
    out.insert(out.end(), field.begin(), field.end());
  } else {
    out.insert(out.end(), field.begin(), field.end());
    for (std::size_t g = 1; g <= width; ++g) out.push_back(ghost(g));
  }
  return out;
}

/// Spatial derivatives u_x, u_xx, u_xxx at every node of one snapshot, with
/// ghost values supplied by the boundary rules on each side. Used by the
/// time-stepping recurrence and its adjoint.
class SpaceOperator {
public:
  SpaceOperator(std::size_t nx, double dx, const BoundarySpec& bc)
      : nx_(nx), left_(ghost_rule(bc.left)), right_(ghost_rule(bc.right)) {
    if (nx < 5) throw std::invalid_argument("SpaceOperator: need at least 5 nodes");
    for (int order = 1; order <= 3; ++order) {
      const Kernel k = kernel(order, Axis::space);
      const double f = k.scale / ipow(dx, order);
      for (std::size_t j = 0; j < 5; ++j) taps_[order - 1][j] = k.taps[j] * f;
    }
    padded_.resize(nx + 4);
  }

  std::size_t nx() const { return nx_; }

  /// Fills d[0..2] with u_x, u_xx, u_xxx (each length nx).
  void apply(std::span<const double> u, std::array<std::vector<double>, 3>& d) const {
    fill_padded(u);
    for (auto& v : d) v.resize(nx_);
    for (std::size_t i = 0; i < nx_; ++i) {
      const double* p = padded_.data() + i;
      // paired form: mirrored ghosts cancel exactly in odd derivatives
      const double s1 = p[3] + p[1], s2 = p[4] + p[0];
      const double a1 = p[3] - p[1], a2 = p[4] - p[0];
      d[0][i] = taps_[0][3] * a1 + taps_[0][4] * a2;
      d[1][i] = taps_[1][2] * p[2] + taps_[1][3] * s1 + taps_[1][4] * s2;
      d[2][i] = taps_[2][3] * a1 + taps_[2][4] * a2;
    }
  }

  /// Transpose of apply: accumulates sum_o D_o^T seed[o] into `out`.
  void apply_transpose(const std::array<std::vector<double>, 3>& seed, std::span<double> out) const {
    std::vector<double>& ap = padded_;
    std::fill(ap.begin(), ap.end(), 0.0);
    for (std::size_t i = 0; i < nx_; ++i) {
      for (std::size_t o = 0; o < 3; ++o) {
        const double s = seed[o][i];
        if (s == 0.0) continue;
        const auto& t = taps_[o];
        for (std::size_t j = 0; j < 5; ++j) ap[i + j] += t[j] * s;
      }
    }
    for (std::size_t i = 0; i < nx_; ++i) out[i] += ap[i + 2];
    // ghost g on the left sits at padded index 2 - g, on the right at nx + 1 + g
    for (std::size_t g = 1; g <= 2; ++g) {
      const double gl = ap[2 - g];
      const double gr = ap[nx_ + 1 + g];
      for (std::size_t k = 0; k < 3; ++k) {
        out[k] += left_.weights[g - 1][k] * gl;
        out[nx_ - 1 - k] += right_.weights[g - 1][k] * gr;
      }
    }
  }

private:
  void fill_padded(std::span<const double> u) const {
    for (std::size_t i = 0; i < nx_; ++i) padded_[i + 2] = u[i];
    for (std::size_t g = 1; g <= 2; ++g) {
      double l = 0.0, r = 0.0;
      for (std::size_t k = 0; k < 3; ++k) {
        l += left_.weights[g - 1][k] * u[k];
        r += right_.weights[g - 1][k] * u[nx_ - 1 - k];
      }
      padded_[2 - g] = l;
      padded_[nx_ + 1 + g] = r;
    }
  }

  std::size_t nx_;
  GhostRule left_;
  GhostRule right_;
  std::array<std::array<double, 5>, 3> taps_{};
  mutable std::vector<double> padded_;
};

}  // namespace wavedisc
