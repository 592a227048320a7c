#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace wavedisc {

class ConfigError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// Raised when a time-stepping recurrence produces a non-finite value.
class InstabilityError : public std::runtime_error {
public:
  InstabilityError(const std::string& what, std::size_t time_index)
      : std::runtime_error(what + " (time index " + std::to_string(time_index) + ")"),
        time_index_(time_index) {}
  std::size_t time_index() const { return time_index_; }

private:
  std::size_t time_index_;
};

/// Uniform space-time grid with both endpoints included.
struct Grid1D {
  double length = 1.0;
  std::size_t nx = 5;
  double duration = 1.0;
  std::size_t nt = 3;

  double dx() const { return length / static_cast<double>(nx - 1); }
  double dt() const { return duration / static_cast<double>(nt - 1); }
  double x(std::size_t i) const { return static_cast<double>(i) * dx(); }

  void validate() const {
    if (nx < 5) throw ConfigError("grid: nx must be >= 5");
    if (nt < 3) throw ConfigError("grid: nt must be >= 3");
    if (!(length > 0.0) || !std::isfinite(length)) throw ConfigError("grid: length must be positive");
    if (!(duration > 0.0) || !std::isfinite(duration)) throw ConfigError("grid: duration must be positive");
  }
};

/// Per-node scalar values on a Grid1D.
class Field {
public:
  Field() = default;
  explicit Field(std::size_t n, double value = 0.0) : values_(n, value) {}
  explicit Field(std::vector<double> values) : values_(std::move(values)) {}

  std::size_t size() const { return values_.size(); }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<double> span() { return values_; }
  std::span<const double> span() const { return values_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  bool all_finite() const {
    for (double v : values_)
      if (!std::isfinite(v)) return false;
    return true;
  }
  double mean() const {
    double s = 0.0;
    for (double v : values_) s += v;
    return values_.empty() ? 0.0 : s / static_cast<double>(values_.size());
  }
  double mean_abs() const {
    double s = 0.0;
    for (double v : values_) s += std::abs(v);
    return values_.empty() ? 0.0 : s / static_cast<double>(values_.size());
  }

  friend bool operator==(const Field&, const Field&) = default;

private:
  std::vector<double> values_;
};

/// Dense nt x nx displacement history, row = time snapshot.
class Wavefield {
public:
  Wavefield() = default;
  Wavefield(std::size_t nt, std::size_t nx, double value = 0.0)
      : nt_(nt), nx_(nx), data_(nt * nx, value) {}

  std::size_t nt() const { return nt_; }
  std::size_t nx() const { return nx_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t t, std::size_t x) { return data_[t * nx_ + x]; }
  double operator()(std::size_t t, std::size_t x) const { return data_[t * nx_ + x]; }

  std::span<double> row(std::size_t t) { return {data_.data() + t * nx_, nx_}; }
  std::span<const double> row(std::size_t t) const { return {data_.data() + t * nx_, nx_}; }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  bool all_finite() const {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  friend bool operator==(const Wavefield&, const Wavefield&) = default;

private:
  std::size_t nt_ = 0;
  std::size_t nx_ = 0;
  std::vector<double> data_;
};

struct SourceSpec {
  double f0 = 1.0;  // central frequency
};

struct Dirichlet {
  friend bool operator==(const Dirichlet&, const Dirichlet&) = default;
};
struct Neumann {
  friend bool operator==(const Neumann&, const Neumann&) = default;
};
/// Multi-transmitting absorbing boundary. A non-positive velocity means
/// "use the local wave speed at the boundary node".
struct Mtf {
  int order = 2;
  double velocity = 0.0;
  friend bool operator==(const Mtf&, const Mtf&) = default;
};

using BoundaryCondition = std::variant<Dirichlet, Neumann, Mtf>;

enum class Side { left, right };

struct BoundarySpec {
  BoundaryCondition left = Dirichlet{};
  BoundaryCondition right = Dirichlet{};

  const BoundaryCondition& at(Side s) const { return s == Side::left ? left : right; }

  void validate() const {
    for (const auto* bc : {&left, &right}) {
      if (const auto* m = std::get_if<Mtf>(bc)) {
        if (m->order < 1 || m->order > 3) throw ConfigError("boundary: MTF order must be 1, 2 or 3");
        if (!std::isfinite(m->velocity)) throw ConfigError("boundary: MTF velocity must be finite");
      }
    }
  }
};

inline std::string boundary_name(const BoundaryCondition& bc) {
  if (std::holds_alternative<Dirichlet>(bc)) return "dirichlet";
  if (std::holds_alternative<Neumann>(bc)) return "neumann";
  return "mtf";
}

/// c^2 and viscous factor per node.
struct MediumSpec {
  Field csq;
  Field eta;

  static MediumSpec uniform(std::size_t nx, double c, double eta) {
    return {Field(nx, c * c), Field(nx, eta)};
  }

  // c varies linearly from c_left at x = 0 to c_right at x = L.
  static MediumSpec linear_velocity(const Grid1D& g, double c_left, double c_right, double eta) {
    MediumSpec m{Field(g.nx), Field(g.nx, eta)};
    for (std::size_t i = 0; i < g.nx; ++i) {
      const double s = static_cast<double>(i) / static_cast<double>(g.nx - 1);
      const double c = c_left + (c_right - c_left) * s;
      m.csq[i] = c * c;
    }
    return m;
  }
};

/// Ricker wavelet laid out in space, centred at x = 1/f0.
inline Field ricker_profile(const Grid1D& grid, const SourceSpec& src) {
  grid.validate();
  if (!(src.f0 > 0.0) || !std::isfinite(src.f0)) throw ConfigError("source: f0 must be positive");
  Field r(grid.nx);
  const double shift = 1.0 / src.f0;
  for (std::size_t i = 0; i < grid.nx; ++i) {
    const double a = std::numbers::pi * src.f0 * (grid.x(i) - shift);
    r[i] = (2.0 * a * a - 1.0) * std::exp(-a * a);
  }
  return r;
}

/// dt * max(c) / dx. Values above 1 indicate an unstable explicit scheme.
inline double cfl_margin(const Grid1D& grid, const MediumSpec& medium) {
  double cmax = 0.0;
  for (double v : medium.csq.values()) {
    if (!(v > 0.0)) throw ConfigError("medium: csq must be positive everywhere");
    cmax = std::max(cmax, std::sqrt(v));
  }
  if (medium.csq.size() == 0) throw ConfigError("medium: empty csq field");
  return grid.dt() * cmax / grid.dx();
}

}  // namespace wavedisc
