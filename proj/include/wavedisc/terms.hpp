#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace wavedisc {

// Variables a candidate term may depend on, in evaluation order.
enum Var : std::size_t { kU = 0, kUx = 1, kUxx = 2, kUxxx = 3, kUt = 4, kNumVars = 5 };

/// One candidate right-hand-side function u^p * (monomial in u_x, u_xx, u_xxx, u_t).
struct TermDescriptor {
  int poly_power = 0;
  // exponents of u_x, u_xx, u_xxx, u_t
  std::array<int, 4> factor{};

  bool is_viscous() const { return poly_power == 0 && factor == std::array<int, 4>{0, 0, 0, 1}; }
  int ut_degree() const { return factor[3]; }

  std::array<int, kNumVars> exponents() const {
    return {poly_power, factor[0], factor[1], factor[2], factor[3]};
  }

  /// Same term with the u_t factor removed (only meaningful when ut_degree() == 1).
  TermDescriptor without_ut() const {
    TermDescriptor d = *this;
    d.factor[3] = 0;
    return d;
  }

  std::string name() const {
    static const char* names[] = {"u_x", "u_xx", "u_xxx", "u_t"};
    std::string s;
    auto append = [&](const std::string& part) {
      if (!s.empty()) s += '*';
      s += part;
    };
    if (poly_power == 1) append("u");
    else if (poly_power > 1) append("u^" + std::to_string(poly_power));
    for (std::size_t j = 0; j < 4; ++j) {
      if (factor[j] == 1) append(names[j]);
      else if (factor[j] > 1) append(std::string(names[j]) + "^" + std::to_string(factor[j]));
    }
    return s.empty() ? "1" : s;
  }

  /// Value at q, and (when grad != nullptr) partial derivatives w.r.t. each variable.
  double evaluate(const std::array<double, kNumVars>& q, std::array<double, kNumVars>* grad = nullptr) const {
    const auto e = exponents();
    std::array<double, kNumVars> pw{};
    double value = 1.0;
    for (std::size_t j = 0; j < kNumVars; ++j) {
      pw[j] = 1.0;
      for (int k = 0; k < e[j]; ++k) pw[j] *= q[j];
      value *= pw[j];
    }
    if (grad) {
      for (std::size_t j = 0; j < kNumVars; ++j) {
        if (e[j] == 0) {
          (*grad)[j] = 0.0;
          continue;
        }
        double d = static_cast<double>(e[j]);
        for (int k = 0; k < e[j] - 1; ++k) d *= q[j];
        for (std::size_t m = 0; m < kNumVars; ++m)
          if (m != j) d *= pw[m];
        (*grad)[j] = d;
      }
    }
    return value;
  }

  friend bool operator==(const TermDescriptor&, const TermDescriptor&) = default;
};

/// The 15 derivative monomials of total degree <= 2, in canonical order.
inline const std::array<std::array<int, 4>, 15>& derivative_factors() {
  static const std::array<std::array<int, 4>, 15> f = {{
      {0, 0, 0, 0},  // 1
      {1, 0, 0, 0},  // u_x
      {0, 1, 0, 0},  // u_xx
      {0, 0, 1, 0},  // u_xxx
      {0, 0, 0, 1},  // u_t
      {2, 0, 0, 0},  // u_x^2
      {0, 2, 0, 0},  // u_xx^2
      {0, 0, 2, 0},  // u_xxx^2
      {0, 0, 0, 2},  // u_t^2
      {1, 1, 0, 0},  // u_x*u_xx
      {1, 0, 1, 0},  // u_x*u_xxx
      {1, 0, 0, 1},  // u_x*u_t
      {0, 1, 1, 0},  // u_xx*u_xxx
      {0, 1, 0, 1},  // u_xx*u_t
      {0, 0, 1, 1},  // u_xxx*u_t
  }};
  return f;
}

inline constexpr std::size_t kLibrarySize = 60;

/// Canonical 60-term library: powers {1, u, u^2, u^3} (major) times the 15
/// derivative monomials (minor).
inline std::vector<TermDescriptor> enumerate_terms() {
  std::vector<TermDescriptor> out;
  out.reserve(kLibrarySize);
  for (int p = 0; p <= 3; ++p)
    for (const auto& f : derivative_factors()) out.push_back({p, f});
  return out;
}

inline std::optional<std::size_t> term_index(const TermDescriptor& t) {
  const auto all = enumerate_terms();
  for (std::size_t i = 0; i < all.size(); ++i)
    if (all[i] == t) return i;
  return std::nullopt;
}

inline std::optional<TermDescriptor> term_by_name(const std::string& name) {
  for (const auto& t : enumerate_terms())
    if (t.name() == name) return t;
  return std::nullopt;
}

namespace terms {
inline const TermDescriptor u{1, {0, 0, 0, 0}};
inline const TermDescriptor u_x{0, {1, 0, 0, 0}};
inline const TermDescriptor u_xx{0, {0, 1, 0, 0}};
inline const TermDescriptor u_xxx{0, {0, 0, 1, 0}};
inline const TermDescriptor u_t{0, {0, 0, 0, 1}};
}  // namespace terms

}  // namespace wavedisc
