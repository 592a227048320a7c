#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "wavedisc/core.hpp"

namespace wavedisc {

/// Lattice of fine-grid samples (the measurement operator) and their values.
struct MeasurementSet {
  std::vector<std::size_t> time_indices;
  std::vector<std::size_t> space_indices;
  Wavefield values;  // |time_indices| x |space_indices|
  double noise_level = 0.0;
  std::uint64_t seed = 0;

  std::size_t count() const { return values.size(); }
};

inline std::vector<std::size_t> lattice(std::size_t n, std::size_t stride) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < n; i += stride) idx.push_back(i);
  return idx;
}

/// Samples every stride-th node in space and time, starting at index 0.
inline MeasurementSet downsample(const Wavefield& w, std::size_t stride_x, std::size_t stride_t) {
  if (stride_x < 1 || stride_t < 1) throw ConfigError("downsample: strides must be >= 1");
  if (stride_x > w.nx() || stride_t > w.nt()) throw ConfigError("downsample: stride exceeds dimension");
  MeasurementSet m;
  m.time_indices = lattice(w.nt(), stride_t);
  m.space_indices = lattice(w.nx(), stride_x);
  m.values = Wavefield(m.time_indices.size(), m.space_indices.size());
  for (std::size_t a = 0; a < m.time_indices.size(); ++a)
    for (std::size_t b = 0; b < m.space_indices.size(); ++b)
      m.values(a, b) = w(m.time_indices[a], m.space_indices[b]);
  return m;
}

/// Population standard deviation of all entries.
inline double population_std(std::span<const double> v) {
  if (v.empty()) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size()));
}

/// values + level * std(values) * N(0, 1), drawn from a seeded mt19937_64.
inline MeasurementSet add_noise(const MeasurementSet& m, double level, std::uint64_t seed) {
  if (!(level >= 0.0) || !std::isfinite(level)) throw ConfigError("add_noise: level must be >= 0");
  MeasurementSet out = m;
  out.noise_level = level;
  out.seed = seed;
  if (level == 0.0) return out;
  const double sigma = population_std(m.values.data());
  std::mt19937_64 rng(seed);
  // Box-Muller keeps the draws identical across standard library implementations.
  auto uniform = [&] { return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53; };
  auto data = out.values.data();
  for (std::size_t i = 0; i < data.size(); i += 2) {
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double th = 2.0 * std::numbers::pi * uniform();
    data[i] += level * sigma * r * std::cos(th);
    if (i + 1 < data.size()) data[i + 1] += level * sigma * r * std::sin(th);
  }
  return out;
}

/// ||a - b|| / ||b|| over all entries.
inline double rel_l2(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("rel_l2: shape mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  if (!(den > 0.0)) throw std::invalid_argument("rel_l2: reference has zero norm");
  return std::sqrt(num / den);
}

inline double rel_l2(const Wavefield& a, const Wavefield& b) {
  if (a.nt() != b.nt() || a.nx() != b.nx()) throw std::invalid_argument("rel_l2: shape mismatch");
  return rel_l2(a.data(), b.data());
}

inline double rel_l2(const Field& a, const Field& b) { return rel_l2(a.span(), b.span()); }

}  // namespace wavedisc
