#include <gtest/gtest.h>

#include <cmath>

#include "wavedisc/sampling.hpp"
#include "wavedisc/simulator.hpp"

using namespace wavedisc;

namespace {

Wavefield ramp(std::size_t nt, std::size_t nx) {
  Wavefield w(nt, nx);
  for (std::size_t t = 0; t < nt; ++t)
    for (std::size_t x = 0; x < nx; ++x) w(t, x) = std::sin(0.01 * static_cast<double>(t * nx + x)) + 0.001 * static_cast<double>(x);
  return w;
}

double fraction(const MeasurementSet& m, const Wavefield& w) {
  return static_cast<double>(m.count()) / static_cast<double>(w.size());
}

}  // namespace

TEST(Downsample, CaseOneShape) {
  const Wavefield w(420, 128);
  const MeasurementSet m = downsample(w, 8, 12);
  EXPECT_EQ(m.values.nt(), 35u);
  EXPECT_EQ(m.values.nx(), 16u);
  EXPECT_EQ(m.time_indices.back(), 408u);
  EXPECT_EQ(m.space_indices.back(), 120u);
  EXPECT_NEAR(100.0 * fraction(m, w), 1.04, 0.005);
}

TEST(Downsample, CaseThreeShape) {
  const Wavefield w(242, 128);
  const MeasurementSet m = downsample(w, 8, 12);
  EXPECT_EQ(m.values.nt(), 21u);
  EXPECT_EQ(m.values.nx(), 16u);
  EXPECT_NEAR(100.0 * fraction(m, w), 1.08, 0.005);
}

TEST(Downsample, CaseFourShape) {
  const MeasurementSet m = downsample(Wavefield(302, 128), 5, 10);
  EXPECT_EQ(m.values.nt(), 31u);
  EXPECT_EQ(m.values.nx(), 26u);
  EXPECT_EQ(m.time_indices.back(), 300u);
  EXPECT_EQ(m.space_indices.back(), 125u);
}

TEST(Downsample, UnitStridesAreIdentity) {
  const Wavefield w = ramp(13, 9);
  const MeasurementSet m = downsample(w, 1, 1);
  EXPECT_EQ(m.values, w);
  EXPECT_EQ(m.time_indices.size(), 13u);
}

TEST(Downsample, ComposesAcrossAxes) {
  const Wavefield w = ramp(50, 40);
  const MeasurementSet a = downsample(downsample(w, 3, 1).values, 1, 4);
  const MeasurementSet b = downsample(w, 3, 4);
  EXPECT_EQ(a.values, b.values);
}

TEST(Downsample, RejectsBadStrides) {
  const Wavefield w = ramp(10, 10);
  EXPECT_THROW(downsample(w, 0, 1), ConfigError);
  EXPECT_THROW(downsample(w, 11, 1), ConfigError);
  EXPECT_THROW(downsample(w, 1, 11), ConfigError);
}

TEST(Noise, ZeroLevelLeavesValuesUnchanged) {
  const MeasurementSet m = downsample(ramp(40, 30), 2, 3);
  for (std::uint64_t seed : {0ull, 1ull, 99ull}) EXPECT_EQ(add_noise(m, 0.0, seed).values, m.values);
}

TEST(Noise, StandardDeviationMatchesLevel) {
  const MeasurementSet m = downsample(simulate(SimConfig{{6.0, 128, 5.0, 420},
                                                         MediumSpec::uniform(128, 2.5, 0.0),
                                                         {0.5},
                                                         {Dirichlet{}, Dirichlet{}}}),
                                      8, 12);
  ASSERT_GE(m.count(), 300u);
  const MeasurementSet n = add_noise(m, 0.1, 1);
  std::vector<double> diff(m.count());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = n.values.data()[i] - m.values.data()[i];
  const double expected = 0.1 * population_std(m.values.data());
  EXPECT_NEAR(population_std(diff), expected, 0.1 * expected);
}

TEST(Noise, SameSeedSameOutput) {
  const MeasurementSet m = downsample(ramp(40, 30), 2, 3);
  EXPECT_EQ(add_noise(m, 0.2, 5).values, add_noise(m, 0.2, 5).values);
  EXPECT_NE(add_noise(m, 0.2, 5).values, add_noise(m, 0.2, 6).values);
}

TEST(Noise, NegativeLevelThrows) {
  const MeasurementSet m = downsample(ramp(10, 10), 1, 1);
  EXPECT_THROW(add_noise(m, -0.1, 1), ConfigError);
}

TEST(RelL2, IdenticalIsZero) {
  const Wavefield w = ramp(5, 5);
  EXPECT_EQ(rel_l2(w, w), 0.0);
}

TEST(RelL2, ScaledCopy) {
  const Field b(std::vector<double>{1.0, -2.0, 3.0, 0.5});
  Field a = b;
  for (auto& v : a.values()) v *= 1.01;
  EXPECT_NEAR(rel_l2(a, b), 0.01, 1e-14);
}

TEST(RelL2, SingleEntryOfReferenceNorm) {
  const Field b(std::vector<double>{3.0, 4.0, 0.0});
  Field a = b;
  a[0] += 5.0;
  EXPECT_NEAR(rel_l2(a, b), 1.0, 1e-15);
}

TEST(RelL2, ScaleInvariant) {
  const Field b(std::vector<double>{1.0, -2.0, 3.0});
  const Field a(std::vector<double>{1.5, -2.0, 2.0});
  Field a2 = a, b2 = b;
  for (auto& v : a2.values()) v *= 7.5;
  for (auto& v : b2.values()) v *= 7.5;
  EXPECT_NEAR(rel_l2(a, b), rel_l2(a2, b2), 1e-15);
}

TEST(RelL2, ZeroReferenceThrows) {
  EXPECT_THROW(rel_l2(Field(3, 1.0), Field(3, 0.0)), std::invalid_argument);
  EXPECT_THROW(rel_l2(Field(3, 1.0), Field(4, 1.0)), std::invalid_argument);
}
