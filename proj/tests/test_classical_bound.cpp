#include <gtest/gtest.h>

#include <random>

#include "qread/classical_bound.hpp"

using namespace qread;

namespace {

double eq1(double r0, double r1, double n) {
  const double x = std::sqrt(r1) - std::sqrt(r0);
  return 0.5 * (1.0 - std::sqrt(1.0 - std::exp(-n * x * x)));
}

}  // namespace

TEST(FidelityParams, PureLossReduction) {
  const auto p = fidelity_params(CellSpec{0.3, 0.9, 0.0, 0.0});
  EXPECT_DOUBLE_EQ(p.xi0, 1.0);
  EXPECT_DOUBLE_EQ(p.xi1, 1.0);
  EXPECT_DOUBLE_EQ(p.omega, 1.0);
  EXPECT_NEAR(p.lambda, std::pow(std::sqrt(0.3) - std::sqrt(0.9), 2), 1e-15);
  EXPECT_EQ(fidelity_params(CellSpec{0.4, 0.4, 0.1, 0.2}).lambda, 0.0);
}

TEST(FidelityParams, ThermalValuesBySubstitution) {
  const CellSpec c{0.85, 0.95, 1e-5, 1e-5};
  const auto p = fidelity_params(c);
  EXPECT_NEAR(p.xi0, 1.0 + 2e-5 * 0.15 + 1e-5 * 1.85, 1e-15);
  EXPECT_NEAR(p.xi1, 1.0 + 2e-5 * 0.05 + 1e-5 * 1.95, 1e-15);
  EXPECT_GT(p.omega, 1.0);
  EXPECT_GT(p.lambda, 0.0);
}

TEST(FidelityParams, RandomSweep) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const CellSpec c{unit(rng), unit(rng), unit(rng), unit(rng)};
    const auto p = fidelity_params(c);
    EXPECT_GE(p.omega, 1.0 - 1e-12);
    EXPECT_GE(p.lambda, 0.0);
    EXPECT_GE(p.xi0, 1.0);
    EXPECT_GE(p.xi1, 1.0);
  }
}

TEST(CoherentFidelity, Values) {
  EXPECT_DOUBLE_EQ(coherent_output_fidelity(CellSpec{0.6, 0.6, 0.0, 0.0}, 3.0), 1.0);
  EXPECT_DOUBLE_EQ(coherent_output_fidelity(CellSpec{0.1, 0.9, 0.0, 0.0}, 0.0), 1.0);
  EXPECT_NEAR(coherent_output_fidelity(CellSpec{0.5, 1.0, 0.0, 0.0}, 2.0),
              std::exp(-2.0 * std::pow(1.0 - std::sqrt(0.5), 2)), 1e-14);
}

TEST(ClassicalBound, Values) {
  EXPECT_EQ(classical_bound(CellSpec{0.0, 1.0, 0.0, 0.0}, 1.0, 0.0).value, 0.5);
  EXPECT_NEAR(classical_bound(CellSpec{0.5, 1.0, 0.0, 0.0}, 5.0, 10.0).value, 0.12054867, 1e-8);
  const CellSpec thermal{0.85, 0.95, 1e-5, 1e-5};
  EXPECT_LT(classical_bound(thermal, 1e6, 100.0).value, classical_bound(thermal, 1.0, 100.0).value);
}

TEST(ClassicalBound, PureLossIsBandwidthIndependent) {
  for (double r0 : {0.0, 0.3, 0.85})
    for (double n : {0.5, 5.0, 60.0}) {
      const CellSpec c{r0, 1.0, 0.0, 0.0};
      const double ref = eq1(r0, 1.0, n);
      for (double m : {1.0, 7.0, 1e3, 1e9}) EXPECT_NEAR(classical_bound(c, m, n).value, ref, 1e-15);
    }
}

TEST(ClassicalBound, MonotoneInEnergy) {
  const CellSpec c{0.2, 0.7, 0.01, 0.02};
  double prev = 0.5;
  for (double n = 0.0; n < 200.0; n += 1.7) {
    const double v = classical_bound(c, 10.0, n).value;
    EXPECT_LE(v, prev + 1e-16);
    EXPECT_GE(v, 0.0);
    prev = v;
  }
}

TEST(ClassicalBound, StrictlyDecreasingInBandwidthWhenThermal) {
  const CellSpec c{0.85, 0.95, 1e-3, 1e-3};
  double prev = classical_bound(c, 1.0, 10.0).value;
  for (double m = 2.0; m <= 1e9; m *= 4.0) {
    const double v = classical_bound(c, m, 10.0).value;
    EXPECT_LT(v, prev);
    prev = v;
  }
  EXPECT_LT(prev, 1e-100);
}

TEST(ClassicalBound, HalfOnlyWithUnitFidelity) {
  EXPECT_EQ(classical_bound(CellSpec{0.4, 0.4, 0.0, 0.0}, 3.0, 50.0).value, 0.5);
  EXPECT_LT(classical_bound(CellSpec{0.4, 0.41, 0.0, 0.0}, 3.0, 50.0).value, 0.5);
}

TEST(ClassicalBound, RejectsBadInput) {
  EXPECT_THROW(classical_bound(CellSpec{0.4, 0.5, 0.0, 0.0}, 0.5, 1.0), Error);
  EXPECT_THROW(classical_bound(CellSpec{0.4, 0.5, 0.0, 0.0}, 1.0, -1.0), Error);
}
