#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "qread/incomplete_gamma.hpp"

using namespace qread;

TEST(UpperGamma, SingleTerm) {
  for (double x : {0.0, 0.3, 2.0, 17.0}) EXPECT_NEAR(regularized_upper_gamma(1, x), std::exp(-x), 1e-15);
  for (std::int64_t m : {1, 5, 100, 100000}) EXPECT_EQ(regularized_upper_gamma(m, 0.0), 1.0);
}

TEST(UpperGamma, MatchesQuadratureOfDensity) {
  // Gamma(10, 10) / Gamma(10) = int_10^inf x^9 e^{-x} / 9! dx.
  auto density = [](double x) { return std::exp(9.0 * std::log(x) - x - std::lgamma(10.0)); };
  const double tail = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      density, 10.0, std::numeric_limits<double>::infinity(), 15, 1e-14);
  EXPECT_NEAR(regularized_upper_gamma(10, 10.0), tail, 1e-10);
}

TEST(UpperGamma, MatchesReferenceImplementation) {
  for (std::int64_t m : {1, 2, 7, 30, 256, 5000, 100000})
    for (double f : {0.01, 0.3, 0.9, 1.0, 1.1, 2.5, 10.0}) {
      const double x = f * static_cast<double>(m);
      const double q = boost::math::gamma_q(static_cast<double>(m), x);
      const double p = boost::math::gamma_p(static_cast<double>(m), x);
      const auto tails = regularized_gamma_tails(m, x);
      EXPECT_NEAR(tails.upper, q, 1e-13 + 1e-11 * q) << m << " " << x;
      EXPECT_NEAR(tails.lower, p, 1e-13 + 1e-11 * p) << m << " " << x;
    }
}

TEST(UpperGamma, TinyTailsKeepRelativeAccuracy) {
  const double q = boost::math::gamma_q(50.0, 400.0);
  EXPECT_GT(q, 0.0);
  EXPECT_NEAR(regularized_upper_gamma(50, 400.0) / q, 1.0, 1e-10);
  const double p = boost::math::gamma_p(50.0, 2.0);
  EXPECT_NEAR(regularized_lower_gamma(50, 2.0) / p, 1.0, 1e-10);
}

TEST(UpperGamma, Rejects) {
  EXPECT_THROW(regularized_upper_gamma(0, 1.0), Error);
  EXPECT_THROW(regularized_upper_gamma(3, -1.0), Error);
  try {
    regularized_upper_gamma(100001, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnsupportedRange);
  }
}

TEST(Quantile, AnalyticSingleCopy) {
  EXPECT_NEAR(test_quantile(1, 0.05), -2.0 * std::log(0.05), 1e-9);
  EXPECT_NEAR(test_quantile(1, 0.5), 2.0 * std::log(2.0), 1e-9);
}

TEST(Quantile, RoundTrip) {
  for (std::int64_t m : {1, 2, 10, 64, 256, 10000})
    for (double phi : {1e-6, 1e-3, 0.05, 0.3, 0.5, 0.9})
      EXPECT_NEAR(regularized_upper_gamma(m, test_quantile(m, phi) / 2.0), phi, 1e-9 * std::max(phi, 1e-3));
}

TEST(Quantile, Rejects) {
  EXPECT_THROW(test_quantile(3, 0.0), Error);
  EXPECT_THROW(test_quantile(3, 1.0), Error);
}
