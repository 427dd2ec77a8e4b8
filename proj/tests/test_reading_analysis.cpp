#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "qread/reading_analysis.hpp"

using namespace qread;

TEST(BinaryEntropy, Values) {
  EXPECT_EQ(binary_entropy(0.0), 0.0);
  EXPECT_EQ(binary_entropy(1.0), 0.0);
  EXPECT_NEAR(binary_entropy(0.5), 1.0, 1e-15);
  for (double p : {1e-9, 0.1, 0.37}) EXPECT_NEAR(binary_entropy(p), binary_entropy(1.0 - p), 1e-12);
  EXPECT_THROW(binary_entropy(1.5), Error);
}

TEST(InfoGain, IdealExample) {
  const auto r = info_gain(CellSpec{0.0, 1.0, 0.0, 0.0}, 2, 1.0);
  EXPECT_NEAR(r.c, 0.5 * (1.0 - std::sqrt(1.0 - std::exp(-1.0))), 1e-12);
  EXPECT_NEAR(r.c, 0.10247, 1e-5);
  EXPECT_NEAR(r.q, 0.5 * std::pow(1.5, -4), 1e-12);
  EXPECT_GT(r.g, 0.0);
  EXPECT_FALSE(r.inconclusive());
}

TEST(InfoGain, ThermalCellWithCap) {
  const auto r = info_gain(CellSpec{0.85, 0.95, 1e-5, 1e-5}, 30, 30.0, 5e6);
  EXPECT_GT(r.g, 0.0);
  EXPECT_THROW(info_gain(CellSpec{0.85, 0.95, 1e-5, 1e-5}, 30, 30.0), Error);
}

TEST(InfoGain, SignMatchesBoundOrdering) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const CellSpec c{unit(rng), unit(rng), 0.0, 0.0};
    if (c.r0 == c.r1) continue;
    const auto r = info_gain(c, 1 + static_cast<std::int64_t>(20 * unit(rng)), 20.0 * unit(rng));
    // H is increasing on [0, 1/2].
    EXPECT_EQ(r.g > 0.0, r.q < r.c) << c.r0 << " " << c.r1;
  }
}

TEST(Broadband, FixedCoefficients) {
  const auto r = broadband_gain(CellSpec{0.0, 1.0, 0.0, 0.0}, 1.0);
  EXPECT_NEAR(r.q, 0.5 * std::exp(-2.0), 1e-15);
  EXPECT_GT(r.g, 0.0);
  EXPECT_THROW(broadband_gain(CellSpec{0.0, 0.9, 0.0, 0.0}, 1.0), Error);
}

TEST(Threshold, Values) {
  EXPECT_NEAR(threshold_energy(0.0, 1.0), 2.0 * std::numbers::ln2, 1e-14);
  EXPECT_NEAR(threshold_energy(0.5, 1.0), 4.0 * std::numbers::ln2, 1e-13);
  EXPECT_EQ(threshold_energy(0.2, 0.7), threshold_energy(0.7, 0.2));
  try {
    threshold_energy(0.4, 0.4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UndefinedThreshold);
  }
}

TEST(Threshold, AdvantageAboveThresholdWithEnoughBandwidth) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int checked = 0;
  while (checked < 20) {
    const double r0 = unit(rng), r1 = unit(rng);
    if (std::abs(r0 - r1) < 0.2) continue;
    const CellSpec c{r0, r1, 0.0, 0.0};
    const double n = 1.5 * threshold_energy(r0, r1);
    EXPECT_TRUE(find_min_bandwidth(c, n, 1000000).has_value()) << r0 << " " << r1;
    ++checked;
  }
}

TEST(Threshold, MinBandwidth) {
  EXPECT_EQ(find_min_bandwidth(CellSpec{0.0, 1.0, 0.0, 0.0}, 1.0, 100), std::optional<std::int64_t>(2));
  EXPECT_FALSE(find_min_bandwidth(CellSpec{0.5, 0.5, 0.0, 0.0}, 10.0, 300).has_value());
  const auto m = find_min_bandwidth(CellSpec{0.5, 1.0, 0.0, 0.0}, 1.1 * threshold_energy(0.5, 1.0), 10000);
  ASSERT_TRUE(m.has_value());
  if (*m > 1) {
    const auto before = info_gain(CellSpec{0.5, 1.0, 0.0, 0.0}, *m - 1, 1.1 * threshold_energy(0.5, 1.0));
    EXPECT_GE(before.q, before.c);
  }
}

TEST(IdealCurve, Constants) {
  EXPECT_NEAR(ideal_ybar(1.0), (std::sqrt(5.0) - 1.0) / 2.0, 1e-9);
  EXPECT_NEAR(ideal_nbar(0.0), -std::log((std::sqrt(5.0) - 1.0) / 2.0), 1e-9);
  EXPECT_NEAR(ideal_nbar(0.0), 0.481211825, 1e-8);
  EXPECT_NEAR(ideal_ybar(1e-4), 0.778791048, 1e-8);
}

TEST(IdealCurve, SignStructure) {
  for (double x : {1e-3, 0.1, 0.5, 0.9, 1.0}) {
    const double yb = ideal_ybar(x);
    EXPECT_GT(ideal_g(x, 0.5 * yb), 0.0);
    EXPECT_LT(ideal_g(x, 0.5 * (yb + 1.0)), 0.0);
  }
}

TEST(IdealCurve, ShapeOfNbar) {
  double prev = 1.0;
  for (double x = 0.01; x <= 1.0; x += 0.01) {
    const double yb = ideal_ybar(x);
    EXPECT_LT(yb, prev);
    prev = yb;
  }
  for (double r0 = 0.0; r0 < 0.999; r0 += 0.037) {
    const double n = ideal_nbar(r0);
    EXPECT_GT(n, 0.25);
    EXPECT_LE(n, 0.481211826);
  }
  const auto p = ideal_threshold_curve(0.25);
  EXPECT_NEAR(p.x, 0.5, 1e-15);
  EXPECT_NEAR(p.ybar, std::exp(-p.nbar), 1e-15);
}

TEST(Scan, SmallPlane) {
  ScanRequest req;
  req.grid = 5;
  req.energy_n = 4.0;
  req.m = 4;
  req.threads = 2;
  const auto g = scan_plane(req);
  ASSERT_EQ(g.cells.size(), 25u);
  EXPECT_EQ(g.at(2, 3).x, 0.5);
  EXPECT_EQ(g.at(2, 3).y, 0.75);
  for (int i = 0; i < 5; ++i) EXPECT_TRUE(g.at(i, i).inconclusive);
  const auto direct = info_gain(CellSpec{0.0, 1.0, 0.0, 0.0}, 4, 4.0);
  EXPECT_EQ(g.at(0, 4).gain.g, direct.g);
  ASSERT_NE(g.max_gain(), nullptr);
}

TEST(Scan, BroadbandAboveHalfPhoton) {
  ScanRequest req;
  req.plane = Plane::R0N;
  req.broadband = true;
  req.grid = 11;
  req.n_min = 0.5;
  req.energy_n = 5.0;
  const auto g = scan_plane(req);
  for (const auto& c : g.cells) {
    if (c.x == 1.0) continue;
    EXPECT_GT(c.gain.g, 0.0) << c.x << " " << c.y;
  }
}

TEST(Scan, RejectsBadRequests) {
  ScanRequest req;
  req.grid = 1;
  EXPECT_THROW(scan_plane(req), Error);
  req.grid = 3;
  req.broadband = true;
  EXPECT_THROW(scan_plane(req), Error);
}
