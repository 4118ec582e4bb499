#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "iqlphase/errors.hpp"
#include "iqlphase/phase.hpp"

using namespace iqlphase;

namespace {

PhaseField line(std::vector<double> values) {
  PhaseField f;
  f.sides = {8};
  for (std::size_t k = 0; k < values.size(); ++k) f.densities.push_back(Density::from_denominator(32 >> k));
  for (double v : values) f.values.push_back(v);
  return f;
}

PhaseField grid(int rows, int cols, std::vector<std::optional<double>> values) {
  PhaseField f;
  for (int r = 0; r < rows; ++r) f.sides.push_back(8 * (r + 1));
  for (int c = 0; c < cols; ++c) f.densities.push_back(Density::from_denominator(32 >> c));
  f.values = std::move(values);
  return f;
}

}  // namespace

TEST(Percentile, Fixtures) {
  EXPECT_EQ(percentile(std::vector<double>{0.4, 0.4, 0.4}, 0.6), 0.4);
  EXPECT_DOUBLE_EQ(percentile(std::vector<double>{0.0, 1.0}, 0.6), 0.6);
  EXPECT_DOUBLE_EQ(percentile(std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0}, 0.6), 0.6);
  EXPECT_DOUBLE_EQ(percentile(std::vector<double>{1.0, 0.0, 0.75, 0.25, 0.5}, 0.6), 0.6);
}

TEST(Thresholds, IndependentAndPermutationInvariant) {
  const std::vector<double> csr{0.9, 0.1, 0.5, 0.3};
  const std::vector<double> s{0.2, 0.8, 0.4, 1.0};
  const Thresholds t = thresholds(csr, s);
  EXPECT_NEAR(t.csr, 0.46, 1e-12);
  EXPECT_NEAR(t.s, 0.72, 1e-12);
  std::vector<double> csr2{0.3, 0.5, 0.9, 0.1};
  std::vector<double> s2{1.0, 0.2, 0.8, 0.4};
  const Thresholds t2 = thresholds(csr2, s2);
  EXPECT_EQ(t.csr, t2.csr);
  EXPECT_EQ(t.s, t2.s);
  EXPECT_THROW(thresholds(std::vector<double>{0.5}, std::vector<double>{0.5}), TooFewPoints);
}

TEST(PhaseDistance, Fixtures) {
  const Thresholds tau{0.6, 0.5};
  EXPECT_EQ(phase_distance(0.6, 0.5, tau), 0.0);
  EXPECT_NEAR(phase_distance(0.9, 0.9, tau), 0.5, 1e-12);
  EXPECT_NEAR(phase_distance(0.2, 0.5, tau), 0.4, 1e-12);
}

TEST(PhaseDistanceProperty, SymmetryAndTranslation) {
  Rng rng(1);
  for (int k = 0; k < 1000; ++k) {
    const double dx = rng.uniform(-0.5, 0.5);
    const double dy = rng.uniform(-0.5, 0.5);
    const Thresholds tau{rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8)};
    const double d = phase_distance(tau.csr + dx, tau.s + dy, tau);
    EXPECT_NEAR(d, phase_distance(tau.csr + dy, tau.s + dx, tau), 1e-12);
    const double sx = rng.uniform(-0.1, 0.1);
    const double sy = rng.uniform(-0.1, 0.1);
    EXPECT_NEAR(d, phase_distance(tau.csr + dx + sx, tau.s + dy + sy, Thresholds{tau.csr + sx, tau.s + sy}), 1e-12);
  }
}

TEST(Classify, Fixtures) {
  const Thresholds tau{0.5, 0.5};
  EXPECT_EQ(classify(0.9, 0.9, tau), Regime::CoordinatedStable);
  EXPECT_EQ(classify(0.5, 0.5, tau), Regime::Fragile);
  EXPECT_EQ(classify(0.0, 0.2, tau), Regime::JammedDisordered);
  EXPECT_EQ(classify(0.95, 0.1, tau), Regime::JammedDisordered);
  // Exactly on the ridge level counts as fragile.
  EXPECT_EQ(classify(0.9, 0.5, tau), Regime::Fragile);
}

TEST(ClassifyProperty, ExhaustiveAndConsistentWithDistance) {
  Rng rng(2);
  for (int k = 0; k < 5000; ++k) {
    const Thresholds tau{rng.uniform01(), rng.uniform01()};
    const double c = rng.uniform01();
    const double s = rng.uniform01();
    const Regime r = classify(c, s, tau);
    const double d = phase_distance(c, s, tau);
    if (d <= 0.4) {
      EXPECT_EQ(r, Regime::Fragile);
    } else if (c >= tau.csr && s >= tau.s) {
      EXPECT_EQ(r, Regime::CoordinatedStable);
    } else {
      EXPECT_EQ(r, Regime::JammedDisordered);
    }
  }
}

TEST(Ridge, ConstantFieldHasNoCrossings) {
  EXPECT_TRUE(ridge_cells(line({0.6, 0.6, 0.6, 0.6})).empty());
  EXPECT_TRUE(ridge_cells(grid(2, 2, {0.1, 0.2, 0.3, 0.35})).empty());
}

TEST(Ridge, SingleCrossingAtInterpolatedFraction) {
  const auto x = ridge_cells(line({0.3, 0.5}));
  ASSERT_EQ(x.size(), 1u);
  EXPECT_NEAR(x[0].fraction, 0.5, 1e-12);
  EXPECT_EQ(x[0].from, (GridIndex{0, 0}));
  EXPECT_EQ(x[0].to, (GridIndex{0, 1}));
}

TEST(Ridge, DoubleRidgeOnDipLine) {
  const auto x = ridge_cells(line({0.6, 0.3, 0.6}));
  ASSERT_EQ(x.size(), 2u);
  EXPECT_NEAR(x[0].fraction, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(x[1].fraction, 1.0 / 3.0, 1e-12);
  EXPECT_EQ(chain_count(x), 2);
}

TEST(Ridge, ChainsFollowSharedSquares) {
  // Two separate vertical bands of low values across three rows.
  const auto x = ridge_cells(grid(3, 5, {0.6, 0.3, 0.6, 0.3, 0.6,   //
                                         0.6, 0.3, 0.6, 0.3, 0.6,   //
                                         0.6, 0.3, 0.6, 0.3, 0.6}));
  EXPECT_EQ(x.size(), 12u);
  EXPECT_EQ(chain_count(x), 4);
  const auto y = ridge_cells(grid(2, 3, {0.6, 0.3, 0.6, 0.6, 0.3, 0.6}));
  EXPECT_EQ(chain_count(y), 2);
}

TEST(Ridge, MissingCellsBreakEdges) {
  const auto x = ridge_cells(grid(2, 2, {0.6, 0.3, 0.6, std::nullopt}));
  ASSERT_EQ(x.size(), 1u);
  EXPECT_EQ(x[0].to, (GridIndex{0, 1}));
}

TEST(RidgeProperty, StrictlyOneSidedFieldIsEmpty) {
  Rng rng(3);
  for (int k = 0; k < 100; ++k) {
    std::vector<std::optional<double>> hi, lo;
    for (int i = 0; i < 20; ++i) {
      hi.push_back(rng.uniform(0.41, 1.0));
      lo.push_back(rng.uniform(0.0, 0.39));
    }
    EXPECT_TRUE(ridge_cells(grid(4, 5, hi)).empty());
    EXPECT_TRUE(ridge_cells(grid(4, 5, lo)).empty());
  }
}

TEST(PhaseMap, BuildsFieldsAndPoints) {
  std::vector<ConditionStats> stats;
  const std::vector<int> sides{8, 16};
  const std::vector<Density> dens{Density::from_denominator(32), Density::from_denominator(2)};
  const double csr[4] = {1.0, 0.2, 0.6, 0.0};
  const double s[4] = {0.9, 0.3, 0.5, 0.0};
  for (int k = 0; k < 4; ++k) {
    ConditionStats c;
    c.side = sides[k / 2];
    c.density = dens[k % 2];
    c.csr = csr[k];
    c.s = s[k];
    c.s_grad = 1.0 - s[k];
    stats.push_back(c);
  }
  const PhaseMap m = build_phase_map(stats, sides, dens);
  ASSERT_EQ(m.points.size(), 4u);
  for (const auto& p : m.points) {
    EXPECT_NEAR(p.d_phase, std::hypot(p.csr - m.tau.csr, p.s - m.tau.s), 1e-12);
    EXPECT_EQ(p.regime, classify(p.csr, p.s, m.tau));
  }
  EXPECT_EQ(m.d_phase.at(1, 1), m.points[3].d_phase);
  const PhaseMap g = build_phase_map(stats, sides, dens, 0.4, StabilityAxis::GradientNorm);
  EXPECT_EQ(g.points[0].s, 1.0 - 0.9);
}
