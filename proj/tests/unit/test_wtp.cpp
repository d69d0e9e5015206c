#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "threshlogit/wtp.hpp"

using namespace threshlogit;

namespace {

ParameterSet coefs(double bt, double bc) {
  ParameterSet p;
  p.beta_t = bt;
  p.beta_c = bc;
  return p;
}

}  // namespace

TEST(VttsAt, Examples) {
  const TransformSpec lin{TransformKind::Linear, 1.0};
  for (double dt : {-20.0, -1.0, 0.5, 13.0}) EXPECT_NEAR(vtts_at(coefs(-0.127, -0.305), lin, dt), 24.98, 0.005);
  const TransformSpec htf{TransformKind::HTF, 5.0};
  EXPECT_EQ(vtts_at(coefs(-0.1, -0.6), htf, 5.0), 0.0);
  EXPECT_EQ(vtts_at(coefs(-0.1, -0.6), htf, -5.0), 0.0);
  EXPECT_NEAR(vtts_at(coefs(-0.1, -0.6), htf, 10.0), 5.0, 1e-12);
  EXPECT_EQ(vtts_at(coefs(-0.1, -0.6), htf, 2.0), 0.0);
  EXPECT_NEAR(vtts_at(coefs(-0.1, -0.6), {TransformKind::STF2, 5.0}, 5.0), 2.929, 5e-4);
  EXPECT_EQ(vtts_at(coefs(-0.1, -0.6), {TransformKind::STF1, 5.0}, 0.0), 0.0);
  EXPECT_EQ(vtts_at(coefs(-0.1, -0.6), {TransformKind::Power, 1.6}, 0.0), 0.0);
  EXPECT_THROW(vtts_at(coefs(-0.1, 0.0), htf, 3.0), DomainError);
}

TEST(VttsAt, MatchesTransformRatio) {
  const auto p = coefs(-0.11, -0.57);
  for (auto k : kAllTransformKinds) {
    const TransformSpec s{k, k == TransformKind::Power ? 1.4 : 3.5};
    for (double dt : {-17.0, -3.0, 0.7, 4.0, 22.0}) {
      const double expected = p.beta_t / p.beta_c * 60.0 * eval_transform(s, dt) / dt;
      EXPECT_NEAR(vtts_at(p, s, dt), expected, 1e-12 * std::max(1.0, std::abs(expected))) << to_string(k);
    }
  }
}

TEST(AsymptoticVtts, PublishedPairs) {
  EXPECT_NEAR(*asymptotic_vtts(coefs(-0.106, -0.596), {TransformKind::HTF, 5.41}).value, 10.67, 0.005);
  EXPECT_NEAR(*asymptotic_vtts(coefs(-0.151, -0.285), {TransformKind::STF1, 2.17}).value, 31.79, 0.005);
  const auto power = asymptotic_vtts(coefs(-0.013, -0.602), {TransformKind::Power, 1.6});
  EXPECT_FALSE(power.value);
  EXPECT_NEAR(power.ratio, 1.30, 0.01);
  EXPECT_THROW(asymptotic_vtts(coefs(-0.1, 0.0), {TransformKind::Linear, 1.0}), DomainError);
}

TEST(VttsCurve, GridSkipsZero) {
  const auto curve = vtts_curve(coefs(-0.1, -0.6), {TransformKind::HTF, 5.0});
  EXPECT_EQ(curve.size(), 200u);
  EXPECT_EQ(curve.front().dt, -25.0);
  EXPECT_EQ(curve.back().dt, 25.0);
  for (const auto& pt : curve) {
    EXPECT_NE(pt.dt, 0.0);
    if (std::abs(pt.dt) < 5.0) {
      EXPECT_EQ(pt.vtts, 0.0);
    }
  }
}

TEST(VttsProperties, ScaleInvariance) {
  const auto p = coefs(-0.106, -0.596);
  const Eigen::Vector2d mean(p.beta_t, p.beta_c);
  Eigen::Matrix2d cov;
  cov << 6.4e-5, 1.0e-5, 1.0e-5, 3.6e-4;
  const auto sim = vtts_ci_simulation(mean, cov, 20000, 0.95, 3);
  const auto fie = vtts_ci_fieller(mean, cov, 0.95);
  for (double c : {-2.0, 0.5, 4.0, -0.25}) {
    const auto q = coefs(c * p.beta_t, c * p.beta_c);
    for (auto k : kAllTransformKinds) {
      const TransformSpec s{k, k == TransformKind::Power ? 1.6 : 5.41};
      for (double dt : {-12.0, -1.0, 3.0, 24.0}) EXPECT_EQ(vtts_at(q, s, dt), vtts_at(p, s, dt));
      EXPECT_EQ(asymptotic_vtts(q, s).ratio, asymptotic_vtts(p, s).ratio);
    }
    const auto f2 = vtts_ci_fieller(c * mean, c * c * cov, 0.95);
    EXPECT_EQ(f2.low, fie.low);
    EXPECT_EQ(f2.high, fie.high);
    if (c > 0) {
      // Positive rescaling reuses the same standard-normal draws exactly.
      const auto s2 = vtts_ci_simulation(c * mean, c * c * cov, 20000, 0.95, 3);
      EXPECT_EQ(s2.low, sim.low);
      EXPECT_EQ(s2.high, sim.high);
    }
  }
  // Arbitrary c agrees to rounding.
  const auto f3 = vtts_ci_fieller(3.0 * mean, 9.0 * cov, 0.95);
  EXPECT_NEAR(f3.low, fie.low, 1e-12 * std::abs(fie.low));
  EXPECT_NEAR(f3.high, fie.high, 1e-12 * std::abs(fie.high));
  EXPECT_NEAR(vtts_at(coefs(3 * p.beta_t, 3 * p.beta_c), {TransformKind::STF1, 2.0}, 7.0),
              vtts_at(p, {TransformKind::STF1, 2.0}, 7.0), 1e-13);
}

TEST(VttsProperties, MonotoneApproachToAsymptote) {
  const auto p = coefs(-0.106, -0.596);
  for (auto k : {TransformKind::HTF, TransformKind::STF1, TransformKind::STF2}) {
    const double alpha = 5.41;
    const TransformSpec s{k, alpha};
    const double asym = *asymptotic_vtts(p, s).value;
    double prev = -1.0;
    for (double dt = 0.05; dt <= 200.0 * alpha; dt *= 1.05) {
      const double v = vtts_at(p, s, dt);
      EXPECT_GE(v, prev) << to_string(k) << " dt " << dt;
      EXPECT_EQ(vtts_at(p, s, -dt), v);
      EXPECT_LE(v, asym);
      prev = v;
    }
    // At 50 alpha the HTF and STF1 factors are 1 - 1/50 and STF2's is 1 - 1/sqrt(2501),
    // so the gap there is about 2% for the first two; it drops below 1% past 100 alpha.
    const double at50 = vtts_at(p, s, 50.0 * alpha);
    const double expected50 = k == TransformKind::STF2 ? 1.0 - 1.0 / std::sqrt(2501.0) : 1.0 - 1.0 / 50.0;
    EXPECT_NEAR(at50 / asym, expected50, 1e-12);
    for (double mult : {101.0, 150.0, 400.0}) {
      EXPECT_LT(std::abs(vtts_at(p, s, mult * alpha) - asym) / asym, 0.01) << to_string(k) << " x" << mult;
    }
  }
}

TEST(VttsProperties, ThresholdBelowLinearNearZeroAboveFarOut) {
  // Linear ratio 7.62; threshold models have larger ratios but damped small-dt slopes.
  const double lin = *asymptotic_vtts(coefs(-0.080, -0.630), {TransformKind::Linear, 1.0}).value;
  const struct {
    TransformKind kind;
    double bt, bc, alpha;
  } fits[] = {{TransformKind::HTF, -0.106, -0.596, 5.41},
              {TransformKind::STF1, -0.113, -0.598, 6.34},
              {TransformKind::STF2, -0.119, -0.598, 7.48}};
  for (const auto& f : fits) {
    const TransformSpec s{f.kind, f.alpha};
    EXPECT_LT(vtts_at(coefs(f.bt, f.bc), s, f.alpha / 2.0), lin) << to_string(f.kind);
    EXPECT_GT(vtts_at(coefs(f.bt, f.bc), s, 20.0 * f.alpha), lin) << to_string(f.kind);
  }
}

TEST(VttsCi, ZeroCovarianceCollapsesToPoint) {
  const Eigen::Vector2d mean(-0.1, -0.6);
  const auto sim = vtts_ci_simulation(mean, Eigen::Matrix2d::Zero(), 1000, 0.95, 1);
  EXPECT_NEAR(sim.low, 10.0, 1e-12);
  EXPECT_NEAR(sim.high, 10.0, 1e-12);
  const auto f = vtts_ci_fieller(mean, Eigen::Matrix2d::Zero(), 0.95);
  ASSERT_TRUE(f.bounded);
  EXPECT_NEAR(f.low, 10.0, 1e-12);
  EXPECT_NEAR(f.high, 10.0, 1e-12);
}

TEST(VttsCi, FiellerTinyVarianceIsSymmetricBand) {
  const Eigen::Vector2d mean(-0.1, -0.6);
  Eigen::Matrix2d cov = Eigen::Matrix2d::Identity() * 1e-10;
  const auto f = vtts_ci_fieller(mean, cov, 0.95);
  ASSERT_TRUE(f.bounded);
  EXPECT_LT(f.low, 10.0);
  EXPECT_GT(f.high, 10.0);
  EXPECT_NEAR(10.0 - f.low, f.high - 10.0, 1e-6);
  // Delta-method width 2 z 60 sqrt(v11 + r^2 v22) / |b| with r = 1/6.
  const double z = 1.959963984540054;
  const double delta = 2.0 * z * 60.0 * std::sqrt(1e-10 * (1.0 + 1.0 / 36.0)) / 0.6;
  EXPECT_NEAR((f.high - f.low) / delta, 1.0, 1e-4);
}

TEST(VttsCi, FiellerUnboundedWhenDenominatorInsignificant) {
  const Eigen::Vector2d mean(-0.1, -0.05);
  Eigen::Matrix2d cov;
  cov << 1e-4, 0.0, 0.0, 0.04 * 0.04;  // t = 1.25 < 1.96
  EXPECT_FALSE(vtts_ci_fieller(mean, cov, 0.95).bounded);
}

TEST(VttsCi, RejectsInvalidInputs) {
  const Eigen::Vector2d mean(-0.1, -0.6);
  Eigen::Matrix2d bad;
  bad << 1e-4, 1e-3, 1e-3, 1e-4;  // indefinite
  EXPECT_THROW(vtts_ci_simulation(mean, bad, 1000, 0.95, 1), DomainError);
  EXPECT_THROW(vtts_ci_fieller(mean, bad, 0.95), DomainError);
  EXPECT_THROW(vtts_ci_simulation(mean, Eigen::Matrix2d::Identity() * 1e-4, 999, 0.95, 1), DomainError);
  EXPECT_THROW(vtts_ci_fieller(mean, Eigen::Matrix2d::Identity() * 1e-4, 1.5), DomainError);
}

TEST(VttsCi, SimulationMatchesFiellerOnDiagonalCase) {
  // Denominator mean 10 standard deviations from zero.
  const Eigen::Vector2d mean(-0.1, -0.6);
  Eigen::Matrix2d cov;
  cov << 0.008 * 0.008, 0.0, 0.0, 0.06 * 0.06;
  const auto sim = vtts_ci_simulation(mean, cov, 100000, 0.95, 17);
  const auto fie = vtts_ci_fieller(mean, cov, 0.95);
  EXPECT_NEAR(sim.low / fie.low, 1.0, 0.02);
  EXPECT_NEAR(sim.high / fie.high, 1.0, 0.02);
  EXPECT_LE(sim.low, 10.0);
  EXPECT_GE(sim.high, 10.0);
}

TEST(VttsCi, DeterministicAndStableInDraws) {
  const Eigen::Vector2d mean(-0.106, -0.596);
  Eigen::Matrix2d cov;
  cov << 6.4e-5, 2.0e-5, 2.0e-5, 3.6e-4;
  const auto a = vtts_ci_simulation(mean, cov, 100000, 0.95, 9);
  const auto b = vtts_ci_simulation(mean, cov, 100000, 0.95, 9);
  EXPECT_EQ(a.low, b.low);
  EXPECT_EQ(a.high, b.high);
  // Width at 1e6 draws within the Monte Carlo band of the width at 1e5: the
  // band is estimated from the spread of widths across independent 1e5 runs.
  std::vector<double> widths;
  for (std::uint64_t seed = 100; seed < 120; ++seed) {
    const auto ci = vtts_ci_simulation(mean, cov, 100000, 0.95, seed);
    widths.push_back(ci.high - ci.low);
  }
  double m = 0, ss = 0;
  for (double w : widths) m += w;
  m /= static_cast<double>(widths.size());
  for (double w : widths) ss += (w - m) * (w - m);
  const double sd = std::sqrt(ss / static_cast<double>(widths.size() - 1));
  const auto big = vtts_ci_simulation(mean, cov, 1000000, 0.95, 5);
  EXPECT_LT(std::abs((big.high - big.low) - m), 4.0 * sd);
}
