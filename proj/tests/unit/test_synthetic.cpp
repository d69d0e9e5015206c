#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "threshlogit/synthetic.hpp"

using namespace threshlogit;

TEST(Random, SeedDerivationIsStableAndDistinct) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(derive_seed(1, i));
  EXPECT_EQ(seen.size(), 1000u);
  EXPECT_EQ(derive_seed(7, 3), derive_seed(7, 3));
  EXPECT_NE(derive_seed(7, 3), derive_seed(8, 3));
}

TEST(Random, UniformAndLogisticMoments) {
  Rng rng(42);
  const int n = 200000;
  double su = 0, sl = 0, sl2 = 0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform01();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    su += u;
    const double l = rng.logistic();
    sl += l;
    sl2 += l * l;
  }
  EXPECT_NEAR(su / n, 0.5, 0.005);
  EXPECT_NEAR(sl / n, 0.0, 0.02);
  EXPECT_NEAR(sl2 / n, M_PI * M_PI / 3.0, 0.05);
}

TEST(GenerateDataset, DeterministicForSeed) {
  SimConfig c;
  c.seed = 9;
  EXPECT_EQ(generate_dataset(c), generate_dataset(c));
  SimConfig d = c;
  d.seed = 10;
  EXPECT_NE(generate_dataset(c), generate_dataset(d));
}

TEST(GenerateDataset, DefaultProtocol) {
  SimConfig c;
  const auto data = generate_dataset(c);
  ASSERT_EQ(data.size(), 5000u);
  std::size_t chose1 = 0;
  for (const auto& r : data) {
    EXPECT_TRUE((r.dt > 0) != (r.dc > 0));
    EXPECT_NE(r.dt, 0.0);
    EXPECT_NE(r.dc, 0.0);
    EXPECT_GE(r.dt, -25.0);
    EXPECT_LE(r.dt, 25.0);
    EXPECT_GE(r.dc, -10.0);
    EXPECT_LE(r.dc, 10.0);
    EXPECT_EQ(r.group, 0);
    chose1 += r.chose_alt1;
  }
  const double share = static_cast<double>(chose1) / 5000.0;
  EXPECT_GE(share, 0.45);
  EXPECT_LE(share, 0.55);
}

TEST(GenerateDataset, ExtendedVariantCovariates) {
  SimConfig c;
  c.n_obs = 4000;
  c.extended = ExtendedDgp{};
  const auto data = generate_dataset(c);
  std::size_t group1 = 0;
  for (const auto& r : data) {
    ASSERT_TRUE(r.income && r.mean_trip_time);
    EXPECT_GE(*r.income, 3000.0);
    EXPECT_LE(*r.income, 12000.0);
    EXPECT_GE(*r.mean_trip_time, 10.0);
    EXPECT_LE(*r.mean_trip_time, 60.0);
    EXPECT_GE(r.dk, -2.0);
    EXPECT_LE(r.dk, 2.0);
    EXPECT_EQ(r.dk, std::round(r.dk));
    group1 += r.group == 1;
  }
  EXPECT_NEAR(static_cast<double>(group1) / 4000.0, 0.5, 0.05);
}

TEST(GenerateDataset, InvalidConfigRejected) {
  SimConfig c;
  c.n_obs = 0;
  EXPECT_THROW(generate_dataset(c), InvalidSpecError);
  c.n_obs = 10;
  c.cost_range = {0.0, 10.0};
  EXPECT_THROW(generate_dataset(c), InvalidSpecError);
  c.cost_range = {-10.0, 10.0};
  c.time_range = {-5.0, -1.0};
  EXPECT_THROW(generate_dataset(c), InvalidSpecError);
}

namespace {

std::vector<FitSpecEntry> linear_and_htf() {
  UtilitySpec lin, htf;
  htf.transform.kind = TransformKind::HTF;
  return {{"linear", lin}, {"htf", htf}};
}

}  // namespace

TEST(Replication, ReproducibleAndThreadIndependent) {
  SimConfig c;
  c.n_obs = 1000;
  ReplicationOptions one, two;
  two.threads = 2;
  const auto a = replicate_study(c, linear_and_htf(), 4, one);
  const auto b = replicate_study(c, linear_and_htf(), 4, two);
  ASSERT_EQ(a.summaries.size(), 2u);
  for (std::size_t s = 0; s < 2; ++s) {
    EXPECT_EQ(a.summaries[s].mean, b.summaries[s].mean);
    EXPECT_EQ(a.summaries[s].empirical_sd, b.summaries[s].empirical_sd);
    EXPECT_EQ(a.summaries[s].run_ll, b.summaries[s].run_ll);
    EXPECT_EQ(a.summaries[s].runs + a.summaries[s].excluded, 4u);
  }
  EXPECT_EQ(a.summaries[1].parameter_names, (std::vector<std::string>{"beta_t", "beta_c", "alpha"}));
}

TEST(Replication, ForcedEqualSeedsGiveZeroSpread) {
  SimConfig c;
  c.n_obs = 1000;
  ReplicationOptions o;
  o.reuse_master_seed = true;
  const auto study = replicate_study(c, linear_and_htf(), 2, o);
  for (const auto& s : study.summaries) {
    ASSERT_EQ(s.runs, 2u);
    for (double sd : s.empirical_sd) EXPECT_EQ(sd, 0.0);
  }
}

TEST(Replication, NeedsTwoRuns) {
  EXPECT_THROW(replicate_study(SimConfig{}, linear_and_htf(), 1), InvalidSpecError);
}

TEST(Replication, FailingRunsAreCountedNotFatal) {
  // A huge cost coefficient makes every choice deterministic: the fits separate.
  SimConfig c;
  c.n_obs = 200;
  c.beta_c = -400.0;
  const auto study = replicate_study(c, linear_and_htf(), 3);
  for (const auto& s : study.summaries) {
    EXPECT_EQ(s.runs + s.excluded, 3u);
    EXPECT_EQ(s.excluded, 3u) << s.label;
  }
}
