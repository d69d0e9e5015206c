#include <cmath>

#include <gtest/gtest.h>

#include "threshlogit/estimation.hpp"
#include "threshlogit/synthetic.hpp"

using namespace threshlogit;

namespace {

UtilitySpec spec_of(TransformKind k) {
  UtilitySpec s;
  s.transform.kind = k;
  return s;
}

// One dataset shared by the fits below; generation is cheap but fitting is not.
const std::vector<ChoiceRecord>& shared_data() {
  static const std::vector<ChoiceRecord> data = [] {
    SimConfig c;
    c.seed = 2024;
    return generate_dataset(c);
  }();
  return data;
}

void expect_within_3se(const FitResult& f, const std::string& name, double truth) {
  const auto se = f.std_error(name);
  ASSERT_TRUE(se) << name;
  EXPECT_LT(std::abs(f.estimate(name) - truth), 3.0 * *se) << name << " estimate " << f.estimate(name) << " se " << *se;
}

}  // namespace

TEST(Wald, Examples) {
  EXPECT_NEAR(wald_test(-0.596, 0.019, -0.600), 0.8334, 1e-3);
  EXPECT_EQ(wald_test(-0.6, 0.02, -0.6), 1.0);
  EXPECT_NEAR(wald_test(1.600, 0.175, 1.0), 0.0006, 1e-4);
  EXPECT_THROW(wald_test(1.0, 0.0, 1.0), DomainError);
  EXPECT_THROW(wald_test(1.0, -0.1, 1.0), DomainError);
}

TEST(Fit, LinearRecoversLinearTruth) {
  SimConfig c;
  c.seed = 77;
  c.dgp_transform = {TransformKind::Linear, 1.0};
  const auto data = generate_dataset(c);
  const FitResult f = fit(data, spec_of(TransformKind::Linear));
  ASSERT_TRUE(f.converged);
  ASSERT_TRUE(f.covariance);
  expect_within_3se(f, "beta_t", -0.1);
  expect_within_3se(f, "beta_c", -0.6);
  EXPECT_EQ(f.null_ll, 5000 * std::log(0.5));
  EXPECT_EQ(f.n_obs, 5000u);
  EXPECT_EQ(f.n_free_params, 2u);
  EXPECT_LT(f.gradient_max_norm, 1e-6);
}

TEST(Fit, HardThresholdRecoversDefaultTruth) {
  const FitResult f = fit(shared_data(), spec_of(TransformKind::HTF));
  ASSERT_TRUE(f.converged);
  ASSERT_TRUE(f.covariance);
  expect_within_3se(f, "beta_t", -0.1);
  expect_within_3se(f, "beta_c", -0.6);
  expect_within_3se(f, "alpha", 5.0);
  EXPECT_EQ(f.spec.transform.alpha, f.estimate("alpha"));
}

TEST(Fit, CovarianceIsSymmetricPsdAndMatchesStdErrors) {
  const FitResult f = fit(shared_data(), spec_of(TransformKind::STF1));
  ASSERT_TRUE(f.covariance);
  const Eigen::MatrixXd& cov = *f.covariance;
  EXPECT_LT((cov - cov.transpose()).cwiseAbs().maxCoeff(), 1e-8);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  EXPECT_GT(es.eigenvalues().minCoeff(), -1e-8);
  for (Eigen::Index i = 0; i < cov.rows(); ++i) {
    EXPECT_EQ(f.std_errors[static_cast<std::size_t>(i)], std::sqrt(cov(i, i)));
  }
}

TEST(Fit, NestedModelsNeverFitWorseThanLinear) {
  const FitResult lin = fit(shared_data(), spec_of(TransformKind::Linear));
  for (auto k : {TransformKind::HTF, TransformKind::STF1, TransformKind::STF2, TransformKind::Power}) {
    const FitResult f = fit(shared_data(), spec_of(k));
    EXPECT_GE(f.final_ll, lin.final_ll - 1e-6) << to_string(k);
    EXPECT_GE(f.final_ll, f.null_ll);
  }
  EXPECT_GT(fit(shared_data(), spec_of(TransformKind::HTF)).final_ll, lin.final_ll);
}

TEST(Fit, IsDeterministic) {
  const FitResult a = fit(shared_data(), spec_of(TransformKind::STF2));
  const FitResult b = fit(shared_data(), spec_of(TransformKind::STF2));
  EXPECT_EQ(a.final_ll, b.final_ll);
  EXPECT_EQ(a.estimates, b.estimates);
}

TEST(Fit, PerfectSeparationIsFlagged) {
  // Only records with dt > 0 > dc, all choosing alternative 1: a steep enough
  // time coefficient classifies every record correctly.
  std::vector<ChoiceRecord> data;
  for (const auto& r : shared_data()) {
    if (r.dt > 0.0 && data.size() < 300) data.push_back(r);
  }
  for (auto& r : data) r.chose_alt1 = true;
  const FitResult f = fit(data, spec_of(TransformKind::Linear));
  EXPECT_FALSE(f.converged);
  EXPECT_FALSE(f.covariance);
}

TEST(Fit, IterationCapYieldsNonConverged) {
  FitOptions o;
  o.max_iterations = 1;
  const FitResult f = fit(shared_data(), spec_of(TransformKind::STF1), o);
  EXPECT_FALSE(f.converged);
}

TEST(Fit, InputValidation) {
  EXPECT_THROW(fit(std::vector<ChoiceRecord>{}, spec_of(TransformKind::Linear)), DataError);
  UtilitySpec two = spec_of(TransformKind::Linear);
  two.n_groups = 2;
  std::vector<ChoiceRecord> data(shared_data().begin(), shared_data().begin() + 50);
  EXPECT_THROW(fit(data, two), DataError);  // group 1 has no records
}

TEST(Fit, ExtendedModelRecoversTruth) {
  SimConfig c;
  c.n_obs = 20000;
  c.seed = 5;
  c.beta_t = -0.15;
  c.beta_c = -0.29;
  c.dgp_transform = {TransformKind::STF2, 2.3};
  c.extended = ExtendedDgp{};
  const auto data = generate_dataset(c);
  UtilitySpec s = dgp_utility_spec(c);
  const FitResult f = fit(data, s);
  ASSERT_TRUE(f.converged);
  ASSERT_TRUE(f.covariance);
  expect_within_3se(f, "beta_t", -0.15);
  expect_within_3se(f, "beta_c", -0.29);
  expect_within_3se(f, "alpha", 2.3);
  expect_within_3se(f, "beta_h", -0.05);
  expect_within_3se(f, "beta_k", -1.43);
  expect_within_3se(f, "lambda_i", -0.25);
  expect_within_3se(f, "lambda_t", -0.4);
  expect_within_3se(f, "scale_1", 0.8);
}
