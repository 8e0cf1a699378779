#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "check.hpp"
#include "lcvi/eight_schools.hpp"
#include "lcvi/gaussian_mean_model.hpp"
#include "lcvi/meanfield.hpp"

namespace lcvi {
namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);
const double kUnitEntropy = 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e);

// theta ~ N(0, 1), y ~ N(theta, 1), q = N(m, s^2).
double conjugate_elbo(double y, double m, double s) {
  const double e_prior = -kHalfLog2Pi - 0.5 * (m * m + s * s);
  const double e_lik = -kHalfLog2Pi - 0.5 * ((y - m) * (y - m) + s * s);
  return e_prior + e_lik + kUnitEntropy + std::log(s);
}

TEST(LogQ, Examples) {
  EXPECT_NEAR(log_q(std::vector<double>{0.0}, VariationalParams({0.0}, {0.0})),
              -kHalfLog2Pi, 1e-15);
  EXPECT_NEAR(log_q(std::vector<double>{0.0, 0.0}, VariationalParams({0.0, 0.0}, {0.0, 0.0})),
              -std::log(2.0 * std::numbers::pi), 1e-15);
  EXPECT_NEAR(log_q(std::vector<double>{2.0}, VariationalParams({0.0}, {std::log(2.0)})),
              -kHalfLog2Pi - std::log(2.0) - 0.5, 1e-15);
}

TEST(Entropy, Examples) {
  EXPECT_NEAR(entropy(VariationalParams({0.0}, {0.0})), 1.4189385332, 1e-9);
  EXPECT_NEAR(entropy(VariationalParams({0.0}, {std::log(2.0)})),
              kUnitEntropy + std::log(2.0), 1e-14);
  EXPECT_NEAR(entropy(VariationalParams::constant(3, 0.0, 1.0)), 3 * kUnitEntropy, 1e-14);
}

TEST(Entropy, MatchesMonteCarloNegativeLogQ) {
  const VariationalParams lam({0.5, -1.0, 2.0}, {0.3, -0.8, 1.1});
  RandomStream s = seed_rng(3).stream();
  std::vector<double> v(20000);
  for (auto& x : v) x = -log_q(reparameterize(draw_noise(s, 3), lam), lam);
  const auto ms = testing::mean_se(v);
  EXPECT_LT(std::abs(ms.mean - entropy(lam)), 3.0 * ms.se);
}

TEST(Elbo, PriorOnlyModelWithMatchingQIsNearZero) {
  const GaussianMeanModel prior(0.0, 1.0, 1.0, {});
  const auto est = estimate_elbo(prior, full_batch(prior), VariationalParams({0.0}, {0.0}),
                                 10000, seed_rng(1));
  EXPECT_LT(std::abs(est.value), 0.05);
  EXPECT_EQ(est.n_samples, 10000);
}

TEST(Elbo, HighBudgetMatchesClosedForm) {
  const GaussianMeanModel toy(0.0, 1.0, 1.0, {2.0});
  const double m = 0.3, s = 0.6;
  const auto est = estimate_elbo(toy, full_batch(toy), VariationalParams({m}, {std::log(s)}),
                                 100000, seed_rng(2));
  EXPECT_NEAR(est.value, conjugate_elbo(2.0, m, s), 0.01);
}

TEST(Elbo, UnbiasedAtSmallBudget) {
  const GaussianMeanModel toy(0.0, 1.0, 1.0, {2.0});
  const VariationalParams lam({0.3}, {std::log(0.6)});
  const RngState root = seed_rng(9);
  std::vector<double> v(200);
  for (int r = 0; r < 200; ++r) {
    v[r] = estimate_elbo(toy, full_batch(toy), lam, 10, root.split(r)).value;
  }
  const auto ms = testing::mean_se(v);
  const double reference =
      estimate_elbo(toy, full_batch(toy), lam, 100000, root.split(999)).value;
  EXPECT_LT(std::abs(ms.mean - reference), 3.0 * ms.se);
}

TEST(Elbo, VarianceShrinksWithBudget) {
  const EightSchoolsModel model = eight_schools_model();
  const auto lam = VariationalParams::constant(10, 1.0, 0.5);
  const RngState root = seed_rng(4);
  const auto variance = [&](int s_theta) {
    std::vector<double> v(200);
    for (int r = 0; r < 200; ++r) {
      v[r] = estimate_elbo(model, full_batch(model), lam, s_theta, root.split(r)).value;
    }
    const auto ms = testing::mean_se(v);
    return ms.se * ms.se * 200.0;
  };
  EXPECT_LT(variance(100), variance(1));
}

TEST(Elbo, GradientsMatchFiniteDifferences) {
  const EightSchoolsModel model = eight_schools_model();
  const Batch batch = full_batch(model);
  RandomStream draw = seed_rng(21).stream();
  for (int point = 0; point < 20; ++point) {
    std::vector<double> flat(20);
    for (int j = 0; j < 10; ++j) flat[j] = 2.0 * draw.normal();
    for (int j = 10; j < 20; ++j) flat[j] = -1.0 + 0.5 * draw.normal();
    flat[1] = 1.0 + 0.3 * draw.normal();  // keep tau draws moderate
    const RngState rng = seed_rng(100 + point);
    const auto f = [&](std::span<const double> x) {
      return estimate_elbo(model, batch, VariationalParams::unflatten(x), 5, rng).value;
    };
    const auto est = estimate_elbo(model, batch, VariationalParams::unflatten(flat), 5, rng);
    for (std::size_t j = 0; j < 10; ++j) {
      EXPECT_LT(testing::rel_err(est.grad_means[j], testing::central_diff(f, flat, j)), 1e-5)
          << "mu " << j << " at point " << point;
      EXPECT_LT(testing::rel_err(est.grad_log_scales[j], testing::central_diff(f, flat, 10 + j)),
                1e-5)
          << "rho " << j << " at point " << point;
    }
  }
}

TEST(Elbo, NonFiniteLogJointReportsTheta) {
  const GaussianMeanModel toy(0.0, 1.0, 1.0, {2.0});
  try {
    estimate_elbo(toy, full_batch(toy), VariationalParams({1e200}, {0.0}), 1, seed_rng(1));
    FAIL() << "expected NonFiniteDensity";
  } catch (const NonFiniteDensity& e) {
    ASSERT_EQ(e.theta().size(), 1u);
  }
}

TEST(Elbo, RejectsBadArguments) {
  const GaussianMeanModel toy(0.0, 1.0, 1.0, {2.0});
  EXPECT_THROW(estimate_elbo(toy, full_batch(toy), VariationalParams({0.0}, {0.0}), 0,
                             seed_rng(1)),
               std::invalid_argument);
  EXPECT_THROW(estimate_elbo(toy, full_batch(toy), VariationalParams::constant(2, 0.0, 1.0), 1,
                             seed_rng(1)),
               std::invalid_argument);
}

}  // namespace
}  // namespace lcvi
