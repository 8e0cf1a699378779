#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "check.hpp"
#include "lcvi/eight_schools.hpp"
#include "lcvi/gaussian_mean_model.hpp"
#include "lcvi/matrix_data.hpp"
#include "lcvi/pmf.hpp"
#include "lcvi/utility_term.hpp"

namespace lcvi {
namespace {

struct ConstantUtility {
  double c;
  UtilityPoint evaluate(double, double) const { return {c, 0.0, 0.0}; }
};

struct ConstantLoss {
  double c;
  LossPoint evaluate(double, double) const { return {c, 0.0, 0.0}; }
};

// theta ~ q = N(m, s^2), y = theta + sp * delta, u = exp(-gamma (y - h)^2).
// E_theta log E_delta u, in closed form.
double toy_expected_log_utility(double m, double s, double sp, double gamma, double h) {
  const double a = 1.0 + 2.0 * gamma * sp * sp;
  return -0.5 * std::log(a) - gamma * ((m - h) * (m - h) + s * s) / a;
}

GaussianMeanModel toy_with_targets(int n_targets, double predictive_sd) {
  std::vector<double> pred(n_targets, 0.0);
  GaussianMeanModel m(0.0, 1.0, 1.0, {0.5, 1.5}, pred);
  m.with_predictive_sd(predictive_sd);
  return m;
}

TEST(InnerExpectedUtility, ConstantStub) {
  const EightSchoolsModel model = eight_schools_model();
  const std::vector<double> theta(10, 1.0);
  for (int s_y : {1, 7, 100}) {
    EXPECT_NEAR(inner_expected_utility(model, theta, model.prediction_targets()[3], 0.0,
                                       ConstantUtility{0.3}, s_y, seed_rng(1)),
                0.3, 1e-14);
  }
}

TEST(InnerExpectedUtility, DeterministicPredictiveAtDecisionIsOne) {
  const auto toy = toy_with_targets(1, 0.0);
  const std::vector<double> theta{0.8};
  EXPECT_EQ(inner_expected_utility(toy, theta, toy.prediction_targets()[0], 0.8,
                                   UtilitySpec::native_exp_squared(), 10, seed_rng(1)),
            1.0);
}

TEST(InnerExpectedUtility, MatchesQuadratureOnEightSchools) {
  const EightSchoolsModel model = eight_schools_model();
  std::vector<double> theta(10);
  for (int j = 0; j < 10; ++j) theta[j] = 2.0 * j - 3.0;
  theta[1] = 4.0;
  const auto u = UtilitySpec::exp_transform(0.02, LossSpec::squared());
  for (std::size_t j : {0u, 2u, 7u}) {
    const Target& t = model.prediction_targets()[j];
    const double h = 5.0;
    const int n = 100000;
    // Replicate the inner average draw by draw to get its standard error.
    RandomStream stream = seed_rng(j).stream();
    std::vector<double> values(n);
    for (auto& v : values) {
      v = to_utility(u, predict(model, stream.normal(), theta, t), h);
    }
    const auto ms = testing::mean_se(values);
    const double estimate =
        inner_expected_utility(model, theta, t, h, u, n, seed_rng(j));
    EXPECT_NEAR(estimate, ms.mean, 1e-12);
    const double exact = testing::gaussian_expectation(
        [&](double y) { return to_utility(u, y, h); },
        model.predictive_location(theta, t), model.predictive_scale(theta, t));
    EXPECT_LT(std::abs(estimate - exact), 3.0 * ms.se);
  }
}

TEST(NaiveEstimator, ConstantUtility) {
  const EightSchoolsModel model = eight_schools_model();
  const auto lam = VariationalParams::constant(10, 0.5, 0.3);
  const DecisionSet h(8, 1.0);
  const auto est = estimate_utility_naive(model, full_batch(model), lam, h,
                                          ConstantUtility{2.5}, 4, 3, seed_rng(1));
  EXPECT_NEAR(est.value, 8.0 * std::log(2.5), 1e-12);
  for (double g : est.grad_means) EXPECT_EQ(g, 0.0);
  for (double g : est.grad_log_scales) EXPECT_EQ(g, 0.0);
  for (double g : est.grad_h) EXPECT_EQ(g, 0.0);
  EXPECT_EQ(est.kind, EstimatorKind::Naive);
}

TEST(NaiveEstimator, RejectsRobustMaxAndNonPositiveAverages) {
  const auto toy = toy_with_targets(2, 1.0);
  const VariationalParams lam({0.0}, {0.0});
  const DecisionSet h(2, 0.0);
  EXPECT_THROW(estimate_utility_naive(toy, full_batch(toy), lam, h,
                                      UtilitySpec::robust_max(5.0, LossSpec::squared()), 2, 2,
                                      seed_rng(1)),
               std::invalid_argument);
  try {
    estimate_utility_naive(toy, full_batch(toy), lam, h, ConstantUtility{0.0}, 2, 2, seed_rng(1));
    FAIL() << "expected domain_error";
  } catch (const std::domain_error& e) {
    EXPECT_NE(std::string(e.what()).find("prediction target 0"), std::string::npos);
  }
}

TEST(LinearizedEstimator, ConstantLoss) {
  const EightSchoolsModel model = eight_schools_model();
  const auto lam = VariationalParams::constant(10, 0.5, 0.3);
  const auto est = estimate_utility_linearized(model, full_batch(model), lam, DecisionSet(8, 0.0),
                                               ConstantLoss{3.0}, 4.0, 5, 2, seed_rng(1));
  EXPECT_NEAR(est.value, -8.0 * 3.0 / 4.0, 1e-12);
  EXPECT_THROW(estimate_utility_linearized(model, full_batch(model), lam, DecisionSet(8, 0.0),
                                           ConstantLoss{3.0}, 0.0, 5, 2, seed_rng(1)),
               std::invalid_argument);
}

TEST(LinearizedEstimator, SquaredLossDecisionGradientWithDeterministicPredictive) {
  const auto toy = toy_with_targets(3, 0.0);
  const double theta = 0.7;
  const VariationalParams point({theta}, {-800.0});
  const DecisionSet h(std::vector<double>{-1.0, 0.7, 2.5});
  for (double m : {1.0, 3.0}) {
    const auto est = estimate_utility_linearized(toy, full_batch(toy), point, h,
                                                 LossSpec::squared(), m, 50, 5, seed_rng(2));
    for (std::size_t i = 0; i < 3; ++i) {
      EXPECT_NEAR(est.grad_h[i], -2.0 * (h[i] - theta) / m, 1e-12);
    }
  }
}

TEST(Estimators, RejectMisalignedDecisions) {
  const auto toy = toy_with_targets(3, 1.0);
  EXPECT_THROW(estimate_utility_linearized(toy, full_batch(toy), VariationalParams({0.0}, {0.0}),
                                           DecisionSet(2, 0.0), LossSpec::squared(), 1.0, 2, 2,
                                           seed_rng(1)),
               std::invalid_argument);
}

// Finite differences of the estimator itself at fixed noise.
void check_gradients(const Model& model, const Batch& batch,
                     const CalibrationObjective& objective, std::uint64_t seed, int points,
                     double h_sd) {
  const std::size_t d = model.latent_dim();
  const std::size_t n = model.prediction_targets().size();
  RandomStream draw = seed_rng(seed).stream();
  for (int p = 0; p < points; ++p) {
    std::vector<double> x(2 * d + n);
    for (std::size_t j = 0; j < d; ++j) x[j] = draw.normal();
    for (std::size_t j = d; j < 2 * d; ++j) x[j] = -1.0 + 0.3 * draw.normal();
    for (std::size_t j = 2 * d; j < x.size(); ++j) x[j] = h_sd * draw.normal();
    const RngState rng = seed_rng(seed * 1000 + p);
    const auto eval = [&](std::span<const double> v) {
      return estimate_utility_term(model, batch,
                                   VariationalParams::unflatten(v.subspan(0, 2 * d)),
                                   DecisionSet(std::vector<double>(v.begin() + 2 * d, v.end())),
                                   objective, 3, 4, rng);
    };
    const auto est = eval(x);
    const auto value = [&](std::span<const double> v) { return eval(v).value; };
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double analytic = j < d       ? est.grad_means[j]
                              : j < 2 * d ? est.grad_log_scales[j - d]
                                          : est.grad_h[j - 2 * d];
      EXPECT_LT(testing::rel_err(analytic, testing::central_diff(value, x, j)), 1e-5)
          << "coordinate " << j << " at point " << p;
    }
  }
}

TEST(Estimators, GradientsMatchFiniteDifferencesOnEightSchools) {
  const EightSchoolsModel model = eight_schools_model();
  const Batch batch = full_batch(model);
  check_gradients(model, batch,
                  CalibrationObjective::naive(UtilitySpec::exp_transform(0.01, LossSpec::squared())),
                  1, 20, 5.0);
  check_gradients(model, batch,
                  CalibrationObjective::naive(UtilitySpec::exp_transform(0.05, LossSpec::linex(0.2))),
                  2, 20, 5.0);
  check_gradients(model, batch, CalibrationObjective::linearized(LossSpec::squared(), 30.0), 3,
                  20, 5.0);
  check_gradients(model, batch, CalibrationObjective::linearized(LossSpec::linex(-0.1), 5.0), 4,
                  20, 5.0);
}

TEST(Estimators, GradientsMatchFiniteDifferencesOnPmfMinibatch) {
  const PmfModel model = pmf_model(generate_synthetic_matrix(5, 4, 2, 1.0, 2), 2, 1.0, 1.0, 1.0);
  const Batch batch = make_batch(model, std::vector<std::size_t>{0, 3});
  check_gradients(model, batch, CalibrationObjective::naive(UtilitySpec::native_exp_squared()), 5,
                  20, 1.0);
  check_gradients(model, batch, CalibrationObjective::linearized(LossSpec::squared(), 2.0), 6, 20,
                  1.0);
}

TEST(Estimators, MinibatchTouchesOnlyItsDecisions) {
  const PmfModel model = pmf_model(generate_synthetic_matrix(5, 4, 2, 1.0, 2), 2, 1.0, 1.0, 1.0);
  const Batch batch = make_batch(model, std::vector<std::size_t>{1});
  const auto owned = model.prediction_targets_in_row(1);
  const auto est = estimate_utility_linearized(
      model, batch, VariationalParams::constant(model.latent_dim(), 0.1, 0.5),
      DecisionSet(model.prediction_targets().size(), 3.0), LossSpec::squared(), 1.0, 2, 2,
      seed_rng(1));
  for (std::size_t i = 0; i < est.grad_h.size(); ++i) {
    const bool in_batch = std::find(owned.begin(), owned.end(), i) != owned.end();
    if (!in_batch) EXPECT_EQ(est.grad_h[i], 0.0);
    else EXPECT_NE(est.grad_h[i], 0.0);
  }
}

TEST(Estimators, Deterministic) {
  const EightSchoolsModel model = eight_schools_model();
  const auto lam = VariationalParams::constant(10, 1.0, 0.5);
  const auto obj = CalibrationObjective::linearized(LossSpec::tilted(0.2), 10.0);
  const auto a = estimate_utility_term(model, full_batch(model), lam, DecisionSet(8, 2.0), obj,
                                       30, 10, seed_rng(5));
  const auto b = estimate_utility_term(model, full_batch(model), lam, DecisionSet(8, 2.0), obj,
                                       30, 10, seed_rng(5));
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.grad_means, b.grad_means);
  EXPECT_EQ(a.grad_h, b.grad_h);
}

TEST(Invariance, ScaledUtilityShiftsValueAndKeepsGradients) {
  const EightSchoolsModel model = eight_schools_model();
  const auto lam = VariationalParams::constant(10, 1.0, 0.5);
  const DecisionSet h(std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8});
  const auto base = UtilitySpec::exp_transform(0.02, LossSpec::squared());
  const auto run = [&](double alpha) {
    return estimate_utility_naive(model, full_batch(model), lam, h, AffineUtility(base, alpha),
                                  20, 10, seed_rng(3));
  };
  const auto ref = run(1.0);
  for (double alpha : {0.25, 2.0, 8.0, 1024.0}) {
    const auto est = run(alpha);
    EXPECT_NEAR(est.value - ref.value, 8.0 * std::log(alpha), 1e-9);
    EXPECT_EQ(est.grad_means, ref.grad_means);
    EXPECT_EQ(est.grad_log_scales, ref.grad_log_scales);
    EXPECT_EQ(est.grad_h, ref.grad_h);
  }
  for (double alpha : {0.3, 7.0}) {
    const auto est = run(alpha);
    EXPECT_NEAR(est.value - ref.value, 8.0 * std::log(alpha), 1e-9);
    for (std::size_t j = 0; j < 10; ++j) {
      EXPECT_LT(testing::rel_err(est.grad_means[j], ref.grad_means[j], 1e-300), 1e-12);
    }
  }
}

TEST(NaiveEstimator, UnderflowingUtilityMatchesUnscaled) {
  const EightSchoolsModel model = eight_schools_model();
  const auto lam = VariationalParams::constant(10, 1.0, 0.5);
  const DecisionSet h(std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8});
  const auto base = UtilitySpec::exp_transform(0.02, LossSpec::squared());
  const auto run = [&](double alpha) {
    return estimate_utility_naive(model, full_batch(model), lam, h, AffineUtility(base, alpha),
                                  20, 10, seed_rng(3));
  };
  // Every inner sum of the scaled utility is below 1e-250.
  const auto ref = run(1.0);
  const auto tiny = run(1e-300);
  EXPECT_NEAR(tiny.value - ref.value, 8.0 * std::log(1e-300), 1e-9);
  for (std::size_t j = 0; j < 10; ++j) {
    EXPECT_LT(testing::rel_err(tiny.grad_means[j], ref.grad_means[j], 1e-300), 1e-12);
    EXPECT_LT(testing::rel_err(tiny.grad_log_scales[j], ref.grad_log_scales[j], 1e-300), 1e-12);
  }
  for (std::size_t i = 0; i < 8; ++i) {
    EXPECT_LT(testing::rel_err(tiny.grad_h[i], ref.grad_h[i], 1e-300), 1e-12);
  }
}

TEST(NaiveEstimator, NativeUtilityFarFromDecisionsStaysFinite) {
  // exp(-(h - y)^2) is exactly 0 in double precision for every draw here.
  const PmfModel model = pmf_model(generate_synthetic_matrix(5, 4, 2, 1.0, 2), 2, 1.0, 1.0, 1.0);
  const Batch batch = full_batch(model);
  const auto est = estimate_utility_naive(
      model, batch, VariationalParams::constant(model.latent_dim(), 0.1, 0.5),
      DecisionSet(model.prediction_targets().size(), 100.0), UtilitySpec::native_exp_squared(), 5,
      5, seed_rng(1));
  EXPECT_TRUE(std::isfinite(est.value));
  EXPECT_LT(est.value, -5000.0);
  check_gradients(model, batch, CalibrationObjective::naive(UtilitySpec::native_exp_squared()), 7,
                  5, 100.0);
}

double gradient_norm(const UtilityTermEstimate& e) {
  double acc = 0.0;
  for (double g : e.grad_means) acc += g * g;
  for (double g : e.grad_log_scales) acc += g * g;
  for (double g : e.grad_h) acc += g * g;
  return std::sqrt(acc);
}

TEST(Invariance, OffsetUtilityVanishes) {
  const EightSchoolsModel model = eight_schools_model();
  const auto lam = VariationalParams::constant(10, 1.0, 0.5);
  const DecisionSet h(8, 4.0);
  const auto base = UtilitySpec::exp_transform(0.02, LossSpec::squared());
  double previous = INFINITY;
  double first = 0.0;
  for (double beta : {0.0, 1.0, 10.0, 100.0, 1000.0}) {
    const double n = gradient_norm(estimate_utility_naive(
        model, full_batch(model), lam, h, AffineUtility(base, 1.0, beta), 20, 10, seed_rng(4)));
    if (beta == 0.0) first = n;
    EXPECT_LT(n, previous);
    previous = n;
  }
  EXPECT_LT(previous, 1e-3 * first);
}

TEST(Invariance, LinearizedArgmaxIgnoresM) {
  const auto toy = toy_with_targets(1, 1.0);
  const VariationalParams lam({0.4}, {std::log(0.5)});
  const auto argmax = [&](double m) {
    double best = -INFINITY, best_h = 0.0;
    for (int k = -200; k <= 200; ++k) {
      const double hv = k * 1e-2;
      const double v = estimate_utility_linearized(toy, full_batch(toy), lam,
                                                   DecisionSet(1, hv), LossSpec::linex(0.8), m,
                                                   10, 10, seed_rng(6))
                           .value;
      if (v > best) best = v, best_h = hv;
    }
    return best_h;
  };
  const double ref = argmax(1.0);
  EXPECT_EQ(argmax(10.0), ref);
  EXPECT_EQ(argmax(100.0), ref);
}

TEST(Statistics, LinearizedIsUnbiased) {
  const auto toy = toy_with_targets(1, 1.0);
  const double m = 0.4, s = 0.5, h = 1.1, big_m = 3.0;
  const VariationalParams lam({m}, {std::log(s)});
  std::vector<double> v(500);
  for (int r = 0; r < 500; ++r) {
    v[r] = estimate_utility_linearized(toy, full_batch(toy), lam, DecisionSet(1, h),
                                       LossSpec::squared(), big_m, 2, 2, seed_rng(r))
               .value;
  }
  const auto ms = testing::mean_se(v);
  const double exact = -testing::gaussian_expectation(
                           [&](double y) { return (y - h) * (y - h); }, m,
                           std::sqrt(s * s + 1.0)) /
                       big_m;
  EXPECT_LT(std::abs(ms.mean - exact), 3.0 * ms.se);
}

TEST(Statistics, NaiveBiasShrinksWithInnerSamples) {
  const auto toy = toy_with_targets(1, 1.0);
  const double m = 0.4, s = 0.5, h = 1.1, gamma = 0.5;
  const VariationalParams lam({m}, {std::log(s)});
  const double exact = toy_expected_log_utility(m, s, 1.0, gamma, h);
  const auto bias = [&](int s_y) {
    std::vector<double> v(500);
    for (int r = 0; r < 500; ++r) {
      v[r] = estimate_utility_naive(toy, full_batch(toy), lam, DecisionSet(1, h),
                                    UtilitySpec::exp_transform(gamma, LossSpec::squared()), 1,
                                    s_y, seed_rng(r))
                 .value;
    }
    return testing::mean_se(v).mean - exact;
  };
  const double b1 = bias(1);
  const double b100 = bias(100);
  EXPECT_LT(b1, 0.0);  // log of an inner average underestimates on average
  EXPECT_LT(std::abs(b100), std::abs(b1));
}

TEST(CalibratedBound, Composition) {
  ElboEstimate e;
  e.value = -3.0;
  e.grad_means = {1.0, 2.0};
  e.grad_log_scales = {0.5, -0.5};
  UtilityTermEstimate u;
  u.value = -1.5;
  u.grad_means = {0.25, -1.0};
  u.grad_log_scales = {0.0, 1.0};
  u.grad_h = {3.0};
  const auto b = calibrated_bound(e, u);
  EXPECT_EQ(b.value, -4.5);
  EXPECT_EQ(b.grad_means, (std::vector<double>{1.25, 1.0}));
  EXPECT_EQ(b.grad_log_scales, (std::vector<double>{0.5, 0.5}));
  EXPECT_EQ(b.grad_h, (std::vector<double>{3.0}));

  UtilityTermEstimate zero;
  zero.grad_means = {0.0, 0.0};
  zero.grad_log_scales = {0.0, 0.0};
  zero.grad_h = {0.0};
  const auto r = calibrated_bound(e, zero);
  EXPECT_EQ(r.value, e.value);
  EXPECT_EQ(r.grad_means, e.grad_means);
  EXPECT_EQ(r.grad_log_scales, e.grad_log_scales);
}

}  // namespace
}  // namespace lcvi
