#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "lcvi/meanfield.hpp"
#include "lcvi/model.hpp"
#include "lcvi/predictive.hpp"
#include "lcvi/random.hpp"
#include "lcvi/utility.hpp"
#include "lcvi/variational_params.hpp"

namespace lcvi {

template <class U>
concept UtilityFunction = requires(const U& u, double y, double h) {
  { u.evaluate(y, h) } -> std::convertible_to<UtilityPoint>;
};

template <class L>
concept LossFunction = requires(const L& l, double y, double h) {
  { l.evaluate(y, h) } -> std::convertible_to<LossPoint>;
};

enum class EstimatorKind { Naive, Linearized };

/// Estimate of the utility-dependent term and its gradients. grad_h is
/// aligned with the full DecisionSet; entries outside the batch are zero.
struct UtilityTermEstimate {
  double value = 0.0;
  std::vector<double> grad_means;
  std::vector<double> grad_log_scales;
  std::vector<double> grad_h;
  EstimatorKind kind = EstimatorKind::Naive;
  int s_theta = 0;
  int s_y = 0;
};

/// Monte Carlo average of u(g(delta, theta, target), h) over s_y deltas
/// drawn from rng.stream().
template <UtilityFunction U>
double inner_expected_utility(const Model& model,
                              std::span<const double> theta,
                              const Target& target, double h, const U& utility,
                              int s_y, const RngState& rng) {
  if (s_y < 1) throw std::invalid_argument("inner_expected_utility: s_y < 1");
  RandomStream stream = rng.stream();
  const double loc = model.predictive_location(theta, target);
  const double scale = model.predictive_scale(theta, target);
  double acc = 0.0;
  for (int k = 0; k < s_y; ++k) {
    const double u = utility.evaluate(loc + scale * stream.normal(), h).value;
    if (!std::isfinite(u)) {
      throw std::domain_error("inner_expected_utility: non-finite utility");
    }
    acc += u;
  }
  return acc / static_cast<double>(s_y);
}

namespace detail {

inline constexpr std::uint64_t kEpsRole = 11;
inline constexpr std::uint64_t kDeltaRole = 12;

struct NoLogForm {};

/// Inner sums below this are recomputed in the log domain when the utility
/// has one: exp(-gamma * loss) underflows long before its mean is zero.
inline constexpr double kUnderflowGuard = 1e-250;

/**
 * Shared double-reparameterized nested estimator. For every latent draw s
 * and batch target t it forms the inner mean F = 1/S_y sum_delta f(y, h_t),
 * then adds outer(F) to the value and chains d outer/dF through
 * dF/dh (decisions) and dF/dy * dg/dtheta * df/dlambda (variational
 * parameters).
 *
 * `point(y, h)` returns (f, df/dy, df/dh); `outer(F, t)` returns
 * {contribution, d contribution / dF}.
 */
template <class Point, class Outer, class LogPoint = NoLogForm>
UtilityTermEstimate nested_estimate(const Model& model, const Batch& batch,
                                    const VariationalParams& lambda,
                                    const DecisionSet& decisions, int s_theta,
                                    int s_y, const RngState& rng,
                                    const Point& point, const Outer& outer,
                                    EstimatorKind kind,
                                    const LogPoint& log_point = {}) {
  if (s_theta < 1 || s_y < 1) {
    throw std::invalid_argument("utility estimator: sample counts must be >= 1");
  }
  const std::size_t d = model.latent_dim();
  const auto all_targets = model.prediction_targets();
  if (lambda.dim() != d) {
    throw std::invalid_argument("utility estimator: lambda dimension mismatch");
  }
  if (decisions.size() != all_targets.size()) {
    throw std::invalid_argument(
        "utility estimator: decision set has " +
        std::to_string(decisions.size()) + " entries for " +
        std::to_string(all_targets.size()) + " prediction targets");
  }
  const auto support = model.support();
  const std::vector<std::size_t> targets =
      batch_prediction_targets(model, batch);

  UtilityTermEstimate est;
  est.kind = kind;
  est.s_theta = s_theta;
  est.s_y = s_y;
  est.grad_means.assign(d, 0.0);
  est.grad_log_scales.assign(d, 0.0);
  est.grad_h.assign(decisions.size(), 0.0);

  std::vector<double> scales(d);
  for (std::size_t j = 0; j < d; ++j) scales[j] = std::exp(lambda.log_scales[j]);
  std::vector<double> eps(d), v(d), theta(d), gtheta(d);

  const RngState eps_rng = rng.split(kEpsRole);
  const RngState delta_rng = rng.split(kDeltaRole);
  const double inv_sy = 1.0 / static_cast<double>(s_y);

  for (int s = 0; s < s_theta; ++s) {
    const auto s_key = static_cast<std::uint64_t>(s);
    RandomStream eps_stream = eps_rng.split(s_key).stream();
    fill_normal(eps_stream, eps);
    for (std::size_t j = 0; j < d; ++j) {
      v[j] = lambda.means[j] + scales[j] * eps[j];
    }
    constrain(v, support, theta);
    std::fill(gtheta.begin(), gtheta.end(), 0.0);
    const RngState sample_rng = delta_rng.split(s_key);

    for (std::size_t t : targets) {
      const Target& target = all_targets[t];
      const double h = decisions[t];
      const double loc = model.predictive_location(theta, target);
      const double scale = model.predictive_scale(theta, target);
      RandomStream ds = sample_rng.split(t).stream();
      double f = 0.0, f_y = 0.0, f_y_delta = 0.0, f_h = 0.0;
      for (int k = 0; k < s_y; ++k) {
        const double delta = ds.normal();
        const auto p = point(loc + scale * delta, h);
        f += p.value;
        f_y += p.d_dy;
        f_y_delta += p.d_dy * delta;
        f_h += p.d_dh;
      }
      double shift = 0.0;
      if constexpr (!std::is_same_v<LogPoint, NoLogForm>) {
        if (f < kUnderflowGuard) {
          // log mean u = m + log(1/S_y sum exp(log u - m)); the derivative
          // sums are rescaled by the same exp(-m), so their ratios to f hold.
          double m = -INFINITY;
          ds = sample_rng.split(t).stream();
          for (int k = 0; k < s_y; ++k) {
            m = std::max(m, log_point(loc + scale * ds.normal(), h).value);
          }
          if (std::isfinite(m)) {
            shift = m;
            f = f_y = f_y_delta = f_h = 0.0;
            ds = sample_rng.split(t).stream();
            for (int k = 0; k < s_y; ++k) {
              const double delta = ds.normal();
              const auto p = log_point(loc + scale * delta, h);
              const double w = std::exp(p.value - m);
              f += w;
              f_y += w * p.d_dy;
              f_y_delta += w * p.d_dy * delta;
              f_h += w * p.d_dh;
            }
          }
        }
      }
      if (!std::isfinite(f) || !std::isfinite(f_y) || !std::isfinite(f_h)) {
        throw std::domain_error("utility estimator: non-finite value for "
                                "prediction target " +
                                std::to_string(t));
      }
      auto [contribution, weight] = outer(f * inv_sy, t);
      contribution += shift;
      est.value += contribution;
      est.grad_h[t] += weight * f_h * inv_sy;
      model.accumulate_predictive_gradient(theta, target,
                                           weight * f_y * inv_sy,
                                           weight * f_y_delta * inv_sy, gtheta);
    }

    pullback_gradient(v, support, gtheta);
    for (std::size_t j = 0; j < d; ++j) {
      est.grad_means[j] += gtheta[j];
      est.grad_log_scales[j] += gtheta[j] * scales[j] * eps[j];
    }
  }

  const double factor = batch.scale / static_cast<double>(s_theta);
  est.value *= factor;
  for (auto& g : est.grad_means) g *= factor;
  for (auto& g : est.grad_log_scales) g *= factor;
  for (auto& g : est.grad_h) g *= factor;
  return est;
}

struct OuterResult {
  double contribution;
  double weight;
};

}  // namespace detail

/**
 * Plug-in (naive) nested estimator
 *
 *   U ~= 1/S_theta sum_eps log( 1/S_y sum_delta u(g(delta, f(eps, lambda)), h) )
 *
 * summed over the batch's prediction targets and scaled to the full data.
 * Slightly biased (log of an inner average). Requires a strictly positive
 * utility; a non-positive inner average raises std::domain_error naming the
 * target.
 */
template <UtilityFunction U>
UtilityTermEstimate estimate_utility_naive(const Model& model,
                                           const Batch& batch,
                                           const VariationalParams& lambda,
                                           const DecisionSet& decisions,
                                           const U& utility, int s_theta,
                                           int s_y, const RngState& rng) {
  if constexpr (requires { utility.strictly_positive(); }) {
    if (!utility.strictly_positive()) {
      throw std::invalid_argument(
          "naive estimator needs a strictly positive utility; use the "
          "linearized estimator for M - loss utilities");
    }
  }
  const auto point = [&utility](double y, double h) {
    return UtilityPoint(utility.evaluate(y, h));
  };
  const auto outer = [](double mean_u, std::size_t t) {
    if (!(mean_u > 0.0) || !std::isfinite(mean_u)) {
      throw std::domain_error(
          "naive estimator: inner expected utility " + std::to_string(mean_u) +
          " is not positive for prediction target " + std::to_string(t));
    }
    return detail::OuterResult{std::log(mean_u), 1.0 / mean_u};
  };
  if constexpr (requires(double y, double h) { utility.log_evaluate(y, h); }) {
    if (utility.has_log_form()) {
      const auto log_point = [&utility](double y, double h) {
        return UtilityPoint(utility.log_evaluate(y, h));
      };
      return detail::nested_estimate(model, batch, lambda, decisions, s_theta, s_y, rng,
                                     point, outer, EstimatorKind::Naive, log_point);
    }
  }
  return detail::nested_estimate(model, batch, lambda, decisions, s_theta, s_y,
                                 rng, point, outer, EstimatorKind::Naive);
}

/**
 * Linearized loss-based estimator
 *
 *   U ~= -1/(M S_theta S_y) sum_eps sum_delta loss(g(delta, f(eps, lambda)), h)
 *
 * Unbiased for the linearized term; M only rescales it.
 */
template <LossFunction L>
UtilityTermEstimate estimate_utility_linearized(
    const Model& model, const Batch& batch, const VariationalParams& lambda,
    const DecisionSet& decisions, const L& loss, double m, int s_theta,
    int s_y, const RngState& rng) {
  if (!(m > 0.0) || !std::isfinite(m)) {
    throw std::invalid_argument("linearized estimator: M must be positive");
  }
  const auto point = [&loss](double y, double h) {
    const LossPoint p = loss.evaluate(y, h);
    return UtilityPoint{p.value, p.d_dy, p.d_dh};
  };
  const double inv_m = 1.0 / m;
  const auto outer = [inv_m](double mean_loss, std::size_t) {
    return detail::OuterResult{-mean_loss * inv_m, -inv_m};
  };
  return detail::nested_estimate(model, batch, lambda, decisions, s_theta, s_y,
                                 rng, point, outer, EstimatorKind::Linearized);
}

/// ELBO + weight * U with the joint gradient over (lambda, {h}).
struct CalibratedBound {
  double value = 0.0;
  std::vector<double> grad_means;
  std::vector<double> grad_log_scales;
  std::vector<double> grad_h;
};

CalibratedBound calibrated_bound(const ElboEstimate& elbo,
                                 const UtilityTermEstimate& u_term,
                                 double weight = 1.0);

/// Which estimator and utility the calibration term uses.
struct CalibrationObjective {
  EstimatorKind estimator = EstimatorKind::Linearized;
  UtilitySpec utility;      // naive estimator
  LossSpec loss;            // linearized estimator
  double m = 1.0;           // linearized estimator
  double weight = 1.0;      // 0 reduces every regime to standard VI

  static CalibrationObjective naive(UtilitySpec utility);
  static CalibrationObjective linearized(LossSpec loss, double m);

  void validate() const;
};

UtilityTermEstimate estimate_utility_term(const Model& model,
                                          const Batch& batch,
                                          const VariationalParams& lambda,
                                          const DecisionSet& decisions,
                                          const CalibrationObjective& objective,
                                          int s_theta, int s_y,
                                          const RngState& rng);

}  // namespace lcvi
