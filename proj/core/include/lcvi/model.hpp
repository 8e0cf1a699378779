#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lcvi/reparam.hpp"

namespace lcvi {

/// One predicted or observed scalar. `row` is the minibatching unit (a user
/// row for matrix models, a school for eight schools); `col` addresses the
/// entry inside the row.
struct Target {
  std::size_t row = 0;
  std::size_t col = 0;
  double observed = 0.0;
};

/// Rows participating in one stochastic step. `scale` multiplies the
/// data-dependent terms so that a minibatch estimates the full-data value.
struct Batch {
  std::vector<std::size_t> rows;
  double scale = 1.0;
};

/**
 * A differentiable probabilistic model together with its predictive
 * reparameterization
 *
 *   y = g(delta, theta, target) = location(theta, target)
 *                                 + scale(theta, target) * delta,
 *
 * delta ~ N(0, 1). All theta arguments are in the constrained space; the
 * support() transforms map unconstrained latents there.
 *
 * Implementations must be pure and reentrant.
 */
class Model {
 public:
  virtual ~Model() = default;

  virtual std::string name() const = 0;
  virtual std::size_t latent_dim() const = 0;
  virtual std::span<const SupportTransform> support() const = 0;
  virtual std::vector<std::string> latent_names() const;

  virtual std::size_t num_rows() const = 0;

  /// Cells with observations used by the likelihood.
  virtual std::span<const Target> train_targets() const = 0;

  /// Points that receive a decision h_i in the calibration term. `observed`
  /// is never read during fitting.
  virtual std::span<const Target> prediction_targets() const = 0;

  /// Points whose observed values score decisions after fitting (held-out
  /// data). Defaults to prediction_targets().
  virtual std::span<const Target> evaluation_targets() const {
    return prediction_targets();
  }

  /// Indices into prediction_targets() owned by `row`.
  virtual std::span<const std::size_t> prediction_targets_in_row(
      std::size_t row) const = 0;

  /// log p(data_batch, theta) with the likelihood scaled by batch.scale.
  /// `grad` (latent_dim entries) is overwritten with d/d theta.
  virtual double log_joint(std::span<const double> theta, const Batch& batch,
                           std::span<double> grad) const = 0;

  virtual double predictive_location(std::span<const double> theta,
                                     const Target& target) const = 0;

  /// dg/d delta.
  virtual double predictive_scale(std::span<const double> theta,
                                  const Target& target) const = 0;

  /// grad += w_location * d location/d theta + w_scale * d scale/d theta.
  virtual void accumulate_predictive_gradient(std::span<const double> theta,
                                              const Target& target,
                                              double w_location,
                                              double w_scale,
                                              std::span<double> grad) const = 0;
};

/// g(delta, theta, target).
inline double predict(const Model& model, double delta,
                      std::span<const double> theta, const Target& target) {
  return model.predictive_location(theta, target) +
         model.predictive_scale(theta, target) * delta;
}

/// All rows, scale 1.
Batch full_batch(const Model& model);

/// The given rows, with the likelihood scaled up to the full row count.
Batch make_batch(const Model& model, std::span<const std::size_t> rows);

/// Indices of the prediction targets owned by the batch rows, in row order.
std::vector<std::size_t> batch_prediction_targets(const Model& model,
                                                  const Batch& batch);

/// Thrown when a model evaluates to a non-finite log density.
class NonFiniteDensity : public std::domain_error {
 public:
  NonFiniteDensity(const std::string& what, std::vector<double> theta)
      : std::domain_error(what), theta_(std::move(theta)) {}

  const std::vector<double>& theta() const noexcept { return theta_; }

 private:
  std::vector<double> theta_;
};

namespace density {

inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;

inline double log_normal(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -kLogSqrt2Pi - std::log(sd) - 0.5 * z * z;
}

}  // namespace density

}  // namespace lcvi
