#pragma once

#include <vector>

#include "lcvi/model.hpp"

namespace lcvi {

/**
 * One-dimensional conjugate toy: theta ~ N(prior_mean, prior_sd^2),
 * y_i ~ N(theta, noise_sd^2). Every prediction target shares the
 * predictive y = theta + predictive_sd * delta.
 *
 * The exact posterior is Gaussian, which makes this the reference model for
 * checking estimators and optimizers against closed forms. A
 * predictive_sd of zero gives a deterministic predictive g = theta.
 */
class GaussianMeanModel final : public Model {
 public:
  GaussianMeanModel(double prior_mean, double prior_sd, double noise_sd,
                    std::vector<double> observations,
                    std::vector<double> prediction_observed = {});

  GaussianMeanModel& with_predictive_sd(double sd);

  std::string name() const override { return "gaussian_mean"; }
  std::size_t latent_dim() const override { return 1; }
  std::span<const SupportTransform> support() const override {
    return support_;
  }
  std::size_t num_rows() const override { return num_rows_; }
  std::span<const Target> train_targets() const override { return train_; }
  std::span<const Target> prediction_targets() const override {
    return predict_;
  }
  std::span<const std::size_t> prediction_targets_in_row(
      std::size_t row) const override {
    return row_targets_.at(row);
  }

  double log_joint(std::span<const double> theta, const Batch& batch,
                   std::span<double> grad) const override;
  double predictive_location(std::span<const double> theta,
                             const Target&) const override {
    return theta[0];
  }
  double predictive_scale(std::span<const double>,
                          const Target&) const override {
    return predictive_sd_;
  }
  void accumulate_predictive_gradient(std::span<const double>, const Target&,
                                      double w_location, double,
                                      std::span<double> grad) const override {
    grad[0] += w_location;
  }

  /// Exact posterior N(mean, sd^2) of theta given all observations.
  double posterior_mean() const;
  double posterior_sd() const;

 private:
  double prior_mean_;
  double prior_sd_;
  double noise_sd_;
  double predictive_sd_;
  std::size_t num_rows_;
  std::vector<SupportTransform> support_{SupportTransform::Identity};
  std::vector<Target> train_;
  std::vector<Target> predict_;
  std::vector<std::vector<std::size_t>> row_targets_;
};

}  // namespace lcvi
