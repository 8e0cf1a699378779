#include "lcvi/gaussian_mean_model.hpp"

#include <algorithm>
#include <cmath>

namespace lcvi {

GaussianMeanModel::GaussianMeanModel(double prior_mean, double prior_sd,
                                     double noise_sd,
                                     std::vector<double> observations,
                                     std::vector<double> prediction_observed)
    : prior_mean_(prior_mean),
      prior_sd_(prior_sd),
      noise_sd_(noise_sd),
      predictive_sd_(noise_sd),
      num_rows_(std::max<std::size_t>(1, observations.size())) {
  if (!(prior_sd > 0.0)) {
    throw std::invalid_argument("GaussianMeanModel: prior_sd must be > 0");
  }
  if (!observations.empty() && !(noise_sd > 0.0)) {
    throw std::invalid_argument(
        "GaussianMeanModel: noise_sd must be > 0 when observations exist");
  }
  if (noise_sd < 0.0) {
    throw std::invalid_argument("GaussianMeanModel: negative noise_sd");
  }
  for (std::size_t i = 0; i < observations.size(); ++i) {
    train_.push_back(Target{i, 0, observations[i]});
  }
  row_targets_.resize(num_rows_);
  for (std::size_t i = 0; i < prediction_observed.size(); ++i) {
    const std::size_t row = i % num_rows_;
    predict_.push_back(Target{row, i, prediction_observed[i]});
    row_targets_[row].push_back(i);
  }
}

GaussianMeanModel& GaussianMeanModel::with_predictive_sd(double sd) {
  if (sd < 0.0) {
    throw std::invalid_argument("GaussianMeanModel: negative predictive sd");
  }
  predictive_sd_ = sd;
  return *this;
}

double GaussianMeanModel::log_joint(std::span<const double> theta,
                                    const Batch& batch,
                                    std::span<double> grad) const {
  const double t = theta[0];
  double lp = density::log_normal(t, prior_mean_, prior_sd_);
  double g = -(t - prior_mean_) / (prior_sd_ * prior_sd_);
  double lik = 0.0;
  double lik_grad = 0.0;
  for (std::size_t row : batch.rows) {
    if (row >= train_.size()) continue;
    const double y = train_[row].observed;
    lik += density::log_normal(y, t, noise_sd_);
    lik_grad += (y - t) / (noise_sd_ * noise_sd_);
  }
  lp += batch.scale * lik;
  g += batch.scale * lik_grad;
  grad[0] = g;
  return lp;
}

double GaussianMeanModel::posterior_mean() const {
  double precision = 1.0 / (prior_sd_ * prior_sd_);
  double weighted = prior_mean_ / (prior_sd_ * prior_sd_);
  for (const auto& t : train_) {
    precision += 1.0 / (noise_sd_ * noise_sd_);
    weighted += t.observed / (noise_sd_ * noise_sd_);
  }
  return weighted / precision;
}

double GaussianMeanModel::posterior_sd() const {
  double precision = 1.0 / (prior_sd_ * prior_sd_);
  if (!train_.empty()) {
    precision += static_cast<double>(train_.size()) / (noise_sd_ * noise_sd_);
  }
  return 1.0 / std::sqrt(precision);
}

}  // namespace lcvi
