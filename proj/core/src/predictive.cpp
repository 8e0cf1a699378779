#include "lcvi/predictive.hpp"

#include <cmath>
#include <stdexcept>

#include "lcvi/reparam.hpp"
#include "lcvi/utility.hpp"

namespace lcvi {

namespace {
constexpr std::uint64_t kThetaRole = 1;
constexpr std::uint64_t kDeltaRole = 2;
}  // namespace

PredictiveSampler::PredictiveSampler(const Model& model,
                                     const VariationalParams& lambda,
                                     int s_theta, int s_y, const RngState& rng)
    : model_(model),
      s_theta_(s_theta),
      s_y_(s_y),
      delta_rng_(rng.split(kDeltaRole)),
      dim_(model.latent_dim()) {
  if (s_theta < 1 || s_y < 1) {
    throw std::invalid_argument("PredictiveSampler: sample counts must be >= 1");
  }
  if (lambda.dim() != dim_) {
    throw std::invalid_argument("PredictiveSampler: dimension mismatch");
  }
  thetas_.resize(static_cast<std::size_t>(s_theta) * dim_);
  std::vector<double> eps(dim_), v(dim_);
  const RngState theta_rng = rng.split(kThetaRole);
  for (int s = 0; s < s_theta; ++s) {
    RandomStream stream = theta_rng.split(static_cast<std::uint64_t>(s)).stream();
    fill_normal(stream, eps);
    reparameterize(eps, lambda, v);
    constrain(v, model.support(),
              std::span<double>(thetas_).subspan(
                  static_cast<std::size_t>(s) * dim_, dim_));
  }
}

std::vector<double> PredictiveSampler::draw(std::size_t key,
                                            const Target& target) const {
  std::vector<double> ys;
  ys.reserve(static_cast<std::size_t>(s_theta_) * static_cast<std::size_t>(s_y_));
  RandomStream stream = delta_rng_.split(key).stream();
  for (int s = 0; s < s_theta_; ++s) {
    std::span<const double> theta(thetas_.data() + static_cast<std::size_t>(s) * dim_,
                                  dim_);
    const double loc = model_.predictive_location(theta, target);
    const double scale = model_.predictive_scale(theta, target);
    for (int k = 0; k < s_y_; ++k) ys.push_back(loc + scale * stream.normal());
  }
  return ys;
}

DecisionSet bayes_decisions(const Model& model,
                            const VariationalParams& lambda,
                            std::span<const Target> targets,
                            const LossSpec& loss, int s_theta, int s_y,
                            const RngState& rng) {
  PredictiveSampler sampler(model, lambda, s_theta, s_y, rng);
  DecisionSet out(targets.size(), 0.0);
  for (std::size_t i = 0; i < targets.size(); ++i) {
    out[i] = bayes_estimator(loss, sampler.draw(i, targets[i]));
  }
  return out;
}

std::vector<double> calibration_losses(const Model& model,
                                       const VariationalParams& lambda,
                                       const LossSpec& loss, int s_theta,
                                       int s_y, const RngState& rng) {
  const auto targets = model.train_targets();
  const DecisionSet h =
      bayes_decisions(model, lambda, targets, loss, s_theta, s_y, rng);
  std::vector<double> losses(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    losses[i] = lcvi::loss(loss, targets[i].observed, h[i]);
  }
  return losses;
}

double calibrate_M(const Model& model, const VariationalParams& lambda,
                   const LossSpec& loss, double q, int s_theta, int s_y,
                   const RngState& rng) {
  const auto losses =
      calibration_losses(model, lambda, loss, s_theta, s_y, rng);
  const double m = empirical_quantile_M(losses, q);
  if (!(m > 0.0) || !std::isfinite(m)) {
    throw std::domain_error(
        "calibrate_M: loss quantile is not a positive finite number; the "
        "robust maximum must be > 0");
  }
  return m;
}

}  // namespace lcvi
