#include "lcvi/utility_term.hpp"

namespace lcvi {

CalibratedBound calibrated_bound(const ElboEstimate& elbo,
                                 const UtilityTermEstimate& u_term,
                                 double weight) {
  if (elbo.grad_means.size() != u_term.grad_means.size() ||
      elbo.grad_log_scales.size() != u_term.grad_log_scales.size()) {
    throw std::invalid_argument("calibrated_bound: gradient shapes differ");
  }
  CalibratedBound b;
  b.value = elbo.value + weight * u_term.value;
  b.grad_means = elbo.grad_means;
  b.grad_log_scales = elbo.grad_log_scales;
  for (std::size_t j = 0; j < b.grad_means.size(); ++j) {
    b.grad_means[j] += weight * u_term.grad_means[j];
    b.grad_log_scales[j] += weight * u_term.grad_log_scales[j];
  }
  b.grad_h.resize(u_term.grad_h.size());
  for (std::size_t i = 0; i < b.grad_h.size(); ++i) {
    b.grad_h[i] = weight * u_term.grad_h[i];
  }
  return b;
}

CalibrationObjective CalibrationObjective::naive(UtilitySpec utility) {
  CalibrationObjective o;
  o.estimator = EstimatorKind::Naive;
  o.utility = utility;
  o.loss = utility.loss;
  o.validate();
  return o;
}

CalibrationObjective CalibrationObjective::linearized(LossSpec loss, double m) {
  CalibrationObjective o;
  o.estimator = EstimatorKind::Linearized;
  o.loss = loss;
  o.m = m;
  o.utility = UtilitySpec::robust_max(m, loss);
  o.validate();
  return o;
}

void CalibrationObjective::validate() const {
  if (!(weight >= 0.0)) {
    throw std::invalid_argument("calibration weight must be >= 0");
  }
  if (estimator == EstimatorKind::Naive) {
    utility.validate();
    if (!utility.strictly_positive()) {
      throw std::invalid_argument(
          "naive estimator cannot use a robust-maximum utility");
    }
  } else {
    loss.validate();
    if (!(m > 0.0)) {
      throw std::invalid_argument("linearized estimator needs M > 0");
    }
  }
}

UtilityTermEstimate estimate_utility_term(const Model& model,
                                          const Batch& batch,
                                          const VariationalParams& lambda,
                                          const DecisionSet& decisions,
                                          const CalibrationObjective& objective,
                                          int s_theta, int s_y,
                                          const RngState& rng) {
  if (objective.estimator == EstimatorKind::Naive) {
    return estimate_utility_naive(model, batch, lambda, decisions,
                                  objective.utility, s_theta, s_y, rng);
  }
  return estimate_utility_linearized(model, batch, lambda, decisions,
                                     objective.loss, objective.m, s_theta, s_y,
                                     rng);
}

}  // namespace lcvi
