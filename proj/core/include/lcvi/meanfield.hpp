#pragma once

#include <span>
#include <vector>

#include "lcvi/model.hpp"
#include "lcvi/random.hpp"
#include "lcvi/variational_params.hpp"

namespace lcvi {

/// Sum of independent log N(theta_j | mu_j, exp(rho_j)^2).
double log_q(std::span<const double> theta, const VariationalParams& lambda);

/// Closed-form entropy: sum_j (rho_j + 0.5 log(2 pi e)).
double entropy(const VariationalParams& lambda);

struct ElboEstimate {
  double value = 0.0;
  std::vector<double> grad_means;
  std::vector<double> grad_log_scales;
  int n_samples = 0;
};

/**
 * Reparameterized Monte Carlo estimate of the ELBO and its gradient.
 *
 *   value = 1/S sum_s [log p(batch, constrain(f(eps_s, lambda))) + log|J|]
 *           + entropy(lambda)
 *
 * The likelihood part is scaled by batch.scale inside the model. Sample s
 * draws its noise from rng.split(s), so equal rng states give equal noise
 * (common random numbers for finite-difference checks).
 *
 * Throws NonFiniteDensity when the log joint is not finite.
 */
ElboEstimate estimate_elbo(const Model& model, const Batch& batch,
                           const VariationalParams& lambda, int s_theta,
                           const RngState& rng);

}  // namespace lcvi
