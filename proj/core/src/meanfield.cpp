#include "lcvi/meanfield.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace lcvi {

namespace {

// 0.5 * log(2 pi e)
const double kHalfLog2PiE = 0.5 * std::log(2.0 * std::numbers::pi) + 0.5;

}  // namespace

double log_q(std::span<const double> theta, const VariationalParams& lambda) {
  if (theta.size() != lambda.dim()) {
    throw std::invalid_argument("log_q: dimension mismatch");
  }
  double lq = 0.0;
  for (std::size_t j = 0; j < theta.size(); ++j) {
    lq += density::log_normal(theta[j], lambda.means[j],
                              std::exp(lambda.log_scales[j]));
  }
  return lq;
}

double entropy(const VariationalParams& lambda) {
  double h = 0.0;
  for (double rho : lambda.log_scales) h += rho + kHalfLog2PiE;
  return h;
}

ElboEstimate estimate_elbo(const Model& model, const Batch& batch,
                           const VariationalParams& lambda, int s_theta,
                           const RngState& rng) {
  if (s_theta < 1) throw std::invalid_argument("estimate_elbo: s_theta < 1");
  const std::size_t d = model.latent_dim();
  if (lambda.dim() != d) {
    throw std::invalid_argument("estimate_elbo: lambda has dimension " +
                                std::to_string(lambda.dim()) +
                                ", model expects " + std::to_string(d));
  }
  const auto support = model.support();

  ElboEstimate est;
  est.n_samples = s_theta;
  est.grad_means.assign(d, 0.0);
  est.grad_log_scales.assign(d, 0.0);

  std::vector<double> scales(d);
  for (std::size_t j = 0; j < d; ++j) scales[j] = std::exp(lambda.log_scales[j]);

  std::vector<double> eps(d), v(d), theta(d), grad(d);
  double total = 0.0;
  for (int s = 0; s < s_theta; ++s) {
    RandomStream stream = rng.split(static_cast<std::uint64_t>(s)).stream();
    fill_normal(stream, eps);
    for (std::size_t j = 0; j < d; ++j) {
      v[j] = lambda.means[j] + scales[j] * eps[j];
    }
    const double log_jac = constrain(v, support, theta);
    const double lp = model.log_joint(theta, batch, grad);
    if (!std::isfinite(lp)) {
      throw NonFiniteDensity(
          model.name() + ": non-finite log joint at sample " +
              std::to_string(s),
          theta);
    }
    total += lp + log_jac;
    pullback_gradient(v, support, grad);
    add_log_jacobian_gradient(support, grad);
    for (std::size_t j = 0; j < d; ++j) {
      est.grad_means[j] += grad[j];
      est.grad_log_scales[j] += grad[j] * scales[j] * eps[j];
    }
  }

  const double inv = 1.0 / static_cast<double>(s_theta);
  est.value = total * inv + entropy(lambda);
  for (std::size_t j = 0; j < d; ++j) {
    est.grad_means[j] *= inv;
    est.grad_log_scales[j] = est.grad_log_scales[j] * inv + 1.0;
  }
  return est;
}

}  // namespace lcvi
