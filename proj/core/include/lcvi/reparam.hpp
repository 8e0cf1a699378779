#pragma once

#include <span>
#include <vector>

#include "lcvi/random.hpp"
#include "lcvi/variational_params.hpp"

namespace lcvi {

/// Per-coordinate map from the unconstrained optimization space to the
/// model's support.
enum class SupportTransform {
  Identity,
  ExpPositive,  // v -> exp(v), log|Jacobian| = v
};

/// theta_j = mu_j + exp(rho_j) * eps_j.
std::vector<double> reparameterize(const NoiseDraw& eps,
                                   const VariationalParams& lambda);

/// Allocation-free form; `out` must have lambda.dim() entries.
void reparameterize(std::span<const double> eps,
                    const VariationalParams& lambda, std::span<double> out);

struct Constrained {
  std::vector<double> theta;
  double log_jacobian = 0.0;
};

Constrained constrain(std::span<const double> unconstrained,
                      std::span<const SupportTransform> transforms);

/// Writes the constrained values into `out` and returns the log-Jacobian.
double constrain(std::span<const double> unconstrained,
                 std::span<const SupportTransform> transforms,
                 std::span<double> out);

/// Converts a gradient w.r.t. constrained values into one w.r.t. the
/// unconstrained values, in place. Does not include the log-Jacobian term.
void pullback_gradient(std::span<const double> unconstrained,
                       std::span<const SupportTransform> transforms,
                       std::span<double> grad);

/// Gradient of the total log-Jacobian w.r.t. the unconstrained values,
/// accumulated into `grad`.
void add_log_jacobian_gradient(std::span<const SupportTransform> transforms,
                               std::span<double> grad);

}  // namespace lcvi
