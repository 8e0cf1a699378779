#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace lcvi {

/**
 * Parameters of a mean-field Gaussian over unconstrained latents: one
 * (mean, log-scale) pair per latent scalar, sigma_j = exp(log_scale_j).
 */
struct VariationalParams {
  std::vector<double> means;
  std::vector<double> log_scales;

  VariationalParams() = default;
  VariationalParams(std::vector<double> mu, std::vector<double> rho);

  /// All means at `mean`, all scales at `scale`.
  static VariationalParams constant(std::size_t dim, double mean, double scale);

  std::size_t dim() const noexcept { return means.size(); }

  /// Throws std::invalid_argument on unequal lengths or non-finite entries.
  void validate() const;

  /// Flat [means..., log_scales...] layout used by the optimizers.
  std::vector<double> flatten() const;
  static VariationalParams unflatten(std::span<const double> flat);

  friend bool operator==(const VariationalParams&,
                         const VariationalParams&) = default;
};

}  // namespace lcvi
