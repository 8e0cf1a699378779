#include "lcvi/reparam.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace lcvi {

namespace {

void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                std::to_string(a) + " vs " +
                                std::to_string(b) + ")");
  }
}

}  // namespace

std::vector<double> reparameterize(const NoiseDraw& eps,
                                   const VariationalParams& lambda) {
  std::vector<double> out(lambda.dim());
  reparameterize(eps.values, lambda, out);
  return out;
}

void reparameterize(std::span<const double> eps,
                    const VariationalParams& lambda, std::span<double> out) {
  require_same_length(eps.size(), lambda.dim(), "reparameterize");
  require_same_length(out.size(), lambda.dim(), "reparameterize");
  for (std::size_t j = 0; j < eps.size(); ++j) {
    out[j] = lambda.means[j] + std::exp(lambda.log_scales[j]) * eps[j];
  }
}

Constrained constrain(std::span<const double> unconstrained,
                      std::span<const SupportTransform> transforms) {
  Constrained c;
  c.theta.resize(unconstrained.size());
  c.log_jacobian = constrain(unconstrained, transforms, c.theta);
  return c;
}

double constrain(std::span<const double> unconstrained,
                 std::span<const SupportTransform> transforms,
                 std::span<double> out) {
  require_same_length(unconstrained.size(), transforms.size(), "constrain");
  require_same_length(out.size(), transforms.size(), "constrain");
  double log_jac = 0.0;
  for (std::size_t j = 0; j < unconstrained.size(); ++j) {
    const double v = unconstrained[j];
    switch (transforms[j]) {
      case SupportTransform::Identity:
        out[j] = v;
        break;
      case SupportTransform::ExpPositive:
        out[j] = std::exp(v);
        log_jac += v;
        break;
    }
  }
  return log_jac;
}

void pullback_gradient(std::span<const double> unconstrained,
                       std::span<const SupportTransform> transforms,
                       std::span<double> grad) {
  require_same_length(unconstrained.size(), transforms.size(),
                      "pullback_gradient");
  require_same_length(grad.size(), transforms.size(), "pullback_gradient");
  for (std::size_t j = 0; j < grad.size(); ++j) {
    if (transforms[j] == SupportTransform::ExpPositive) {
      grad[j] *= std::exp(unconstrained[j]);
    }
  }
}

void add_log_jacobian_gradient(std::span<const SupportTransform> transforms,
                               std::span<double> grad) {
  require_same_length(grad.size(), transforms.size(),
                      "add_log_jacobian_gradient");
  for (std::size_t j = 0; j < grad.size(); ++j) {
    if (transforms[j] == SupportTransform::ExpPositive) grad[j] += 1.0;
  }
}

}  // namespace lcvi
