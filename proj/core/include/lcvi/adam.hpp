#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace lcvi {

/// Bias-corrected Adam state for gradient *ascent*.
struct AdamState {
  long step_count = 0;
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon_hat = 1e-8;

  AdamState() = default;
  AdamState(std::size_t n, double lr);

  std::size_t size() const noexcept { return first_moment.size(); }
};

/// params += lr * m_hat / (sqrt(v_hat) + eps). Throws std::domain_error on a
/// non-finite gradient and std::invalid_argument on a shape mismatch.
void adam_step(AdamState& state, std::span<double> params,
               std::span<const double> grad);

/// As above, but only the coordinates listed in `active` are touched; the
/// step counter still advances once.
void adam_step(AdamState& state, std::span<double> params,
               std::span<const double> grad,
               std::span<const std::size_t> active);

}  // namespace lcvi
