#include "lcvi/adam.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace lcvi {

AdamState::AdamState(std::size_t n, double lr)
    : first_moment(n, 0.0), second_moment(n, 0.0), learning_rate(lr) {
  if (!(lr > 0.0)) throw std::invalid_argument("Adam: learning rate must be > 0");
}

namespace {

void check_shapes(const AdamState& state, std::span<double> params,
                  std::span<const double> grad) {
  if (params.size() != state.size() || grad.size() != state.size()) {
    throw std::invalid_argument("adam_step: shape mismatch (state " +
                                std::to_string(state.size()) + ", params " +
                                std::to_string(params.size()) + ", grad " +
                                std::to_string(grad.size()) + ")");
  }
}

inline void update(AdamState& s, std::span<double> params,
                   std::span<const double> grad, std::size_t i, double c1,
                   double c2) {
  const double g = grad[i];
  if (!std::isfinite(g)) {
    throw std::domain_error("adam_step: non-finite gradient at coordinate " +
                            std::to_string(i));
  }
  s.first_moment[i] = s.beta1 * s.first_moment[i] + (1.0 - s.beta1) * g;
  s.second_moment[i] = s.beta2 * s.second_moment[i] + (1.0 - s.beta2) * g * g;
  const double m_hat = s.first_moment[i] / c1;
  const double v_hat = s.second_moment[i] / c2;
  params[i] += s.learning_rate * m_hat / (std::sqrt(v_hat) + s.epsilon_hat);
}

}  // namespace

void adam_step(AdamState& state, std::span<double> params,
               std::span<const double> grad) {
  check_shapes(state, params, grad);
  ++state.step_count;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
  for (std::size_t i = 0; i < params.size(); ++i) {
    update(state, params, grad, i, c1, c2);
  }
}

void adam_step(AdamState& state, std::span<double> params,
               std::span<const double> grad,
               std::span<const std::size_t> active) {
  check_shapes(state, params, grad);
  ++state.step_count;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
  for (std::size_t i : active) {
    if (i >= params.size()) {
      throw std::invalid_argument("adam_step: active index out of range");
    }
    update(state, params, grad, i, c1, c2);
  }
}

}  // namespace lcvi
