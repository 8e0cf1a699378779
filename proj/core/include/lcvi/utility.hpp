#pragma once

#include <cmath>
#include <span>
#include <string>

#include "lcvi/loss.hpp"

namespace lcvi {

struct UtilityPoint {
  double value = 0.0;
  double d_dy = 0.0;
  double d_dh = 0.0;
};

/**
 * Utilities u(y, h) used by the calibration term.
 *
 *   RobustMax        u = M - loss        (may be negative; linearized only)
 *   ExpTransform     u = exp(-gamma * loss), in (0, 1]
 *   NativeExpSquared u = exp(-(h - y)^2)
 */
struct UtilitySpec {
  enum class Kind { RobustMax, ExpTransform, NativeExpSquared };

  Kind kind = Kind::NativeExpSquared;
  /// M for RobustMax, gamma for ExpTransform.
  double scale = 1.0;
  LossSpec loss;

  static UtilitySpec robust_max(double m, LossSpec loss);
  static UtilitySpec exp_transform(double gamma, LossSpec loss);
  static UtilitySpec native_exp_squared() { return {}; }

  void validate() const;

  /// True when u > 0 everywhere, i.e. safe inside a logarithm.
  bool strictly_positive() const { return kind != Kind::RobustMax; }

  double supremum() const;

  std::string name() const;

  UtilityPoint evaluate(double y, double h) const;

  /// log u with its partials, for the kinds that are exponentials of
  /// something simple (has_log_form()).
  bool has_log_form() const { return kind != Kind::RobustMax; }
  UtilityPoint log_evaluate(double y, double h) const;
};

double to_utility(const UtilitySpec& spec, double y, double h);

/// u' = alpha * u + beta with alpha > 0, beta >= 0.
struct AffineUtility {
  UtilitySpec base;
  double alpha = 1.0;
  double beta = 0.0;

  AffineUtility(UtilitySpec b, double a = 1.0, double c = 0.0);

  bool strictly_positive() const {
    return base.strictly_positive() || beta > 0.0;
  }

  UtilityPoint evaluate(double y, double h) const {
    UtilityPoint p = base.evaluate(y, h);
    return {alpha * p.value + beta, alpha * p.d_dy, alpha * p.d_dh};
  }

  bool has_log_form() const { return beta == 0.0 && base.has_log_form(); }
  UtilityPoint log_evaluate(double y, double h) const {
    UtilityPoint p = base.log_evaluate(y, h);
    p.value += std::log(alpha);
    return p;
  }
};

/// gamma = 1 / M_q. Throws std::invalid_argument for m_q <= 0.
double gamma_from_quantile(double m_q);

/// Nearest-rank quantile of a loss sample; throws on empty input.
double empirical_quantile_M(std::span<const double> losses, double q);

}  // namespace lcvi
