#pragma once

#include <cmath>
#include <span>
#include <string>

namespace lcvi {

/// A loss value with its partial derivatives. At the kinks of Absolute and
/// Tilted the derivatives are 0.
struct LossPoint {
  double value = 0.0;
  double d_dh = 0.0;
  double d_dy = 0.0;
};

/**
 * Loss families for scalar decisions. The first four have closed-form Bayes
 * estimators; ExpSquaredComplement (1 - exp(-(h - y)^2)) is the loss view of
 * the bounded exponential utility and needs a numerical decision rule.
 */
struct LossSpec {
  enum class Kind { Squared, Absolute, Tilted, LinEx, ExpSquaredComplement };

  Kind kind = Kind::Squared;
  /// q for Tilted, c for LinEx, unused otherwise.
  double param = 0.0;

  static LossSpec squared() { return {Kind::Squared, 0.0}; }
  static LossSpec absolute() { return {Kind::Absolute, 0.0}; }
  static LossSpec tilted(double q);
  static LossSpec linex(double c);
  static LossSpec exp_squared_complement() {
    return {Kind::ExpSquaredComplement, 0.0};
  }

  /// Throws std::invalid_argument unless q in (0,1) / c != 0.
  void validate() const;

  bool has_closed_form_estimator() const {
    return kind != Kind::ExpSquaredComplement;
  }

  /// Supremum over (y, h), infinite for the unbounded families.
  double supremum() const;

  std::string name() const;

  LossPoint evaluate(double y, double h) const;

  friend bool operator==(const LossSpec&, const LossSpec&) = default;
};

// Inline: this sits in the innermost loop of every utility estimator.
inline LossPoint LossSpec::evaluate(double y, double h) const {
  const double r = h - y;
  LossPoint p;
  switch (kind) {
    case Kind::Squared:
      p.value = r * r;
      p.d_dh = 2.0 * r;
      break;
    case Kind::Absolute:
      p.value = std::abs(r);
      p.d_dh = r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0);
      break;
    case Kind::Tilted:
      if (y >= h) {
        p.value = param * (y - h);
        p.d_dh = y > h ? -param : 0.0;
      } else {
        p.value = (1.0 - param) * (h - y);
        p.d_dh = 1.0 - param;
      }
      break;
    case Kind::LinEx: {
      const double e = std::exp(param * r);
      p.value = e - param * r - 1.0;
      p.d_dh = param * e - param;
      break;
    }
    case Kind::ExpSquaredComplement: {
      const double e = std::exp(-r * r);
      p.value = 1.0 - e;
      p.d_dh = 2.0 * r * e;
      break;
    }
  }
  // Every family depends on (h - y) only.
  p.d_dy = -p.d_dh;
  return p;
}

double loss(const LossSpec& spec, double y, double h);

/// d loss / d h, with 0 at non-differentiable points.
double loss_subgradient_h(const LossSpec& spec, double y, double h);

/**
 * Decision minimizing the average loss over predictive samples:
 * mean, nearest-rank median, nearest-rank q-quantile, and
 * -(1/c) log mean exp(-c y) for LinEx. ExpSquaredComplement is solved by a
 * grid scan followed by mean-shift refinement.
 *
 * Throws std::invalid_argument on an empty sample set.
 */
double bayes_estimator(const LossSpec& spec, std::span<const double> samples);

/// The ceil(q * n)-th smallest value (1-based), q in (0, 1].
double nearest_rank(std::span<const double> values, double q);

}  // namespace lcvi
