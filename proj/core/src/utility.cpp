#include "lcvi/utility.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace lcvi {

UtilitySpec UtilitySpec::robust_max(double m, LossSpec loss) {
  UtilitySpec u{Kind::RobustMax, m, loss};
  u.validate();
  return u;
}

UtilitySpec UtilitySpec::exp_transform(double gamma, LossSpec loss) {
  UtilitySpec u{Kind::ExpTransform, gamma, loss};
  u.validate();
  return u;
}

void UtilitySpec::validate() const {
  if (kind != Kind::NativeExpSquared &&
      !(scale > 0.0 && std::isfinite(scale))) {
    throw std::invalid_argument(kind == Kind::RobustMax
                                    ? "robust maximum M must be positive"
                                    : "exponential rate gamma must be positive");
  }
  loss.validate();
}

double UtilitySpec::supremum() const {
  return kind == Kind::RobustMax ? scale : 1.0;
}

std::string UtilitySpec::name() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::RobustMax:
      os << "robust_max(M=" << scale << ", " << loss.name() << ")";
      break;
    case Kind::ExpTransform:
      os << "exp(gamma=" << scale << ", " << loss.name() << ")";
      break;
    case Kind::NativeExpSquared:
      os << "native_exp_squared";
      break;
  }
  return os.str();
}

UtilityPoint UtilitySpec::evaluate(double y, double h) const {
  switch (kind) {
    case Kind::RobustMax: {
      const LossPoint l = loss.evaluate(y, h);
      return {scale - l.value, -l.d_dy, -l.d_dh};
    }
    case Kind::ExpTransform: {
      const LossPoint l = loss.evaluate(y, h);
      const double u = std::exp(-scale * l.value);
      return {u, -scale * u * l.d_dy, -scale * u * l.d_dh};
    }
    case Kind::NativeExpSquared: {
      const double r = h - y;
      const double u = std::exp(-r * r);
      return {u, 2.0 * r * u, -2.0 * r * u};
    }
  }
  throw std::logic_error("UtilitySpec: unknown kind");
}

UtilityPoint UtilitySpec::log_evaluate(double y, double h) const {
  switch (kind) {
    case Kind::ExpTransform: {
      const LossPoint l = loss.evaluate(y, h);
      return {-scale * l.value, -scale * l.d_dy, -scale * l.d_dh};
    }
    case Kind::NativeExpSquared: {
      const double r = h - y;
      return {-r * r, 2.0 * r, -2.0 * r};
    }
    case Kind::RobustMax:
      break;
  }
  throw std::logic_error("UtilitySpec: " + name() + " has no log form");
}

double to_utility(const UtilitySpec& spec, double y, double h) {
  return spec.evaluate(y, h).value;
}

AffineUtility::AffineUtility(UtilitySpec b, double a, double c)
    : base(b), alpha(a), beta(c) {
  if (!(alpha > 0.0)) throw std::invalid_argument("affine utility: alpha <= 0");
  if (!(beta >= 0.0)) throw std::invalid_argument("affine utility: beta < 0");
}

double gamma_from_quantile(double m_q) {
  if (!(m_q > 0.0)) {
    throw std::invalid_argument("gamma_from_quantile: M_q must be positive");
  }
  return 1.0 / m_q;
}

double empirical_quantile_M(std::span<const double> losses, double q) {
  if (losses.empty()) {
    throw std::invalid_argument("empirical_quantile_M: empty loss sample");
  }
  return nearest_rank(losses, q);
}

}  // namespace lcvi
