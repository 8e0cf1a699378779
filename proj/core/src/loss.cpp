#include "lcvi/loss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace lcvi {

LossSpec LossSpec::tilted(double q) {
  LossSpec s{Kind::Tilted, q};
  s.validate();
  return s;
}

LossSpec LossSpec::linex(double c) {
  LossSpec s{Kind::LinEx, c};
  s.validate();
  return s;
}

void LossSpec::validate() const {
  if (kind == Kind::Tilted && !(param > 0.0 && param < 1.0)) {
    throw std::invalid_argument("tilted loss needs q strictly inside (0, 1)");
  }
  if (kind == Kind::LinEx && !(param != 0.0 && std::isfinite(param))) {
    throw std::invalid_argument("LinEx loss needs a finite nonzero c");
  }
}

double LossSpec::supremum() const {
  return kind == Kind::ExpSquaredComplement
             ? 1.0
             : std::numeric_limits<double>::infinity();
}

std::string LossSpec::name() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::Squared: return "squared";
    case Kind::Absolute: return "absolute";
    case Kind::Tilted: os << "tilted(q=" << param << ")"; return os.str();
    case Kind::LinEx: os << "linex(c=" << param << ")"; return os.str();
    case Kind::ExpSquaredComplement: return "exp_squared_complement";
  }
  return "unknown";
}

double loss(const LossSpec& spec, double y, double h) {
  return spec.evaluate(y, h).value;
}

double loss_subgradient_h(const LossSpec& spec, double y, double h) {
  return spec.evaluate(y, h).d_dh;
}

double nearest_rank(std::span<const double> values, double q) {
  if (values.empty()) throw std::invalid_argument("nearest_rank: no values");
  if (!(q > 0.0 && q <= 1.0)) {
    throw std::invalid_argument("nearest_rank: q must be in (0, 1]");
  }
  const double n = static_cast<double>(values.size());
  // Guard against q * n landing a hair above an integer.
  auto rank = static_cast<std::size_t>(std::ceil(q * n - 1e-9 * n));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  std::vector<double> copy(values.begin(), values.end());
  auto nth = copy.begin() + static_cast<std::ptrdiff_t>(rank - 1);
  std::nth_element(copy.begin(), nth, copy.end());
  return *nth;
}

namespace {

constexpr double kKernelCutoff = 6.0;  // exp(-36) is below double epsilon

double kernel_sum(const std::vector<double>& sorted, double h) {
  auto lo = std::lower_bound(sorted.begin(), sorted.end(), h - kKernelCutoff);
  auto hi = std::upper_bound(lo, sorted.end(), h + kKernelCutoff);
  double s = 0.0;
  for (auto it = lo; it != hi; ++it) {
    const double r = h - *it;
    s += std::exp(-r * r);
  }
  return s;
}

// argmax_h sum_s exp(-(h - y_s)^2)
double kernel_mode(std::span<const double> samples) {
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double lo = sorted.front();
  const double hi = sorted.back();
  constexpr double kStep = 0.25;
  const auto steps = static_cast<std::size_t>(std::ceil((hi - lo) / kStep));
  double best_h = lo;
  double best = -1.0;
  for (std::size_t i = 0; i <= steps; ++i) {
    const double h = std::min(hi, lo + kStep * static_cast<double>(i));
    const double f = kernel_sum(sorted, h);
    if (f > best) {
      best = f;
      best_h = h;
    }
  }
  // Mean-shift is a monotone ascent for a Gaussian kernel.
  double h = best_h;
  for (int it = 0; it < 200; ++it) {
    auto a = std::lower_bound(sorted.begin(), sorted.end(), h - kKernelCutoff);
    auto b = std::upper_bound(a, sorted.end(), h + kKernelCutoff);
    double num = 0.0;
    double den = 0.0;
    for (auto p = a; p != b; ++p) {
      const double r = h - *p;
      const double w = std::exp(-r * r);
      num += w * *p;
      den += w;
    }
    if (!(den > 0.0)) break;
    const double next = num / den;
    if (std::abs(next - h) < 1e-12 * (1.0 + std::abs(h))) {
      h = next;
      break;
    }
    h = next;
  }
  return h;
}

}  // namespace

double bayes_estimator(const LossSpec& spec, std::span<const double> samples) {
  if (samples.empty()) {
    throw std::invalid_argument("bayes_estimator: empty sample set");
  }
  spec.validate();
  switch (spec.kind) {
    case LossSpec::Kind::Squared:
      return std::accumulate(samples.begin(), samples.end(), 0.0) /
             static_cast<double>(samples.size());
    case LossSpec::Kind::Absolute:
      return nearest_rank(samples, 0.5);
    case LossSpec::Kind::Tilted:
      return nearest_rank(samples, spec.param);
    case LossSpec::Kind::LinEx: {
      const double c = spec.param;
      double shift = -std::numeric_limits<double>::infinity();
      for (double y : samples) shift = std::max(shift, -c * y);
      double acc = 0.0;
      for (double y : samples) acc += std::exp(-c * y - shift);
      const double log_mean =
          shift + std::log(acc / static_cast<double>(samples.size()));
      return -log_mean / c;
    }
    case LossSpec::Kind::ExpSquaredComplement:
      return kernel_mode(samples);
  }
  throw std::logic_error("bayes_estimator: unknown loss kind");
}

}  // namespace lcvi
