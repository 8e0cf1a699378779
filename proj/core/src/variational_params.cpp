#include "lcvi/variational_params.hpp"

#include <cmath>
#include <stdexcept>

namespace lcvi {

VariationalParams::VariationalParams(std::vector<double> mu,
                                     std::vector<double> rho)
    : means(std::move(mu)), log_scales(std::move(rho)) {
  validate();
}

VariationalParams VariationalParams::constant(std::size_t dim, double mean,
                                              double scale) {
  if (!(scale > 0.0)) {
    throw std::invalid_argument("VariationalParams: scale must be positive");
  }
  return VariationalParams(std::vector<double>(dim, mean),
                           std::vector<double>(dim, std::log(scale)));
}

void VariationalParams::validate() const {
  if (means.size() != log_scales.size()) {
    throw std::invalid_argument(
        "VariationalParams: means and log_scales differ in length");
  }
  for (std::size_t j = 0; j < means.size(); ++j) {
    if (!std::isfinite(means[j]) || !std::isfinite(log_scales[j])) {
      throw std::invalid_argument(
          "VariationalParams: non-finite entry at index " + std::to_string(j));
    }
  }
}

std::vector<double> VariationalParams::flatten() const {
  std::vector<double> flat;
  flat.reserve(2 * dim());
  flat.insert(flat.end(), means.begin(), means.end());
  flat.insert(flat.end(), log_scales.begin(), log_scales.end());
  return flat;
}

VariationalParams VariationalParams::unflatten(std::span<const double> flat) {
  if (flat.size() % 2 != 0) {
    throw std::invalid_argument("VariationalParams: odd flat length");
  }
  const std::size_t d = flat.size() / 2;
  VariationalParams out;
  out.means.assign(flat.begin(), flat.begin() + static_cast<std::ptrdiff_t>(d));
  out.log_scales.assign(flat.begin() + static_cast<std::ptrdiff_t>(d),
                        flat.end());
  return out;
}

}  // namespace lcvi
