#include "lcvi/pmf.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lcvi {

void PmfHyper::validate() const {
  if (k == 0) throw std::invalid_argument("pmf: k must be >= 1");
  if (!(sigma_y > 0.0) || !(sigma_w > 0.0) || !(sigma_z > 0.0)) {
    throw std::invalid_argument("pmf: all sigma terms must be positive");
  }
}

PmfModel::PmfModel(MatrixData data, PmfHyper hyper)
    : data_(std::move(data)), hyper_(hyper) {
  hyper_.validate();
  data_.validate();
  if (data_.n_rows == 0 || data_.n_cols == 0) {
    throw std::invalid_argument("pmf: empty matrix");
  }
  z_size_ = data_.n_rows * hyper_.k;
  support_.assign(z_size_ + hyper_.k * data_.n_cols,
                  SupportTransform::Identity);
  row_train_.resize(data_.n_rows);
  for (std::size_t i = 0; i < data_.n_rows; ++i) {
    for (std::size_t j = 0; j < data_.n_cols; ++j) {
      const Target t{i, j, data_.at(i, j)};
      if (data_.is_train(i, j)) {
        row_train_[i].push_back(train_.size());
        train_.push_back(t);
      } else if (data_.is_test(i, j)) {
        heldout_.push_back(t);
      }
    }
  }
}

std::vector<std::string> PmfModel::latent_names() const {
  std::vector<std::string> names;
  names.reserve(latent_dim());
  for (std::size_t i = 0; i < data_.n_rows; ++i) {
    for (std::size_t l = 0; l < hyper_.k; ++l) {
      names.push_back("Z[" + std::to_string(i) + "," + std::to_string(l) + "]");
    }
  }
  for (std::size_t l = 0; l < hyper_.k; ++l) {
    for (std::size_t j = 0; j < data_.n_cols; ++j) {
      names.push_back("W[" + std::to_string(l) + "," + std::to_string(j) + "]");
    }
  }
  return names;
}

double PmfModel::log_joint(std::span<const double> theta, const Batch& batch,
                           std::span<double> grad) const {
  const std::size_t k = hyper_.k;
  const double sz = hyper_.sigma_z;
  const double sw = hyper_.sigma_w;
  const double sy = hyper_.sigma_y;

  // Squared terms accumulate per block; the normalizers are added once.
  double zz = 0.0, ww = 0.0;
  for (std::size_t a = 0; a < z_size_; ++a) {
    zz += theta[a] * theta[a];
    grad[a] = -theta[a] / (sz * sz);
  }
  for (std::size_t a = z_size_; a < theta.size(); ++a) {
    ww += theta[a] * theta[a];
    grad[a] = -theta[a] / (sw * sw);
  }
  const double n_w = static_cast<double>(theta.size() - z_size_);
  const double lp = -0.5 * zz / (sz * sz) - 0.5 * ww / (sw * sw) -
                    static_cast<double>(z_size_) * (density::kLogSqrt2Pi + std::log(sz)) -
                    n_w * (density::kLogSqrt2Pi + std::log(sw));

  double rr = 0.0;
  std::size_t cells = 0;
  const double inv_var = 1.0 / (sy * sy);
  for (std::size_t i : batch.rows) {
    for (std::size_t idx : row_train_[i]) {
      const Target& t = train_[idx];
      const double r = t.observed - predictive_location(theta, t);
      rr += r * r;
      const double w = batch.scale * r * inv_var;
      for (std::size_t l = 0; l < k; ++l) {
        grad[z_index(i, l)] += w * theta[w_index(l, t.col)];
        grad[w_index(l, t.col)] += w * theta[z_index(i, l)];
      }
    }
    cells += row_train_[i].size();
  }
  const double lik = -0.5 * rr * inv_var -
                     static_cast<double>(cells) * (density::kLogSqrt2Pi + std::log(sy));
  return lp + batch.scale * lik;
}

double PmfModel::predictive_location(std::span<const double> theta,
                                     const Target& t) const {
  double m = 0.0;
  for (std::size_t l = 0; l < hyper_.k; ++l) {
    m += theta[z_index(t.row, l)] * theta[w_index(l, t.col)];
  }
  return m;
}

void PmfModel::accumulate_predictive_gradient(std::span<const double> theta,
                                              const Target& t,
                                              double w_location, double,
                                              std::span<double> grad) const {
  for (std::size_t l = 0; l < hyper_.k; ++l) {
    const std::size_t zi = z_index(t.row, l);
    const std::size_t wi = w_index(l, t.col);
    grad[zi] += w_location * theta[wi];
    grad[wi] += w_location * theta[zi];
  }
}

PmfModel pmf_model(MatrixData data, std::size_t k, double sigma_y,
                   double sigma_w, double sigma_z) {
  return PmfModel(std::move(data), PmfHyper{k, sigma_y, sigma_w, sigma_z});
}

}  // namespace lcvi
