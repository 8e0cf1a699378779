#pragma once

#include <vector>

#include "lcvi/matrix_data.hpp"
#include "lcvi/model.hpp"

namespace lcvi {

struct PmfHyper {
  std::size_t k = 20;
  double sigma_y = 10.0;
  double sigma_w = 10.0;
  double sigma_z = 10.0;

  void validate() const;
};

/**
 * Probabilistic matrix factorization Y ~ N(ZW, sigma_y^2) with
 * Z (users x k) ~ N(0, sigma_z^2) and W (k x items) ~ N(0, sigma_w^2).
 *
 * Latent layout: Z row-major, then W row-major. Rows are users. Train cells
 * feed the likelihood and carry the calibration decisions; held-out cells
 * are the evaluation targets.
 */
class PmfModel final : public Model {
 public:
  PmfModel(MatrixData data, PmfHyper hyper);

  const MatrixData& data() const noexcept { return data_; }
  const PmfHyper& hyper() const noexcept { return hyper_; }

  std::size_t z_index(std::size_t user, std::size_t l) const {
    return user * hyper_.k + l;
  }
  std::size_t w_index(std::size_t l, std::size_t item) const {
    return z_size_ + l * data_.n_cols + item;
  }

  std::string name() const override { return "pmf"; }
  std::size_t latent_dim() const override { return support_.size(); }
  std::span<const SupportTransform> support() const override {
    return support_;
  }
  std::vector<std::string> latent_names() const override;
  std::size_t num_rows() const override { return data_.n_rows; }
  std::span<const Target> train_targets() const override { return train_; }
  std::span<const Target> prediction_targets() const override { return train_; }
  std::span<const std::size_t> prediction_targets_in_row(
      std::size_t row) const override {
    return row_train_.at(row);
  }
  std::span<const Target> evaluation_targets() const override { return heldout_; }

  double log_joint(std::span<const double> theta, const Batch& batch,
                   std::span<double> grad) const override;
  double predictive_location(std::span<const double> theta,
                             const Target& t) const override;
  double predictive_scale(std::span<const double>,
                          const Target&) const override {
    return hyper_.sigma_y;
  }
  void accumulate_predictive_gradient(std::span<const double> theta,
                                      const Target& t, double w_location,
                                      double w_scale,
                                      std::span<double> grad) const override;

 private:
  MatrixData data_;
  PmfHyper hyper_;
  std::size_t z_size_;
  std::vector<SupportTransform> support_;
  std::vector<Target> train_;
  std::vector<Target> heldout_;
  std::vector<std::vector<std::size_t>> row_train_;
};

PmfModel pmf_model(MatrixData data, std::size_t k, double sigma_y,
                   double sigma_w, double sigma_z);

}  // namespace lcvi
