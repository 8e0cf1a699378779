#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "lcvi/model.hpp"

namespace lcvi {

struct EightSchoolsData {
  static constexpr std::size_t kSchools = 8;

  std::array<std::string, kSchools> names;
  std::array<double, kSchools> effects{};
  std::array<double, kSchools> std_errors{};

  /// The textbook SAT-coaching values.
  static EightSchoolsData canonical();

  /// CSV with header `school,y,sigma` and exactly eight rows.
  static EightSchoolsData load_csv(const std::filesystem::path& path);

  void validate() const;
};

/**
 * Centered hierarchical model
 *
 *   y_j ~ N(theta_j, sigma_j^2), theta_j ~ N(mu, tau^2),
 *   mu ~ N(0, 5^2), tau ~ half-Cauchy(0, 5).
 *
 * Latent layout: [mu, tau, theta_1..theta_8]; tau is positive and is
 * optimized as log tau. Rows are schools and each school is both a training
 * and a prediction target (risk is measured on the training data).
 */
class EightSchoolsModel final : public Model {
 public:
  static constexpr std::size_t kMu = 0;
  static constexpr std::size_t kTau = 1;
  static constexpr std::size_t kTheta0 = 2;
  static constexpr double kMuPriorSd = 5.0;
  static constexpr double kTauPriorScale = 5.0;

  explicit EightSchoolsModel(EightSchoolsData data);

  const EightSchoolsData& data() const noexcept { return data_; }

  std::string name() const override { return "eight_schools"; }
  std::size_t latent_dim() const override { return 10; }
  std::span<const SupportTransform> support() const override {
    return support_;
  }
  std::vector<std::string> latent_names() const override;
  std::size_t num_rows() const override { return EightSchoolsData::kSchools; }
  std::span<const Target> train_targets() const override { return targets_; }
  std::span<const Target> prediction_targets() const override {
    return targets_;
  }
  std::span<const std::size_t> prediction_targets_in_row(
      std::size_t row) const override {
    return {&row_index_.at(row), 1};
  }

  double log_joint(std::span<const double> theta, const Batch& batch,
                   std::span<double> grad) const override;
  double predictive_location(std::span<const double> theta,
                             const Target& t) const override {
    return theta[kTheta0 + t.row];
  }
  double predictive_scale(std::span<const double>,
                          const Target& t) const override {
    return data_.std_errors[t.row];
  }
  void accumulate_predictive_gradient(std::span<const double>,
                                      const Target& t, double w_location,
                                      double,
                                      std::span<double> grad) const override {
    grad[kTheta0 + t.row] += w_location;
  }

 private:
  EightSchoolsData data_;
  std::vector<SupportTransform> support_;
  std::vector<Target> targets_;
  std::array<std::size_t, EightSchoolsData::kSchools> row_index_{};
};

EightSchoolsModel eight_schools_model(
    const EightSchoolsData& data = EightSchoolsData::canonical());

}  // namespace lcvi
