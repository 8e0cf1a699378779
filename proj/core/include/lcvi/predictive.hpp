#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "lcvi/loss.hpp"
#include "lcvi/model.hpp"
#include "lcvi/random.hpp"
#include "lcvi/variational_params.hpp"

namespace lcvi {

/// One decision h_i per prediction target, index-aligned with
/// Model::prediction_targets().
struct DecisionSet {
  std::vector<double> values;

  DecisionSet() = default;
  explicit DecisionSet(std::vector<double> v) : values(std::move(v)) {}
  DecisionSet(std::size_t n, double fill) : values(n, fill) {}

  std::size_t size() const noexcept { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }

  friend bool operator==(const DecisionSet&, const DecisionSet&) = default;
};

/**
 * Samples from the approximate posterior predictive. S_theta latent draws
 * are shared by all targets; each (target, latent draw) pair then gets S_y
 * fresh delta draws keyed by the target's index, so the samples for a target
 * do not depend on which other targets are requested.
 */
class PredictiveSampler {
 public:
  PredictiveSampler(const Model& model, const VariationalParams& lambda,
                    int s_theta, int s_y, const RngState& rng);

  /// S_theta * S_y draws of y for `target`; `key` selects the delta stream.
  std::vector<double> draw(std::size_t key, const Target& target) const;

  int s_theta() const noexcept { return s_theta_; }
  int s_y() const noexcept { return s_y_; }

 private:
  const Model& model_;
  int s_theta_;
  int s_y_;
  RngState delta_rng_;
  std::size_t dim_;
  std::vector<double> thetas_;  // s_theta x dim, constrained
};

/// Bayes-optimal decisions under q for each of `targets` (keyed by position).
DecisionSet bayes_decisions(const Model& model,
                            const VariationalParams& lambda,
                            std::span<const Target> targets,
                            const LossSpec& loss, int s_theta, int s_y,
                            const RngState& rng);

/// Realized loss of the q-optimal decision on every training target.
std::vector<double> calibration_losses(const Model& model,
                                       const VariationalParams& lambda,
                                       const LossSpec& loss, int s_theta,
                                       int s_y, const RngState& rng);

/**
 * Robust maximum M_q: the nearest-rank q-quantile of calibration_losses().
 * `lambda` should come from a converged standard VI run.
 *
 * Throws std::domain_error when the quantile is not positive, since every
 * downstream use divides by M.
 */
double calibrate_M(const Model& model, const VariationalParams& lambda,
                   const LossSpec& loss, double q, int s_theta, int s_y,
                   const RngState& rng);

}  // namespace lcvi
