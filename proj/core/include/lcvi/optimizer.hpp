#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "lcvi/evaluate.hpp"
#include "lcvi/model.hpp"
#include "lcvi/predictive.hpp"
#include "lcvi/utility_term.hpp"
#include "lcvi/variational_params.hpp"

namespace lcvi {

enum class Regime { StandardVI, JointLCVI, EMClosedForm, EMNumerical };

std::string regime_name(Regime r);
/// Accepts the names produced by regime_name(); throws std::invalid_argument.
Regime parse_regime(const std::string& name);

struct OptimizerConfig {
  Regime regime = Regime::StandardVI;
  /// Passes over the model's rows. Zero returns the initialization.
  long epochs = 1000;
  /// Rows per minibatch; 0 or anything >= num_rows means full batch.
  int batch_rows = 0;
  int s_theta = 30;
  int s_y = 10;
  std::uint64_t seed = 0;
  EstimatorKind estimator = EstimatorKind::Linearized;
  double learning_rate = 0.01;
  /// Epochs of lambda updates per M-step (EM regimes).
  int e_epochs = 1;
  /// Adam steps on {h} per numerical M-step.
  int m_steps = 10;

  void validate() const;

  friend bool operator==(const OptimizerConfig&, const OptimizerConfig&) = default;
};

/// What the run records. With every == 0 nothing is recorded.
struct TraceSettings {
  LossSpec loss = LossSpec::squared();
  long every = 100;
  int eval_s_theta = 100;
  int eval_s_y = 10;
  bool wall_clock = true;
};

struct FitResult {
  VariationalParams lambda;
  DecisionSet decisions;  // empty for standard VI
  RunTrace trace;
  double wall_seconds = 0.0;
};

/// Means 0, log-scales log(0.1).
VariationalParams default_init(const Model& model);

/// Adam ascent on the reparameterized ELBO.
FitResult run_standard_vi(const Model& model, const OptimizerConfig& config,
                          const VariationalParams& init,
                          const TraceSettings& trace = {});

/**
 * Adam ascent on ELBO + weight * U over the concatenation (lambda, {h}),
 * sharing one Adam state. Each step only moves the decisions of prediction
 * targets inside the current minibatch.
 *
 * With objective.weight == 0 the lambda trajectory is bit-identical to
 * run_standard_vi under the same config.
 */
FitResult run_joint_lcvi(const Model& model, const OptimizerConfig& config,
                         const CalibrationObjective& objective,
                         const VariationalParams& init_lambda,
                         const DecisionSet& init_decisions,
                         const TraceSettings& trace = {});

/**
 * EM-style alternation: config.e_epochs epochs of lambda updates at fixed
 * {h}, then an M-step over all decisions. EMClosedForm sets each h_i to
 * the Bayes estimator of `decision_loss` over S_theta * S_y fresh
 * predictive samples; EMNumerical takes config.m_steps Adam steps on the
 * aggregated U.
 *
 * Throws std::invalid_argument for EMClosedForm with a loss that has no
 * closed-form estimator.
 */
FitResult run_em(const Model& model, const OptimizerConfig& config,
                 const CalibrationObjective& objective,
                 const LossSpec& decision_loss,
                 const VariationalParams& init_lambda,
                 const DecisionSet& init_decisions,
                 const TraceSettings& trace = {});

/// One closed-form M-step with the given sample stream.
DecisionSet closed_form_m_step(const Model& model,
                               const VariationalParams& lambda,
                               const LossSpec& loss, int s_theta, int s_y,
                               const RngState& rng);

}  // namespace lcvi
