#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "lcvi/loss.hpp"
#include "lcvi/optimizer.hpp"

namespace lcvi {

enum class ModelKind { EightSchools, Pmf, SyntheticPmf };

/// How the decision loss becomes a utility for calibration.
///   robust_max  u = M - loss             (linearized estimator only)
///   exp         u = exp(-loss / M)
///   native      u = exp(-(h - y)^2), evaluated with loss 1 - u
enum class TransformKind { RobustMax, Exp, Native };

/// `none` writes 0 to the trace wall_seconds column so reruns produce
/// byte-identical traces; measured times still go to the report.
enum class TimingMode { None, Wall };

/**
 * Experiment description, stored as an INI file:
 *
 *   [model]      kind, data, n_users, n_items, k, k_true, sigma_y, sigma_w,
 *                sigma_z, data_seed
 *   [decision]   loss, q, c, transform, quantile, m_multiplier
 *   [optimizer]  regime, estimator, epochs, vi_epochs, batch_rows,
 *                learning_rate, s_theta, s_y, e_epochs, m_steps
 *   [run]        seeds, output_dir, trace_every, eval_s_theta, eval_s_y,
 *                timing
 *
 * Missing keys take the defaults below; unknown keys are errors.
 */
struct ExperimentConfig {
  struct ModelBlock {
    ModelKind kind = ModelKind::SyntheticPmf;
    std::string data;  // CSV path; empty selects built-in data
    int n_users = 50;
    int n_items = 20;
    int k = 5;
    int k_true = 5;
    double sigma_y = 10.0;
    double sigma_w = 10.0;
    double sigma_z = 10.0;
    std::uint64_t data_seed = 1;
    friend bool operator==(const ModelBlock&, const ModelBlock&) = default;
  } model;

  struct DecisionBlock {
    std::string loss = "squared";  // squared|absolute|tilted|linex|exp_squared_complement
    double q = 0.5;
    double c = 1.0;
    TransformKind transform = TransformKind::Exp;
    double quantile = 0.9;
    /// Scales the calibrated M, e.g. to push it far beyond the losses.
    double m_multiplier = 1.0;
    friend bool operator==(const DecisionBlock&, const DecisionBlock&) = default;
  } decision;

  OptimizerConfig optimizer;  // seed unused; seeds come from [run]
  /// Epochs of the standard VI warm start; 0 means "same as epochs".
  long vi_epochs = 0;

  struct RunBlock {
    std::vector<std::uint64_t> seeds{1};
    std::string output_dir = "out";
    long trace_every = 100;
    int eval_s_theta = 100;
    int eval_s_y = 10;
    TimingMode timing = TimingMode::None;
    friend bool operator==(const RunBlock&, const RunBlock&) = default;
  } run;

  LossSpec loss_spec() const;
  long warm_start_epochs() const { return vi_epochs > 0 ? vi_epochs : optimizer.epochs; }

  /// Throws std::invalid_argument naming the offending key.
  void validate() const;

  static ExperimentConfig parse(std::istream& in);
  static ExperimentConfig parse_string(const std::string& text);
  /// Relative data paths are resolved against the file's directory.
  static ExperimentConfig load(const std::filesystem::path& path);

  std::string serialize() const;
  /// ("section.key", value) pairs in serialization order.
  std::vector<std::pair<std::string, std::string>> entries() const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

std::string model_kind_name(ModelKind k);
std::string transform_name(TransformKind k);
std::string estimator_name(EstimatorKind k);
LossSpec parse_loss(const std::string& family, double q, double c);

}  // namespace lcvi
