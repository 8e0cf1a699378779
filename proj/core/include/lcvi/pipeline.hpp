#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "lcvi/config.hpp"
#include "lcvi/evaluate.hpp"
#include "lcvi/model.hpp"
#include "lcvi/optimizer.hpp"

namespace lcvi {

/// Version string embedded in every artifact.
std::string version_string();

/// A pipeline failure tagged with the stage that raised it.
class PipelineError : public std::runtime_error {
 public:
  PipelineError(std::string stage, const std::string& what)
      : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

std::unique_ptr<Model> build_model(const ExperimentConfig& config);

/// Calibration objective for a given robust maximum M.
CalibrationObjective make_objective(const ExperimentConfig& config, double m);

/// Converged standard VI for one seed plus its Bayes-optimal decisions.
struct WarmStart {
  FitResult fit;
  DecisionSet decisions;          // evaluation targets
  DecisionSet initial_h;          // prediction targets, seeds the LCVI run
  std::vector<double> per_target_losses;
  double empirical_risk = 0.0;
};

struct SeedOutcome {
  std::uint64_t seed = 0;
  double m = 0.0;                 // 0 when calibration is skipped
  RiskReport report;
  VariationalParams lambda_vi;
  VariationalParams lambda_lcvi;
  DecisionSet decisions_vi;       // evaluation targets
  DecisionSet decisions_lcvi;     // evaluation targets, Bayes-optimal under the LCVI q
  DecisionSet learned_decisions;  // the optimized {h} on prediction targets
  RunTrace trace;                 // VI rows, then LCVI rows with shifted epochs
  double vi_wall_seconds = 0.0;
  double lcvi_wall_seconds = 0.0;
};

struct PipelineResult {
  std::vector<SeedOutcome> seeds;
  SampleStats improvement;
  double mean_lcvi_wall_seconds = 0.0;
};

/**
 * VI -> calibrate M -> LCVI -> evaluate, per seed. The model is built once;
 * standard VI fits are cached per (seed, s_theta, learning rate, epochs,
 * batch, trace settings), so sweeps over quantiles, regimes or, with
 * tracing off, decision losses reuse them.
 */
class Experiment {
 public:
  explicit Experiment(ExperimentConfig config);

  const ExperimentConfig& config() const noexcept { return config_; }
  const Model& model() const noexcept { return *model_; }

  /// Replaces the configuration; the model must stay the same.
  void reconfigure(ExperimentConfig config);

  const WarmStart& warm_start(std::uint64_t seed);
  SeedOutcome run_seed(std::uint64_t seed);
  PipelineResult run();

 private:
  ExperimentConfig config_;
  std::unique_ptr<Model> model_;
  std::map<std::string, FitResult> fits_;
  std::map<std::string, WarmStart> cache_;
};

/// Writes trace_seed<k>.csv, summary.csv and report.json into `dir`.
void write_artifacts(const ExperimentConfig& config, const PipelineResult& result,
                     const std::filesystem::path& dir);

/// run() then write_artifacts() into config.run.output_dir.
PipelineResult run_pipeline(const ExperimentConfig& config);

enum class SweepAxis { Quantile, SampleBudget, Regime };

SweepAxis parse_sweep_axis(const std::string& name);

/// Applies one sweep value to a config. Quantile values may carry an M
/// multiplier as "q*mult"; sample budgets are written "S_thetaxS_y".
ExperimentConfig apply_sweep_value(const ExperimentConfig& config, SweepAxis axis,
                                   const std::string& value);

struct SweepRow {
  std::string value;
  SampleStats improvement;
  double mean_wall_seconds = 0.0;
};

/**
 * Runs the pipeline once per value and writes `sweep_<axis>.csv` into the
 * output directory, rewriting it after every completed cell so a failure
 * leaves the finished rows on disk.
 */
std::vector<SweepRow> sweep(const ExperimentConfig& config, SweepAxis axis,
                            const std::vector<std::string>& values,
                            bool write_files = true);

}  // namespace lcvi
