#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "lcvi/loss.hpp"
#include "lcvi/predictive.hpp"

namespace lcvi {

struct TraceRow {
  long epoch = 0;
  double elbo = 0.0;
  double u_term = 0.0;
  double empirical_risk = 0.0;
  double wall_seconds = 0.0;

  friend bool operator==(const TraceRow&, const TraceRow&) = default;
};

/// Optimization history. Epochs are strictly increasing and every value is
/// finite; append() enforces both.
class RunTrace {
 public:
  void append(const TraceRow& row);

  /// Appends `other` with its epochs shifted by `epoch_offset`.
  void extend(const RunTrace& other, long epoch_offset);

  const std::vector<TraceRow>& rows() const noexcept { return rows_; }
  bool empty() const noexcept { return rows_.empty(); }
  std::size_t size() const noexcept { return rows_.size(); }
  long last_epoch() const noexcept { return rows_.empty() ? 0 : rows_.back().epoch; }

  static constexpr const char* kHeader =
      "epoch,elbo,u_term,empirical_risk,wall_seconds";

  /// Writes `# `-prefixed comment lines, the header, then one line per row.
  /// Doubles are printed in shortest round-trip form.
  void write_csv(std::ostream& out,
                 std::span<const std::string> comments = {}) const;
  void write_csv(const std::string& path,
                 std::span<const std::string> comments = {}) const;

  /// Skips comment lines; throws std::runtime_error on a malformed file.
  static RunTrace read_csv(std::istream& in);

  friend bool operator==(const RunTrace&, const RunTrace&) = default;

 private:
  std::vector<TraceRow> rows_;
};

/// Per-target losses of `decisions` against `observed`.
std::vector<double> per_target_losses(const LossSpec& loss,
                                      const DecisionSet& decisions,
                                      std::span<const double> observed);

/// Mean loss. Throws std::invalid_argument on empty or misaligned input.
double empirical_risk(const LossSpec& loss, const DecisionSet& decisions,
                      std::span<const double> observed);

/// (er_vi - er_lcvi) / er_vi; positive means LCVI improved.
/// Throws std::domain_error unless er_vi > 0.
double risk_reduction(double er_vi, double er_lcvi);

struct RiskReport {
  double er_vi = 0.0;
  double er_lcvi = 0.0;
  double improvement = 0.0;
  std::vector<double> per_target_losses;  // LCVI decisions
  int seed_count = 1;
};

RiskReport make_risk_report(double er_vi, double er_lcvi,
                            std::vector<double> per_target_losses);

/// Sample mean and (n - 1) standard deviation; std is 0 for a single value.
struct SampleStats {
  double mean = 0.0;
  double stddev = 0.0;
};

SampleStats sample_stats(std::span<const double> values);

/// Observed values of the model's evaluation targets.
std::vector<double> evaluation_observations(const Model& model);

/// Empirical risk of the Bayes-optimal decisions under q for every
/// evaluation target.
double bayes_empirical_risk(const Model& model, const VariationalParams& lambda,
                            const LossSpec& loss, int s_theta, int s_y,
                            const RngState& rng,
                            std::vector<double>* per_target = nullptr);

/// Shortest round-trip decimal form of a double.
std::string format_double(double x);

}  // namespace lcvi
