#include "lcvi/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "lcvi/adam.hpp"
#include "lcvi/meanfield.hpp"

namespace lcvi {

std::string regime_name(Regime r) {
  switch (r) {
    case Regime::StandardVI: return "standard_vi";
    case Regime::JointLCVI: return "joint";
    case Regime::EMClosedForm: return "em_closed_form";
    case Regime::EMNumerical: return "em_numerical";
  }
  return "unknown";
}

Regime parse_regime(const std::string& name) {
  for (Regime r : {Regime::StandardVI, Regime::JointLCVI, Regime::EMClosedForm,
                   Regime::EMNumerical}) {
    if (name == regime_name(r)) return r;
  }
  throw std::invalid_argument(
      "unknown regime '" + name +
      "' (expected standard_vi, joint, em_closed_form or em_numerical)");
}

void OptimizerConfig::validate() const {
  if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  if (batch_rows < 0) throw std::invalid_argument("batch_rows must be >= 0");
  if (s_theta < 1 || s_y < 1) {
    throw std::invalid_argument("s_theta and s_y must be >= 1");
  }
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw std::invalid_argument("learning_rate must be positive");
  }
  if (e_epochs < 1) throw std::invalid_argument("e_epochs must be >= 1");
  if (m_steps < 1) throw std::invalid_argument("m_steps must be >= 1");
}

VariationalParams default_init(const Model& model) {
  return VariationalParams::constant(model.latent_dim(), 0.0, 0.1);
}

DecisionSet closed_form_m_step(const Model& model,
                               const VariationalParams& lambda,
                               const LossSpec& loss, int s_theta, int s_y,
                               const RngState& rng) {
  if (!loss.has_closed_form_estimator()) {
    throw std::invalid_argument("closed-form M-step: loss " + loss.name() +
                                " has no closed-form Bayes estimator");
  }
  return bayes_decisions(model, lambda, model.prediction_targets(), loss,
                         s_theta, s_y, rng);
}

namespace {

constexpr std::uint64_t kShuffleRole = 1;
constexpr std::uint64_t kElboRole = 2;
constexpr std::uint64_t kUtilityRole = 3;
constexpr std::uint64_t kMStepRole = 4;
constexpr std::uint64_t kTraceRole = 5;

using Clock = std::chrono::steady_clock;

/// Row minibatches for one epoch: a seeded permutation cut into chunks.
class BatchSchedule {
 public:
  BatchSchedule(const Model& model, int batch_rows, const RngState& rng)
      : model_(model), rng_(rng.split(kShuffleRole)) {
    const std::size_t n = model.num_rows();
    if (n == 0) throw std::invalid_argument("model has no rows");
    size_ = (batch_rows <= 0 || static_cast<std::size_t>(batch_rows) >= n)
                ? n
                : static_cast<std::size_t>(batch_rows);
  }

  std::vector<Batch> epoch(long index) const {
    const std::size_t n = model_.num_rows();
    if (size_ == n) return {full_batch(model_)};
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    RandomStream stream = rng_.split(static_cast<std::uint64_t>(index)).stream();
    for (std::size_t i = n - 1; i > 0; --i) {
      const auto j = static_cast<std::size_t>(stream.uniform() *
                                              static_cast<double>(i + 1));
      std::swap(rows[i], rows[std::min(j, i)]);
    }
    std::vector<Batch> out;
    for (std::size_t start = 0; start < n; start += size_) {
      const std::size_t len = std::min(size_, n - start);
      out.push_back(make_batch(
          model_, std::span<const std::size_t>(rows.data() + start, len)));
    }
    return out;
  }

 private:
  const Model& model_;
  RngState rng_;
  std::size_t size_;
};

/// Records trace rows and keeps evaluation time out of the wall clock.
class Recorder {
 public:
  Recorder(const Model& model, const TraceSettings& settings, long total,
           const RngState& rng)
      : model_(model),
        settings_(settings),
        total_(total),
        eval_rng_(rng.split(kTraceRole)),
        start_(Clock::now()) {}

  bool due(long epoch) const {
    return settings_.every > 0 &&
           (epoch % settings_.every == 0 || epoch == total_);
  }

  void record(long epoch, double elbo, double u_term,
              const VariationalParams& lambda) {
    const auto t0 = Clock::now();
    const double er =
        bayes_empirical_risk(model_, lambda, settings_.loss,
                             settings_.eval_s_theta, settings_.eval_s_y,
                             eval_rng_);
    excluded_ += std::chrono::duration<double>(Clock::now() - t0).count();
    trace_.append({epoch, elbo, u_term, er, settings_.wall_clock ? elapsed() : 0.0});
  }

  /// Seconds since construction, minus time spent evaluating.
  double elapsed() const {
    return std::chrono::duration<double>(Clock::now() - start_).count() -
           excluded_;
  }

  RunTrace take() { return std::move(trace_); }

 private:
  const Model& model_;
  const TraceSettings& settings_;
  long total_;
  RngState eval_rng_;
  Clock::time_point start_;
  double excluded_ = 0.0;
  RunTrace trace_;
};

void check_init(const Model& model, const VariationalParams& lambda) {
  lambda.validate();
  if (lambda.dim() != model.latent_dim()) {
    throw std::invalid_argument("initial lambda has dimension " +
                                std::to_string(lambda.dim()) + ", model needs " +
                                std::to_string(model.latent_dim()));
  }
}

void check_decisions(const Model& model, const DecisionSet& h) {
  if (h.size() != model.prediction_targets().size()) {
    throw std::invalid_argument("initial decisions: " + std::to_string(h.size()) +
                                " values for " +
                                std::to_string(model.prediction_targets().size()) +
                                " prediction targets");
  }
}

void load_lambda(std::span<const double> flat, VariationalParams& lambda) {
  const std::size_t d = lambda.dim();
  std::copy(flat.begin(), flat.begin() + static_cast<std::ptrdiff_t>(d),
            lambda.means.begin());
  std::copy(flat.begin() + static_cast<std::ptrdiff_t>(d),
            flat.begin() + static_cast<std::ptrdiff_t>(2 * d),
            lambda.log_scales.begin());
}

}  // namespace

FitResult run_standard_vi(const Model& model, const OptimizerConfig& config,
                          const VariationalParams& init,
                          const TraceSettings& trace) {
  config.validate();
  check_init(model, init);
  const RngState rng = seed_rng(config.seed);
  const BatchSchedule schedule(model, config.batch_rows, rng);
  const RngState elbo_rng = rng.split(kElboRole);
  Recorder recorder(model, trace, config.epochs, rng);

  VariationalParams lambda = init;
  std::vector<double> params = lambda.flatten();
  std::vector<double> grad(params.size());
  AdamState adam(params.size(), config.learning_rate);
  const std::size_t d = lambda.dim();
  std::uint64_t step = 0;

  for (long epoch = 1; epoch <= config.epochs; ++epoch) {
    double elbo_sum = 0.0;
    const auto batches = schedule.epoch(epoch);
    for (const Batch& batch : batches) {
      const ElboEstimate e =
          estimate_elbo(model, batch, lambda, config.s_theta, elbo_rng.split(step++));
      std::copy(e.grad_means.begin(), e.grad_means.end(), grad.begin());
      std::copy(e.grad_log_scales.begin(), e.grad_log_scales.end(),
                grad.begin() + static_cast<std::ptrdiff_t>(d));
      adam_step(adam, params, grad);
      load_lambda(params, lambda);
      elbo_sum += e.value;
    }
    if (recorder.due(epoch)) {
      recorder.record(epoch, elbo_sum / static_cast<double>(batches.size()), 0.0,
                      lambda);
    }
  }
  FitResult out;
  out.wall_seconds = recorder.elapsed();
  out.lambda = std::move(lambda);
  out.trace = recorder.take();
  return out;
}

FitResult run_joint_lcvi(const Model& model, const OptimizerConfig& config,
                         const CalibrationObjective& objective,
                         const VariationalParams& init_lambda,
                         const DecisionSet& init_decisions,
                         const TraceSettings& trace) {
  config.validate();
  objective.validate();
  check_init(model, init_lambda);
  check_decisions(model, init_decisions);
  const RngState rng = seed_rng(config.seed);
  const BatchSchedule schedule(model, config.batch_rows, rng);
  const RngState elbo_rng = rng.split(kElboRole);
  const RngState utility_rng = rng.split(kUtilityRole);
  Recorder recorder(model, trace, config.epochs, rng);

  VariationalParams lambda = init_lambda;
  DecisionSet h = init_decisions;
  const std::size_t d = lambda.dim();
  // [means, log_scales, h]
  std::vector<double> params = lambda.flatten();
  params.insert(params.end(), h.values.begin(), h.values.end());
  std::vector<double> grad(params.size(), 0.0);
  AdamState adam(params.size(), config.learning_rate);
  std::vector<std::size_t> active;
  std::uint64_t step = 0;

  for (long epoch = 1; epoch <= config.epochs; ++epoch) {
    double elbo_sum = 0.0, u_sum = 0.0;
    const auto batches = schedule.epoch(epoch);
    for (const Batch& batch : batches) {
      const ElboEstimate e =
          estimate_elbo(model, batch, lambda, config.s_theta, elbo_rng.split(step));
      const UtilityTermEstimate u =
          estimate_utility_term(model, batch, lambda, h, objective,
                                config.s_theta, config.s_y, utility_rng.split(step));
      ++step;
      const CalibratedBound b = calibrated_bound(e, u, objective.weight);

      std::copy(b.grad_means.begin(), b.grad_means.end(), grad.begin());
      std::copy(b.grad_log_scales.begin(), b.grad_log_scales.end(),
                grad.begin() + static_cast<std::ptrdiff_t>(d));
      std::copy(b.grad_h.begin(), b.grad_h.end(),
                grad.begin() + static_cast<std::ptrdiff_t>(2 * d));
      active.resize(2 * d);
      std::iota(active.begin(), active.end(), std::size_t{0});
      for (std::size_t t : batch_prediction_targets(model, batch)) {
        active.push_back(2 * d + t);
      }
      adam_step(adam, params, grad, active);
      load_lambda(params, lambda);
      std::copy(params.begin() + static_cast<std::ptrdiff_t>(2 * d), params.end(),
                h.values.begin());
      elbo_sum += e.value;
      u_sum += u.value;
    }
    if (recorder.due(epoch)) {
      const auto nb = static_cast<double>(batches.size());
      recorder.record(epoch, elbo_sum / nb, u_sum / nb, lambda);
    }
  }
  FitResult out;
  out.wall_seconds = recorder.elapsed();
  out.lambda = std::move(lambda);
  out.decisions = std::move(h);
  out.trace = recorder.take();
  return out;
}

FitResult run_em(const Model& model, const OptimizerConfig& config,
                 const CalibrationObjective& objective,
                 const LossSpec& decision_loss,
                 const VariationalParams& init_lambda,
                 const DecisionSet& init_decisions,
                 const TraceSettings& trace) {
  config.validate();
  objective.validate();
  check_init(model, init_lambda);
  check_decisions(model, init_decisions);
  const bool closed = config.regime == Regime::EMClosedForm;
  if (!closed && config.regime != Regime::EMNumerical) {
    throw std::invalid_argument("run_em: regime must be em_closed_form or em_numerical");
  }
  if (closed && !decision_loss.has_closed_form_estimator()) {
    throw std::invalid_argument("em_closed_form: loss " + decision_loss.name() +
                                " has no closed-form Bayes estimator");
  }
  const RngState rng = seed_rng(config.seed);
  const BatchSchedule schedule(model, config.batch_rows, rng);
  const RngState elbo_rng = rng.split(kElboRole);
  const RngState utility_rng = rng.split(kUtilityRole);
  const RngState m_rng = rng.split(kMStepRole);
  Recorder recorder(model, trace, config.epochs, rng);

  VariationalParams lambda = init_lambda;
  DecisionSet h = init_decisions;
  const std::size_t d = lambda.dim();
  std::vector<double> params = lambda.flatten();
  std::vector<double> grad(params.size());
  AdamState adam(params.size(), config.learning_rate);
  AdamState h_adam(h.size(), config.learning_rate);
  const Batch all = full_batch(model);
  std::uint64_t step = 0;
  long pass = 0;

  for (long epoch = 1; epoch <= config.epochs; ++epoch) {
    double elbo_sum = 0.0, u_sum = 0.0;
    std::size_t n_steps = 0;
    for (int e_pass = 0; e_pass < config.e_epochs; ++e_pass) {
      for (const Batch& batch : schedule.epoch(++pass)) {
        const ElboEstimate e =
            estimate_elbo(model, batch, lambda, config.s_theta, elbo_rng.split(step));
        const UtilityTermEstimate u =
            estimate_utility_term(model, batch, lambda, h, objective,
                                  config.s_theta, config.s_y, utility_rng.split(step));
        ++step;
        const CalibratedBound b = calibrated_bound(e, u, objective.weight);
        std::copy(b.grad_means.begin(), b.grad_means.end(), grad.begin());
        std::copy(b.grad_log_scales.begin(), b.grad_log_scales.end(),
                  grad.begin() + static_cast<std::ptrdiff_t>(d));
        adam_step(adam, params, grad);
        load_lambda(params, lambda);
        elbo_sum += e.value;
        u_sum += u.value;
        ++n_steps;
      }
    }

    const RngState epoch_rng = m_rng.split(static_cast<std::uint64_t>(epoch));
    if (closed) {
      h = closed_form_m_step(model, lambda, decision_loss, config.s_theta,
                             config.s_y, epoch_rng);
    } else {
      for (int m = 0; m < config.m_steps; ++m) {
        const UtilityTermEstimate u = estimate_utility_term(
            model, all, lambda, h, objective, config.s_theta, config.s_y,
            epoch_rng.split(static_cast<std::uint64_t>(m)));
        adam_step(h_adam, h.values, u.grad_h);
      }
    }

    if (recorder.due(epoch)) {
      const auto ns = static_cast<double>(n_steps);
      recorder.record(epoch, elbo_sum / ns, u_sum / ns, lambda);
    }
  }
  FitResult out;
  out.wall_seconds = recorder.elapsed();
  out.lambda = std::move(lambda);
  out.decisions = std::move(h);
  out.trace = recorder.take();
  return out;
}

}  // namespace lcvi
