#include "lcvi/pipeline.hpp"

#include <charconv>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <system_error>

#include "lcvi/eight_schools.hpp"
#include "lcvi/matrix_data.hpp"
#include "lcvi/pmf.hpp"
#include "lcvi/predictive.hpp"
#include "lcvi/utility.hpp"

#ifndef LCVI_VERSION_STRING
#define LCVI_VERSION_STRING "unknown"
#endif

namespace lcvi {

namespace {

constexpr std::uint64_t kEvalRole = 101;
constexpr std::uint64_t kCalibrationRole = 102;

template <class F>
auto staged(const char* stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const PipelineError&) {
    throw;
  } catch (const std::exception& e) {
    throw PipelineError(stage, e.what());
  }
}

TraceSettings trace_settings(const ExperimentConfig& c) {
  TraceSettings t;
  t.loss = c.loss_spec();
  t.every = c.run.trace_every;
  t.eval_s_theta = c.run.eval_s_theta;
  t.eval_s_y = c.run.eval_s_y;
  t.wall_clock = c.run.timing == TimingMode::Wall;
  return t;
}

std::vector<std::string> artifact_comments(const ExperimentConfig& c) {
  std::vector<std::string> out{"lcvi " + version_string()};
  for (const auto& [key, value] : c.entries()) {
    out.push_back("config " + key + " = " + value);
  }
  return out;
}

}  // namespace

std::string version_string() { return LCVI_VERSION_STRING; }

std::unique_ptr<Model> build_model(const ExperimentConfig& config) {
  const auto& m = config.model;
  switch (m.kind) {
    case ModelKind::EightSchools:
      return std::make_unique<EightSchoolsModel>(
          m.data.empty() ? EightSchoolsData::canonical()
                         : EightSchoolsData::load_csv(m.data));
    case ModelKind::Pmf:
      return std::make_unique<PmfModel>(
          pmf_model(MatrixData::load_csv(m.data), static_cast<std::size_t>(m.k),
                    m.sigma_y, m.sigma_w, m.sigma_z));
    case ModelKind::SyntheticPmf:
      return std::make_unique<PmfModel>(pmf_model(
          generate_synthetic_matrix(static_cast<std::size_t>(m.n_users),
                                    static_cast<std::size_t>(m.n_items),
                                    static_cast<std::size_t>(m.k_true), m.sigma_y,
                                    m.data_seed, m.sigma_w, m.sigma_z),
          static_cast<std::size_t>(m.k), m.sigma_y, m.sigma_w, m.sigma_z));
  }
  throw std::invalid_argument("unknown model kind");
}

CalibrationObjective make_objective(const ExperimentConfig& config, double m) {
  const LossSpec loss = config.loss_spec();
  const bool naive = config.optimizer.estimator == EstimatorKind::Naive;
  switch (config.decision.transform) {
    case TransformKind::RobustMax:
      return CalibrationObjective::linearized(loss, m);
    case TransformKind::Exp:
      return naive ? CalibrationObjective::naive(
                         UtilitySpec::exp_transform(gamma_from_quantile(m), loss))
                   : CalibrationObjective::linearized(loss, m);
    case TransformKind::Native:
      return naive ? CalibrationObjective::naive(UtilitySpec::native_exp_squared())
                   : CalibrationObjective::linearized(loss, m);
  }
  throw std::invalid_argument("unknown transform");
}

Experiment::Experiment(ExperimentConfig config) : config_(std::move(config)) {
  staged("config", [&] { config_.validate(); });
  model_ = staged("data", [&] { return build_model(config_); });
}

void Experiment::reconfigure(ExperimentConfig config) {
  staged("config", [&] { config.validate(); });
  if (!(config.model == config_.model)) {
    throw PipelineError("config", "reconfigure cannot change the model block");
  }
  config_ = std::move(config);
}

const WarmStart& Experiment::warm_start(std::uint64_t seed) {
  const auto& o = config_.optimizer;
  // The VI fit only sees the decision loss through the recorded trace.
  std::ostringstream fit_key;
  fit_key << seed << '|' << o.s_theta << '|' << format_double(o.learning_rate) << '|'
          << config_.warm_start_epochs() << '|' << o.batch_rows << '|'
          << config_.run.trace_every << '|' << static_cast<int>(config_.run.timing);
  if (config_.run.trace_every > 0) {
    fit_key << '|' << config_.loss_spec().name() << '|' << config_.run.eval_s_theta
            << '|' << config_.run.eval_s_y;
  }
  std::ostringstream key;
  key << fit_key.str() << '#' << config_.loss_spec().name() << '|'
      << config_.run.eval_s_theta << '|' << config_.run.eval_s_y;
  if (const auto it = cache_.find(key.str()); it != cache_.end()) return it->second;

  auto fit_it = fits_.find(fit_key.str());
  if (fit_it == fits_.end()) {
    OptimizerConfig vi = o;
    vi.regime = Regime::StandardVI;
    vi.epochs = config_.warm_start_epochs();
    vi.seed = seed;
    FitResult fit = staged("vi", [&] {
      return run_standard_vi(*model_, vi, default_init(*model_), trace_settings(config_));
    });
    fit_it = fits_.emplace(fit_key.str(), std::move(fit)).first;
  }

  WarmStart ws;
  ws.fit = fit_it->second;
  staged("evaluate", [&] {
    const LossSpec loss = config_.loss_spec();
    const RngState eval_rng = seed_rng(seed).split(kEvalRole);
    ws.decisions = bayes_decisions(*model_, ws.fit.lambda, model_->evaluation_targets(),
                                   loss, config_.run.eval_s_theta, config_.run.eval_s_y,
                                   eval_rng);
    ws.initial_h = bayes_decisions(*model_, ws.fit.lambda, model_->prediction_targets(),
                                   loss, config_.run.eval_s_theta, config_.run.eval_s_y,
                                   eval_rng.split(1));
    const auto observed = evaluation_observations(*model_);
    ws.per_target_losses = per_target_losses(loss, ws.decisions, observed);
    ws.empirical_risk = empirical_risk(loss, ws.decisions, observed);
  });
  return cache_.emplace(key.str(), std::move(ws)).first->second;
}

SeedOutcome Experiment::run_seed(std::uint64_t seed) {
  const WarmStart& ws = warm_start(seed);
  const LossSpec loss = config_.loss_spec();
  const TraceSettings settings = trace_settings(config_);
  const RngState eval_rng = seed_rng(seed).split(kEvalRole);

  SeedOutcome out;
  out.seed = seed;
  out.lambda_vi = ws.fit.lambda;
  out.decisions_vi = ws.decisions;
  out.vi_wall_seconds = ws.fit.wall_seconds;
  out.trace = ws.fit.trace;

  if (config_.optimizer.regime == Regime::StandardVI) {
    out.lambda_lcvi = ws.fit.lambda;
    out.decisions_lcvi = ws.decisions;
    out.report = staged("evaluate", [&] {
      return make_risk_report(ws.empirical_risk, ws.empirical_risk,
                              ws.per_target_losses);
    });
    return out;
  }

  out.m = staged("calibrate", [&] {
    return calibrate_M(*model_, ws.fit.lambda, loss, config_.decision.quantile,
                       config_.run.eval_s_theta, config_.run.eval_s_y,
                       seed_rng(seed).split(kCalibrationRole)) *
           config_.decision.m_multiplier;
  });
  const CalibrationObjective objective =
      staged("calibrate", [&] { return make_objective(config_, out.m); });

  OptimizerConfig oc = config_.optimizer;
  oc.seed = seed;
  FitResult fit = staged("lcvi", [&] {
    if (oc.regime == Regime::JointLCVI) {
      return run_joint_lcvi(*model_, oc, objective, ws.fit.lambda, ws.initial_h,
                            settings);
    }
    return run_em(*model_, oc, objective, loss, ws.fit.lambda, ws.initial_h,
                  settings);
  });
  out.lambda_lcvi = fit.lambda;
  out.learned_decisions = fit.decisions;
  out.lcvi_wall_seconds = fit.wall_seconds;
  out.trace.extend(fit.trace, config_.warm_start_epochs());

  out.report = staged("evaluate", [&] {
    out.decisions_lcvi =
        bayes_decisions(*model_, fit.lambda, model_->evaluation_targets(), loss,
                        config_.run.eval_s_theta, config_.run.eval_s_y, eval_rng);
    const auto observed = evaluation_observations(*model_);
    return make_risk_report(ws.empirical_risk,
                            empirical_risk(loss, out.decisions_lcvi, observed),
                            per_target_losses(loss, out.decisions_lcvi, observed));
  });
  return out;
}

PipelineResult Experiment::run() {
  PipelineResult result;
  std::vector<double> improvements;
  double wall = 0.0;
  for (std::uint64_t seed : config_.run.seeds) {
    result.seeds.push_back(run_seed(seed));
    improvements.push_back(result.seeds.back().report.improvement);
    wall += result.seeds.back().lcvi_wall_seconds;
  }
  for (auto& s : result.seeds) {
    s.report.seed_count = static_cast<int>(result.seeds.size());
  }
  result.improvement = sample_stats(improvements);
  result.mean_lcvi_wall_seconds = wall / static_cast<double>(result.seeds.size());
  return result;
}

void write_artifacts(const ExperimentConfig& config, const PipelineResult& result,
                     const std::filesystem::path& dir) {
  staged("output", [&] {
    std::filesystem::create_directories(dir);
    const auto comments = artifact_comments(config);

    for (const auto& s : result.seeds) {
      auto c = comments;
      c.push_back("seed " + std::to_string(s.seed));
      c.push_back("epochs 1-" + std::to_string(config.warm_start_epochs()) +
                  " standard VI; later epochs calibrated (" +
                  regime_name(config.optimizer.regime) + ")");
      s.trace.write_csv((dir / ("trace_seed" + std::to_string(s.seed) + ".csv")).string(),
                        c);
    }

    std::ofstream summary(dir / "summary.csv", std::ios::binary);
    if (!summary) throw std::runtime_error("cannot write summary.csv");
    for (const auto& c : comments) summary << "# " << c << '\n';
    summary << "seed,m,er_vi,er_lcvi,improvement,vi_wall_seconds,lcvi_wall_seconds\n";
    for (const auto& s : result.seeds) {
      summary << s.seed << ',' << format_double(s.m) << ','
              << format_double(s.report.er_vi) << ',' << format_double(s.report.er_lcvi)
              << ',' << format_double(s.report.improvement) << ','
              << format_double(s.vi_wall_seconds) << ','
              << format_double(s.lcvi_wall_seconds) << '\n';
    }

    nlohmann::ordered_json j;
    j["version"] = version_string();
    nlohmann::ordered_json cfg;
    for (const auto& [key, value] : config.entries()) cfg[key] = value;
    j["config"] = cfg;
    j["seeds"] = config.run.seeds;
    j["seed_count"] = result.seeds.size();
    double er_vi = 0.0, er_lcvi = 0.0;
    for (const auto& s : result.seeds) {
      er_vi += s.report.er_vi;
      er_lcvi += s.report.er_lcvi;
    }
    const auto n = static_cast<double>(result.seeds.size());
    j["er_vi"] = er_vi / n;
    j["er_lcvi"] = er_lcvi / n;
    j["improvement"] = result.improvement.mean;
    j["improvement_std"] = result.improvement.stddev;
    j["mean_lcvi_wall_seconds"] = result.mean_lcvi_wall_seconds;
    auto& reports = j["reports"] = nlohmann::ordered_json::array();
    for (const auto& s : result.seeds) {
      nlohmann::ordered_json r;
      r["seed"] = s.seed;
      r["m"] = s.m;
      r["er_vi"] = s.report.er_vi;
      r["er_lcvi"] = s.report.er_lcvi;
      r["improvement"] = s.report.improvement;
      r["seed_count"] = s.report.seed_count;
      r["vi_wall_seconds"] = s.vi_wall_seconds;
      r["lcvi_wall_seconds"] = s.lcvi_wall_seconds;
      r["per_target_losses"] = s.report.per_target_losses;
      reports.push_back(std::move(r));
    }
    std::ofstream report(dir / "report.json", std::ios::binary);
    if (!report) throw std::runtime_error("cannot write report.json");
    report << j.dump(2) << '\n';
  });
}

PipelineResult run_pipeline(const ExperimentConfig& config) {
  Experiment experiment(config);
  PipelineResult result = experiment.run();
  write_artifacts(config, result, config.run.output_dir);
  return result;
}

SweepAxis parse_sweep_axis(const std::string& name) {
  if (name == "quantile") return SweepAxis::Quantile;
  if (name == "sample_budget") return SweepAxis::SampleBudget;
  if (name == "regime") return SweepAxis::Regime;
  throw std::invalid_argument("unknown sweep axis '" + name +
                              "' (expected quantile, sample_budget or regime)");
}

namespace {

const char* axis_name(SweepAxis a) {
  switch (a) {
    case SweepAxis::Quantile: return "quantile";
    case SweepAxis::SampleBudget: return "sample_budget";
    case SweepAxis::Regime: return "regime";
  }
  return "unknown";
}

template <class T>
T parse_sweep_number(const std::string& text, const std::string& value) {
  T v{};
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw std::invalid_argument("bad sweep value '" + value + "'");
  }
  return v;
}

std::string path_safe(std::string s) {
  for (char& ch : s) {
    if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '.' && ch != '_') ch = '_';
  }
  return s;
}

}  // namespace

ExperimentConfig apply_sweep_value(const ExperimentConfig& config, SweepAxis axis,
                                   const std::string& value) {
  ExperimentConfig c = config;
  switch (axis) {
    case SweepAxis::Quantile: {
      const auto star = value.find('*');
      c.decision.quantile = parse_sweep_number<double>(value.substr(0, star), value);
      if (star != std::string::npos) {
        c.decision.m_multiplier =
            parse_sweep_number<double>(value.substr(star + 1), value);
      }
      break;
    }
    case SweepAxis::SampleBudget: {
      const auto x = value.find('x');
      if (x == std::string::npos) {
        throw std::invalid_argument("sample budget '" + value +
                                    "' must look like 30x10 (S_theta x S_y)");
      }
      c.optimizer.s_theta = parse_sweep_number<int>(value.substr(0, x), value);
      c.optimizer.s_y = parse_sweep_number<int>(value.substr(x + 1), value);
      break;
    }
    case SweepAxis::Regime:
      c.optimizer.regime = parse_regime(value);
      break;
  }
  c.validate();
  return c;
}

std::vector<SweepRow> sweep(const ExperimentConfig& config, SweepAxis axis,
                            const std::vector<std::string>& values,
                            bool write_files) {
  if (values.empty()) throw std::invalid_argument("sweep: no values");
  std::vector<ExperimentConfig> cells;
  for (const auto& v : values) {
    cells.push_back(staged("config", [&] { return apply_sweep_value(config, axis, v); }));
  }
  const std::filesystem::path dir(config.run.output_dir);
  const auto table = dir / (std::string("sweep_") + axis_name(axis) + ".csv");

  std::vector<SweepRow> rows;
  const auto flush = [&] {
    std::filesystem::create_directories(dir);
    std::ofstream out(table, std::ios::binary);
    if (!out) throw PipelineError("output", "cannot write " + table.string());
    for (const auto& c : artifact_comments(config)) out << "# " << c << '\n';
    out << "# axis " << axis_name(axis) << '\n';
    out << "axis_value,mean_improvement,std_improvement,mean_wall_seconds\n";
    for (const auto& r : rows) {
      out << r.value << ',' << format_double(r.improvement.mean) << ','
          << format_double(r.improvement.stddev) << ','
          << format_double(r.mean_wall_seconds) << '\n';
    }
  };

  Experiment experiment(cells.front());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    try {
      experiment.reconfigure(cells[i]);
      const PipelineResult result = experiment.run();
      if (write_files) {
        write_artifacts(cells[i], result,
                        dir / (std::string(axis_name(axis)) + "_" + path_safe(values[i])));
      }
      rows.push_back({values[i], result.improvement, result.mean_lcvi_wall_seconds});
      if (write_files) flush();
    } catch (const std::exception& e) {
      throw PipelineError("sweep cell " + values[i], e.what());
    }
  }
  return rows;
}

}  // namespace lcvi
