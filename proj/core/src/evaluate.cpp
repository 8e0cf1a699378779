#include "lcvi/evaluate.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace lcvi {

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

void RunTrace::append(const TraceRow& row) {
  if (!rows_.empty() && row.epoch <= rows_.back().epoch) {
    throw std::invalid_argument("RunTrace: epoch " + std::to_string(row.epoch) +
                                " does not follow " +
                                std::to_string(rows_.back().epoch));
  }
  if (!std::isfinite(row.elbo) || !std::isfinite(row.u_term) ||
      !std::isfinite(row.empirical_risk) || !std::isfinite(row.wall_seconds)) {
    throw std::domain_error("RunTrace: non-finite value at epoch " +
                            std::to_string(row.epoch));
  }
  rows_.push_back(row);
}

void RunTrace::extend(const RunTrace& other, long epoch_offset) {
  for (TraceRow row : other.rows_) {
    row.epoch += epoch_offset;
    append(row);
  }
}

void RunTrace::write_csv(std::ostream& out,
                         std::span<const std::string> comments) const {
  for (const auto& c : comments) out << "# " << c << '\n';
  out << kHeader << '\n';
  for (const auto& r : rows_) {
    out << r.epoch << ',' << format_double(r.elbo) << ','
        << format_double(r.u_term) << ',' << format_double(r.empirical_risk)
        << ',' << format_double(r.wall_seconds) << '\n';
  }
}

void RunTrace::write_csv(const std::string& path,
                         std::span<const std::string> comments) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write trace file " + path);
  write_csv(out, comments);
  if (!out) throw std::runtime_error("error writing trace file " + path);
}

namespace {

double parse_double(std::string_view field, long line) {
  double v = 0.0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw std::runtime_error("trace CSV line " + std::to_string(line) +
                             ": bad number '" + std::string(field) + "'");
  }
  return v;
}

}  // namespace

RunTrace RunTrace::read_csv(std::istream& in) {
  RunTrace trace;
  std::string line;
  long line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line != kHeader) {
        throw std::runtime_error("trace CSV: unexpected header '" + line + "'");
      }
      header_seen = true;
      continue;
    }
    std::vector<std::string_view> f;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      f.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (f.size() != 5) {
      throw std::runtime_error("trace CSV line " + std::to_string(line_no) +
                               ": expected 5 fields");
    }
    TraceRow row;
    row.epoch = static_cast<long>(parse_double(f[0], line_no));
    row.elbo = parse_double(f[1], line_no);
    row.u_term = parse_double(f[2], line_no);
    row.empirical_risk = parse_double(f[3], line_no);
    row.wall_seconds = parse_double(f[4], line_no);
    trace.append(row);
  }
  if (!header_seen) throw std::runtime_error("trace CSV: missing header");
  return trace;
}

std::vector<double> per_target_losses(const LossSpec& loss,
                                      const DecisionSet& decisions,
                                      std::span<const double> observed) {
  if (decisions.size() != observed.size()) {
    throw std::invalid_argument("empirical risk: " +
                                std::to_string(decisions.size()) +
                                " decisions for " +
                                std::to_string(observed.size()) + " observations");
  }
  if (observed.empty()) {
    throw std::invalid_argument("empirical risk: no evaluation targets");
  }
  std::vector<double> out(observed.size());
  for (std::size_t i = 0; i < observed.size(); ++i) {
    out[i] = lcvi::loss(loss, observed[i], decisions[i]);
  }
  return out;
}

double empirical_risk(const LossSpec& loss, const DecisionSet& decisions,
                      std::span<const double> observed) {
  const auto losses = per_target_losses(loss, decisions, observed);
  double acc = 0.0;
  for (double l : losses) acc += l;
  return acc / static_cast<double>(losses.size());
}

double risk_reduction(double er_vi, double er_lcvi) {
  if (!(er_vi > 0.0)) {
    throw std::domain_error("risk_reduction: VI risk must be positive");
  }
  return (er_vi - er_lcvi) / er_vi;
}

RiskReport make_risk_report(double er_vi, double er_lcvi,
                            std::vector<double> losses) {
  RiskReport r;
  r.er_vi = er_vi;
  r.er_lcvi = er_lcvi;
  r.improvement = risk_reduction(er_vi, er_lcvi);
  r.per_target_losses = std::move(losses);
  return r;
}

SampleStats sample_stats(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("sample_stats: no values");
  SampleStats s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

std::vector<double> evaluation_observations(const Model& model) {
  const auto targets = model.evaluation_targets();
  std::vector<double> out(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) out[i] = targets[i].observed;
  return out;
}

double bayes_empirical_risk(const Model& model, const VariationalParams& lambda,
                            const LossSpec& loss, int s_theta, int s_y,
                            const RngState& rng,
                            std::vector<double>* per_target) {
  const DecisionSet h = bayes_decisions(model, lambda, model.evaluation_targets(),
                                        loss, s_theta, s_y, rng);
  const auto observed = evaluation_observations(model);
  auto losses = per_target_losses(loss, h, observed);
  double acc = 0.0;
  for (double l : losses) acc += l;
  const double er = acc / static_cast<double>(losses.size());
  if (per_target) *per_target = std::move(losses);
  return er;
}

}  // namespace lcvi
