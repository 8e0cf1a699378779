#include "lcvi/eight_schools.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace lcvi {

EightSchoolsData EightSchoolsData::canonical() {
  EightSchoolsData d;
  d.names = {"A", "B", "C", "D", "E", "F", "G", "H"};
  d.effects = {28.0, 8.0, -3.0, 7.0, -1.0, 1.0, 18.0, 12.0};
  d.std_errors = {15.0, 10.0, 16.0, 11.0, 9.0, 11.0, 10.0, 18.0};
  return d;
}

EightSchoolsData EightSchoolsData::load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open eight-schools file " +
                             path.string());
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error(path.string() + ": empty file");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "school,y,sigma") {
    throw std::runtime_error(path.string() +
                             ": expected header 'school,y,sigma'");
  }
  EightSchoolsData d;
  std::size_t n = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (n == kSchools) {
      throw std::runtime_error(path.string() + ": more than eight rows");
    }
    std::stringstream ss(line);
    std::string name, y, s;
    if (!std::getline(ss, name, ',') || !std::getline(ss, y, ',') ||
        !std::getline(ss, s)) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": malformed row");
    }
    try {
      d.names[n] = name;
      d.effects[n] = std::stod(y);
      d.std_errors[n] = std::stod(s);
    } catch (const std::exception&) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": non-numeric value");
    }
    ++n;
  }
  if (n != kSchools) {
    throw std::runtime_error(path.string() + ": expected eight rows, got " +
                             std::to_string(n));
  }
  d.validate();
  return d;
}

void EightSchoolsData::validate() const {
  for (std::size_t j = 0; j < kSchools; ++j) {
    if (!std::isfinite(effects[j]) || !(std_errors[j] > 0.0)) {
      throw std::invalid_argument("eight schools: school " + names[j] +
                                  " needs finite y and sigma > 0");
    }
  }
}

EightSchoolsModel::EightSchoolsModel(EightSchoolsData data)
    : data_(std::move(data)),
      support_(10, SupportTransform::Identity) {
  data_.validate();
  support_[kTau] = SupportTransform::ExpPositive;
  for (std::size_t j = 0; j < EightSchoolsData::kSchools; ++j) {
    targets_.push_back(Target{j, 0, data_.effects[j]});
    row_index_[j] = j;
  }
}

std::vector<std::string> EightSchoolsModel::latent_names() const {
  std::vector<std::string> names{"mu", "tau"};
  for (std::size_t j = 0; j < EightSchoolsData::kSchools; ++j) {
    names.push_back("theta[" + std::to_string(j + 1) + "]");
  }
  return names;
}

double EightSchoolsModel::log_joint(std::span<const double> theta,
                                    const Batch& batch,
                                    std::span<double> grad) const {
  std::fill(grad.begin(), grad.end(), 0.0);
  const double mu = theta[kMu];
  const double tau = theta[kTau];
  double lp = density::log_normal(mu, 0.0, kMuPriorSd);
  grad[kMu] = -mu / (kMuPriorSd * kMuPriorSd);

  // half-Cauchy(0, s): log 2 - log(pi s) - log(1 + (tau/s)^2)
  const double s = kTauPriorScale;
  lp += std::log(2.0) - std::log(std::numbers::pi * s) -
        std::log1p((tau / s) * (tau / s));
  grad[kTau] = -2.0 * tau / (s * s + tau * tau);

  for (std::size_t j = 0; j < EightSchoolsData::kSchools; ++j) {
    const double th = theta[kTheta0 + j];
    const double r = th - mu;
    lp += density::log_normal(th, mu, tau);
    grad[kTheta0 + j] += -r / (tau * tau);
    grad[kMu] += r / (tau * tau);
    grad[kTau] += -1.0 / tau + r * r / (tau * tau * tau);
  }

  double lik = 0.0;
  for (std::size_t j : batch.rows) {
    const double th = theta[kTheta0 + j];
    const double sd = data_.std_errors[j];
    const double y = data_.effects[j];
    lik += density::log_normal(y, th, sd);
    grad[kTheta0 + j] += batch.scale * (y - th) / (sd * sd);
  }
  return lp + batch.scale * lik;
}

EightSchoolsModel eight_schools_model(const EightSchoolsData& data) {
  return EightSchoolsModel(data);
}

}  // namespace lcvi
