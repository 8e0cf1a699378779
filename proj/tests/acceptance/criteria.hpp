#pragma once

#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "lcvi/config.hpp"
#include "lcvi/pipeline.hpp"

namespace lcvi::acceptance {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string title;
  std::function<Outcome()> run;
};

/// Collects failed sub-checks and a running detail line.
class Checks {
 public:
  void require(bool ok, const std::string& what) {
    if (!ok) failures_.push_back(what);
  }
  template <class T>
  Checks& note(const T& value) {
    detail_ << value;
    return *this;
  }
  Outcome outcome() const;

 private:
  std::vector<std::string> failures_;
  std::ostringstream detail_;
};

std::vector<Criterion> numeric_criteria();     // 1, 2, 7, 8
std::vector<Criterion> experiment_criteria();  // 3, 4, 5, 6, 9, 10

/// Presets shipped with the repository, with output redirected to a
/// scratch directory.
ExperimentConfig preset(const std::string& name);

/// "1.23%" style.
std::string percent(double x);

}  // namespace lcvi::acceptance
