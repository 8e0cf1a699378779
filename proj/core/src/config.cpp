#include "lcvi/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <system_error>

#include "lcvi/evaluate.hpp"

namespace lcvi {

namespace pt = boost::property_tree;

std::string model_kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::EightSchools: return "eight_schools";
    case ModelKind::Pmf: return "pmf";
    case ModelKind::SyntheticPmf: return "synthetic_pmf";
  }
  return "unknown";
}

std::string transform_name(TransformKind k) {
  switch (k) {
    case TransformKind::RobustMax: return "robust_max";
    case TransformKind::Exp: return "exp";
    case TransformKind::Native: return "native";
  }
  return "unknown";
}

std::string estimator_name(EstimatorKind k) {
  return k == EstimatorKind::Naive ? "naive" : "linearized";
}

LossSpec parse_loss(const std::string& family, double q, double c) {
  if (family == "squared") return LossSpec::squared();
  if (family == "absolute") return LossSpec::absolute();
  if (family == "tilted") return LossSpec::tilted(q);
  if (family == "linex") return LossSpec::linex(c);
  if (family == "exp_squared_complement") return LossSpec::exp_squared_complement();
  throw std::invalid_argument("unknown loss '" + family +
                              "' (expected squared, absolute, tilted, linex or "
                              "exp_squared_complement)");
}

LossSpec ExperimentConfig::loss_spec() const {
  return parse_loss(decision.loss, decision.q, decision.c);
}

namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const std::string& expected) {
  throw std::invalid_argument("config key " + key + ": '" + value +
                              "' is not " + expected);
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last) {
    bad_value(key, text, std::is_floating_point_v<T> ? "a number" : "an integer");
  }
  return v;
}

std::string join_seeds(const std::vector<std::uint64_t>& seeds) {
  std::string out;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(seeds[i]);
  }
  return out;
}

std::vector<std::uint64_t> parse_seeds(const std::string& key,
                                       const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) bad_value(key, text, "a comma-separated seed list");
    out.push_back(parse_number<std::uint64_t>(key, item.substr(b, e - b + 1)));
  }
  return out;
}

struct Field {
  const char* section;
  const char* key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string& key, const std::string&)> set;
};

template <class T, class Owner>
Field number_field(const char* section, const char* key, T Owner::*member,
                   Owner ExperimentConfig::*block) {
  return {section, key,
          [=](const ExperimentConfig& c) {
            const T v = c.*block.*member;
            if constexpr (std::is_floating_point_v<T>) {
              return format_double(v);
            } else {
              return std::to_string(v);
            }
          },
          [=](ExperimentConfig& c, const std::string& k, const std::string& s) {
            c.*block.*member = parse_number<T>(k, s);
          }};
}

template <class E>
Field enum_field(const char* section, const char* key,
                 std::function<E&(ExperimentConfig&)> ref,
                 std::function<E(const ExperimentConfig&)> get,
                 std::string (*name)(E), std::initializer_list<E> options) {
  std::vector<E> opts(options);
  return {section, key, [=](const ExperimentConfig& c) { return name(get(c)); },
          [=](ExperimentConfig& c, const std::string& k, const std::string& s) {
            std::string expected;
            for (E e : opts) {
              if (s == name(e)) {
                ref(c) = e;
                return;
              }
              expected += (expected.empty() ? "" : ", ") + name(e);
            }
            bad_value(k, s, "one of " + expected);
          }};
}

std::string timing_name(TimingMode t) { return t == TimingMode::Wall ? "wall" : "none"; }

const std::vector<Field>& fields() {
  using C = ExperimentConfig;
  using M = C::ModelBlock;
  using D = C::DecisionBlock;
  using O = OptimizerConfig;
  using R = C::RunBlock;
  static const std::vector<Field> f = {
      enum_field<ModelKind>(
          "model", "kind", [](C& c) -> ModelKind& { return c.model.kind; },
          [](const C& c) { return c.model.kind; }, model_kind_name,
          {ModelKind::EightSchools, ModelKind::Pmf, ModelKind::SyntheticPmf}),
      {"model", "data", [](const C& c) { return c.model.data; },
       [](C& c, const std::string&, const std::string& s) { c.model.data = s; }},
      number_field("model", "n_users", &M::n_users, &C::model),
      number_field("model", "n_items", &M::n_items, &C::model),
      number_field("model", "k", &M::k, &C::model),
      number_field("model", "k_true", &M::k_true, &C::model),
      number_field("model", "sigma_y", &M::sigma_y, &C::model),
      number_field("model", "sigma_w", &M::sigma_w, &C::model),
      number_field("model", "sigma_z", &M::sigma_z, &C::model),
      number_field("model", "data_seed", &M::data_seed, &C::model),

      {"decision", "loss", [](const C& c) { return c.decision.loss; },
       [](C& c, const std::string&, const std::string& s) { c.decision.loss = s; }},
      number_field("decision", "q", &D::q, &C::decision),
      number_field("decision", "c", &D::c, &C::decision),
      enum_field<TransformKind>(
          "decision", "transform",
          [](C& c) -> TransformKind& { return c.decision.transform; },
          [](const C& c) { return c.decision.transform; }, transform_name,
          {TransformKind::RobustMax, TransformKind::Exp, TransformKind::Native}),
      number_field("decision", "quantile", &D::quantile, &C::decision),
      number_field("decision", "m_multiplier", &D::m_multiplier, &C::decision),

      enum_field<Regime>(
          "optimizer", "regime", [](C& c) -> Regime& { return c.optimizer.regime; },
          [](const C& c) { return c.optimizer.regime; }, regime_name,
          {Regime::StandardVI, Regime::JointLCVI, Regime::EMClosedForm,
           Regime::EMNumerical}),
      enum_field<EstimatorKind>(
          "optimizer", "estimator",
          [](C& c) -> EstimatorKind& { return c.optimizer.estimator; },
          [](const C& c) { return c.optimizer.estimator; }, estimator_name,
          {EstimatorKind::Naive, EstimatorKind::Linearized}),
      number_field("optimizer", "epochs", &O::epochs, &C::optimizer),
      {"optimizer", "vi_epochs", [](const C& c) { return std::to_string(c.vi_epochs); },
       [](C& c, const std::string& k, const std::string& s) {
         c.vi_epochs = parse_number<long>(k, s);
       }},
      number_field("optimizer", "batch_rows", &O::batch_rows, &C::optimizer),
      number_field("optimizer", "learning_rate", &O::learning_rate, &C::optimizer),
      number_field("optimizer", "s_theta", &O::s_theta, &C::optimizer),
      number_field("optimizer", "s_y", &O::s_y, &C::optimizer),
      number_field("optimizer", "e_epochs", &O::e_epochs, &C::optimizer),
      number_field("optimizer", "m_steps", &O::m_steps, &C::optimizer),

      {"run", "seeds", [](const C& c) { return join_seeds(c.run.seeds); },
       [](C& c, const std::string& k, const std::string& s) {
         c.run.seeds = parse_seeds(k, s);
       }},
      {"run", "output_dir", [](const C& c) { return c.run.output_dir; },
       [](C& c, const std::string&, const std::string& s) { c.run.output_dir = s; }},
      number_field("run", "trace_every", &R::trace_every, &C::run),
      number_field("run", "eval_s_theta", &R::eval_s_theta, &C::run),
      number_field("run", "eval_s_y", &R::eval_s_y, &C::run),
      enum_field<TimingMode>(
          "run", "timing", [](C& c) -> TimingMode& { return c.run.timing; },
          [](const C& c) { return c.run.timing; }, timing_name,
          {TimingMode::None, TimingMode::Wall}),
  };
  return f;
}

}  // namespace

void ExperimentConfig::validate() const {
  const auto fail = [](const std::string& key, const std::string& why) {
    throw std::invalid_argument("config key " + key + ": " + why);
  };
  if (model.kind == ModelKind::Pmf && model.data.empty()) {
    fail("model.data", "kind = pmf needs a matrix CSV path");
  }
  if (model.kind != ModelKind::EightSchools) {
    if (model.k < 1) fail("model.k", "must be >= 1");
    if (model.kind == ModelKind::SyntheticPmf) {
      if (model.n_users < 1 || model.n_items < 1) {
        fail("model.n_users/n_items", "must be >= 1");
      }
      if (model.k_true < 1) fail("model.k_true", "must be >= 1");
    }
    if (!(model.sigma_y > 0.0) || !(model.sigma_w > 0.0) || !(model.sigma_z > 0.0)) {
      fail("model.sigma_*", "must be > 0");
    }
  }
  LossSpec loss;
  try {
    loss = loss_spec();
    loss.validate();
  } catch (const std::invalid_argument& e) {
    fail("decision.loss", e.what());
  }
  if (decision.transform == TransformKind::Native &&
      loss.kind != LossSpec::Kind::ExpSquaredComplement) {
    fail("decision.transform", "native needs loss = exp_squared_complement");
  }
  if (decision.transform == TransformKind::RobustMax &&
      optimizer.estimator == EstimatorKind::Naive) {
    fail("optimizer.estimator",
         "robust_max utilities can be negative; use the linearized estimator");
  }
  if (!(decision.quantile > 0.0 && decision.quantile <= 1.0)) {
    fail("decision.quantile", "must be in (0, 1]");
  }
  if (!(decision.m_multiplier > 0.0) || !std::isfinite(decision.m_multiplier)) {
    fail("decision.m_multiplier", "must be positive");
  }
  if (optimizer.regime == Regime::EMClosedForm && !loss.has_closed_form_estimator()) {
    fail("optimizer.regime", "em_closed_form needs a loss with a closed-form estimator");
  }
  if (optimizer.epochs < 1) fail("optimizer.epochs", "must be >= 1");
  if (vi_epochs < 0) fail("optimizer.vi_epochs", "must be >= 0");
  try {
    optimizer.validate();
  } catch (const std::invalid_argument& e) {
    fail("optimizer", e.what());
  }
  if (run.seeds.empty()) fail("run.seeds", "at least one seed is required");
  if (run.output_dir.empty()) fail("run.output_dir", "must not be empty");
  if (run.trace_every < 0) fail("run.trace_every", "must be >= 0");
  if (run.eval_s_theta < 1 || run.eval_s_y < 1) {
    fail("run.eval_s_*", "must be >= 1");
  }
}

ExperimentConfig ExperimentConfig::parse(std::istream& in) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  ExperimentConfig c;
  for (const auto& [section, body] : tree) {
    if (!body.data().empty()) {
      throw std::invalid_argument("config: key '" + section +
                                  "' appears outside a section");
    }
    for (const auto& [key, value] : body) {
      const std::string full = section + "." + key;
      bool known = false;
      for (const Field& f : fields()) {
        if (section == f.section && key == f.key) {
          f.set(c, full, value.data());
          known = true;
          break;
        }
      }
      if (!known) throw std::invalid_argument("config: unknown key " + full);
    }
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::parse_string(const std::string& text) {
  std::istringstream in(text);
  return parse(in);
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  ExperimentConfig c = parse(in);
  if (!c.model.data.empty()) {
    const std::filesystem::path data(c.model.data);
    if (data.is_relative()) {
      c.model.data = (path.parent_path() / data).lexically_normal().string();
    }
  }
  return c;
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::entries() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const Field& f : fields()) {
    out.emplace_back(std::string(f.section) + "." + f.key, f.get(*this));
  }
  return out;
}

std::string ExperimentConfig::serialize() const {
  std::ostringstream out;
  std::string current;
  for (const Field& f : fields()) {
    if (current != f.section) {
      if (!current.empty()) out << '\n';
      current = f.section;
      out << '[' << current << "]\n";
    }
    out << f.key << " = " << f.get(*this) << '\n';
  }
  return out.str();
}

}  // namespace lcvi
