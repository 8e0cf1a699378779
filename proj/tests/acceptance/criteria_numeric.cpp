#include <algorithm>
#include <cmath>
#include <vector>

#include "check.hpp"
#include "criteria.hpp"
#include "lcvi/eight_schools.hpp"
#include "lcvi/gaussian_mean_model.hpp"
#include "lcvi/matrix_data.hpp"
#include "lcvi/optimizer.hpp"
#include "lcvi/pmf.hpp"
#include "lcvi/utility_term.hpp"

namespace lcvi::acceptance {
namespace {

using testing::richardson_diff;
using testing::rel_err;

constexpr double kGradTol = 1e-4;
constexpr int kPoints = 20;

// Worst relative error of an analytic gradient against extrapolated central
// differences of a scalar function, over all coordinates.
double worst_error(const std::function<double(std::span<const double>)>& f,
                   const std::vector<double>& x, const std::vector<double>& analytic) {
  double worst = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double h = 1e-3 * std::max(1.0, std::abs(x[j]));
    worst = std::max(worst, rel_err(analytic[j], richardson_diff(f, x, j, h)));
  }
  return worst;
}

std::vector<double> concat(std::initializer_list<const std::vector<double>*> parts) {
  std::vector<double> out;
  for (const auto* p : parts) out.insert(out.end(), p->begin(), p->end());
  return out;
}

double elbo_check(const Model& model, const Batch& batch, RandomStream& draw, std::uint64_t key) {
  const std::size_t d = model.latent_dim();
  std::vector<double> x(2 * d);
  for (std::size_t j = 0; j < d; ++j) x[j] = draw.normal();
  for (std::size_t j = d; j < 2 * d; ++j) x[j] = -1.0 + 0.3 * draw.normal();
  const RngState rng = seed_rng(key);
  const auto f = [&](std::span<const double> v) {
    return estimate_elbo(model, batch, VariationalParams::unflatten(v), 4, rng).value;
  };
  const auto e = estimate_elbo(model, batch, VariationalParams::unflatten(x), 4, rng);
  return worst_error(f, x, concat({&e.grad_means, &e.grad_log_scales}));
}

double u_check(const Model& model, const Batch& batch, const CalibrationObjective& obj,
               RandomStream& draw, std::uint64_t key, double h_sd) {
  const std::size_t d = model.latent_dim();
  const std::size_t n = model.prediction_targets().size();
  std::vector<double> x(2 * d + n);
  for (std::size_t j = 0; j < d; ++j) x[j] = draw.normal();
  for (std::size_t j = d; j < 2 * d; ++j) x[j] = -1.0 + 0.3 * draw.normal();
  for (std::size_t j = 2 * d; j < x.size(); ++j) x[j] = h_sd * draw.normal();
  const RngState rng = seed_rng(key);
  const auto eval = [&](std::span<const double> v) {
    return estimate_utility_term(model, batch, VariationalParams::unflatten(v.subspan(0, 2 * d)),
                                 DecisionSet(std::vector<double>(v.begin() + 2 * d, v.end())),
                                 obj, 3, 4, rng);
  };
  const auto e = eval(x);
  return worst_error([&](std::span<const double> v) { return eval(v).value; }, x,
                     concat({&e.grad_means, &e.grad_log_scales, &e.grad_h}));
}

Outcome gradient_suite() {
  const EightSchoolsModel es = eight_schools_model();
  const PmfModel pmf =
      pmf_model(generate_synthetic_matrix(6, 5, 2, 10.0, 4), 3, 2.0, 1.0, 1.0);
  const Batch es_batch = full_batch(es);
  const Batch pmf_batch = make_batch(pmf, std::vector<std::size_t>{0, 2, 5});
  RandomStream draw = seed_rng(2024).stream();

  struct Family {
    const char* name;
    std::function<double(int)> worst_at;
  };
  const std::vector<Family> families{
      {"elbo/eight_schools", [&](int p) { return elbo_check(es, es_batch, draw, 100 + p); }},
      {"elbo/pmf", [&](int p) { return elbo_check(pmf, pmf_batch, draw, 200 + p); }},
      {"naive_u/eight_schools",
       [&](int p) {
         return u_check(es, es_batch,
                        CalibrationObjective::naive(
                            UtilitySpec::exp_transform(0.01, LossSpec::squared())),
                        draw, 300 + p, 5.0);
       }},
      {"naive_u/pmf",
       [&](int p) {
         return u_check(pmf, pmf_batch, CalibrationObjective::naive(UtilitySpec::native_exp_squared()),
                        draw, 400 + p, 1.0);
       }},
      {"linearized_u/eight_schools",
       [&](int p) {
         return u_check(es, es_batch, CalibrationObjective::linearized(LossSpec::linex(0.1), 20.0),
                        draw, 500 + p, 5.0);
       }},
      {"linearized_u/pmf",
       [&](int p) {
         return u_check(pmf, pmf_batch, CalibrationObjective::linearized(LossSpec::squared(), 3.0),
                        draw, 600 + p, 1.0);
       }},
      {"log_joint/eight_schools",
       [&](int) {
         std::vector<double> x(10), g(10), scratch(10);
         for (auto& v : x) v = 5.0 * draw.normal();
         x[1] = std::exp(draw.normal());
         es.log_joint(x, es_batch, g);
         return worst_error([&](std::span<const double> v) { return es.log_joint(v, es_batch, scratch); },
                            x, g);
       }},
      {"log_joint/pmf",
       [&](int) {
         const std::size_t d = pmf.latent_dim();
         std::vector<double> x(d), g(d), scratch(d);
         for (auto& v : x) v = 2.0 * draw.normal();
         pmf.log_joint(x, pmf_batch, g);
         return worst_error(
             [&](std::span<const double> v) { return pmf.log_joint(v, pmf_batch, scratch); }, x, g);
       }},
      {"predictive/pmf",
       [&](int p) {
         const std::size_t d = pmf.latent_dim();
         std::vector<double> x(d), g(d, 0.0);
         for (auto& v : x) v = 2.0 * draw.normal();
         const Target& t = pmf.prediction_targets()[p % pmf.prediction_targets().size()];
         const double delta = draw.normal();
         pmf.accumulate_predictive_gradient(x, t, 1.0, delta, g);
         return worst_error([&](std::span<const double> v) { return predict(pmf, delta, v, t); },
                            x, g);
       }},
      {"predictive/eight_schools",
       [&](int p) {
         std::vector<double> x(10), g(10, 0.0);
         for (auto& v : x) v = 5.0 * draw.normal();
         const Target& t = es.prediction_targets()[p % 8];
         const double delta = draw.normal();
         es.accumulate_predictive_gradient(x, t, 1.0, delta, g);
         return worst_error([&](std::span<const double> v) { return predict(es, delta, v, t); },
                            x, g);
       }},
      {"loss_subgradients",
       [&](int) {
         double worst = 0.0;
         for (const auto& l : {LossSpec::squared(), LossSpec::absolute(), LossSpec::tilted(0.2),
                               LossSpec::linex(0.7), LossSpec::exp_squared_complement()}) {
           const double y = 2.0 * draw.normal();
           double h = 2.0 * draw.normal();
           while (std::abs(h - y) < 1e-2) h = 2.0 * draw.normal();  // smooth points only
           const auto pt = l.evaluate(y, h);
           const auto f = [&](std::span<const double> v) { return loss(l, v[0], v[1]); };
           worst = std::max({worst, worst_error(f, {y, h}, {pt.d_dy, pt.d_dh}),
                             worst_error(f, {y, h}, {pt.d_dy, loss_subgradient_h(l, y, h)})});
         }
         return worst;
       }},
  };

  Checks checks;
  for (const auto& fam : families) {
    double worst = 0.0;
    for (int p = 0; p < kPoints; ++p) worst = std::max(worst, fam.worst_at(p));
    checks.note(fam.name).note(' ').note(worst).note("; ");
    checks.require(worst < kGradTol, fam.name);
  }
  return checks.outcome();
}

Outcome bayes_oracle() {
  RandomStream draw = seed_rng(7).stream();
  const std::vector<LossSpec> losses{LossSpec::squared(), LossSpec::absolute(),
                                     LossSpec::tilted(0.2), LossSpec::linex(0.5)};
  Checks checks;
  double worst_gap = 0.0;
  for (const auto& l : losses) {
    for (int set = 0; set < 10; ++set) {
      std::vector<double> ys(200);
      const double loc = 3.0 * draw.normal(), scale = std::exp(draw.normal());
      for (auto& y : ys) y = loc + scale * draw.normal();
      const auto risk = [&](double h) {
        double acc = 0.0;
        for (double y : ys) acc += loss(l, y, h);
        return acc / 200.0;
      };
      const auto [lo, hi] = std::minmax_element(ys.begin(), ys.end());
      const double step = 1e-3;
      double grid_min = INFINITY, slope = 0.0, prev = risk(*lo);
      for (double h = *lo; h <= *hi + step / 2; h += step) {
        const double r = risk(h);
        grid_min = std::min(grid_min, r);
        slope = std::max(slope, std::abs(r - prev) / step);
        prev = r;
      }
      const double est = risk(bayes_estimator(l, ys));
      // The estimator may beat the grid by at most what one grid step can
      // change the risk, and must never be worse than the grid.
      const double gap = est - grid_min;
      worst_gap = std::max(worst_gap, gap);
      checks.require(gap <= 1e-12 * std::max(1.0, grid_min), l.name() + " worse than grid");
      checks.require(-gap <= slope * step, l.name() + " further than one grid step");
    }
  }
  checks.note("40 sets, worst (estimator - grid minimum) risk ").note(worst_gap);
  return checks.outcome();
}

double gradient_norm(const UtilityTermEstimate& e) {
  double acc = 0.0;
  for (double g : e.grad_means) acc += g * g;
  for (double g : e.grad_log_scales) acc += g * g;
  for (double g : e.grad_h) acc += g * g;
  return std::sqrt(acc);
}

Outcome invariance_suite() {
  const EightSchoolsModel model = eight_schools_model();
  const auto lam = VariationalParams::constant(10, 1.0, 0.5);
  const DecisionSet h(std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8});
  const auto base = UtilitySpec::exp_transform(0.02, LossSpec::squared());
  Checks checks;

  // (a) alpha-scaled utility
  const auto naive = [&](const AffineUtility& u) {
    return estimate_utility_naive(model, full_batch(model), lam, h, u, 30, 10, seed_rng(1));
  };
  const auto ref = naive(AffineUtility(base));
  double worst_shift = 0.0;
  bool identical = true;
  for (double alpha : {0.125, 0.5, 2.0, 16.0, 1024.0}) {
    const auto e = naive(AffineUtility(base, alpha));
    worst_shift = std::max(worst_shift, std::abs(e.value - ref.value - 8.0 * std::log(alpha)));
    identical = identical && e.grad_means == ref.grad_means &&
                e.grad_log_scales == ref.grad_log_scales && e.grad_h == ref.grad_h;
  }
  checks.require(identical, "(a) gradients not bit-identical");
  checks.require(worst_shift < 1e-9, "(a) value shift != #targets * log alpha");
  checks.note("(a) shift error ").note(worst_shift).note(identical ? ", grads identical" : "");

  // (b) argmax of averaged utility under affine maps
  RandomStream draw = seed_rng(2).stream();
  bool same_argmax = true;
  for (int set = 0; set < 5; ++set) {
    std::vector<double> ys(100);
    for (auto& y : ys) y = 2.0 * draw.normal();
    const auto argmax = [&](const AffineUtility& u) {
      double best = -INFINITY, best_h = 0.0;
      for (int k = -400; k <= 400; ++k) {
        double acc = 0.0;
        for (double y : ys) acc += u.evaluate(y, k * 1e-2).value;
        if (acc > best) best = acc, best_h = k * 1e-2;
      }
      return best_h;
    };
    for (const auto& b : {base, UtilitySpec::exp_transform(0.3, LossSpec::tilted(0.2)),
                          UtilitySpec::native_exp_squared()}) {
      const double r = argmax(AffineUtility(b));
      for (double alpha : {0.5, 3.0})
        for (double beta : {0.0, 2.0}) same_argmax = same_argmax && argmax(AffineUtility(b, alpha, beta)) == r;
    }
  }
  checks.require(same_argmax, "(b) argmax moved");
  checks.note("; (b) argmax ").note(same_argmax ? "unchanged" : "moved");

  // (c) beta vanishing at 10^3 * sup u
  double first = 0.0, previous = INFINITY, last = 0.0;
  bool monotone = true;
  for (double beta : {0.0, 1.0, 10.0, 100.0, 1000.0 * base.supremum()}) {
    const double n = gradient_norm(naive(AffineUtility(base, 1.0, beta)));
    if (beta == 0.0) first = n;
    monotone = monotone && n < previous;
    previous = last = n;
  }
  checks.require(monotone, "(c) gradient norm not decreasing in beta");
  checks.require(last < 1e-3 * first, "(c) gradient norm ratio >= 1e-3");
  checks.note("; (c) norm ratio ").note(last / first);

  // (d) zero-weight joint optimization equals standard VI
  bool reduces = true;
  {
    OptimizerConfig c;
    c.epochs = 500;
    c.seed = 3;
    TraceSettings t;
    t.every = 0;
    const auto vi = run_standard_vi(model, c, default_init(model), t);
    auto zero = CalibrationObjective::linearized(LossSpec::tilted(0.2), 10.0);
    zero.weight = 0.0;
    c.regime = Regime::JointLCVI;
    reduces = run_joint_lcvi(model, c, zero, default_init(model), DecisionSet(8, 0.0), t).lambda ==
              vi.lambda;

    const PmfModel pmf = pmf_model(generate_synthetic_matrix(20, 8, 2, 10.0, 1), 2, 10, 10, 10);
    OptimizerConfig pc;
    pc.epochs = 20;
    pc.batch_rows = 6;
    pc.seed = 4;
    const auto pvi = run_standard_vi(pmf, pc, default_init(pmf), t);
    auto pzero = CalibrationObjective::naive(UtilitySpec::exp_transform(0.01, LossSpec::squared()));
    pzero.weight = 0.0;
    pc.regime = Regime::JointLCVI;
    reduces = reduces &&
              run_joint_lcvi(pmf, pc, pzero, default_init(pmf),
                             DecisionSet(pmf.prediction_targets().size(), 0.0), t)
                      .lambda == pvi.lambda;
  }
  checks.require(reduces, "(d) zero-weight LCVI differs from VI");
  checks.note("; (d) ").note(reduces ? "bit-identical" : "differs");
  return checks.outcome();
}

Outcome estimator_statistics() {
  std::vector<double> pred(1, 0.0);
  GaussianMeanModel toy(0.0, 1.0, 1.0, {0.5}, pred);
  toy.with_predictive_sd(1.0);
  const double m = 0.4, s = 0.5, h = 1.1;
  const VariationalParams lam({m}, {std::log(s)});
  const double sd_y = std::sqrt(s * s + 1.0);
  Checks checks;

  // Linearized: unbiased for -E[loss]/M.
  const double big_m = 2.0;
  std::vector<double> v(500);
  for (int r = 0; r < 500; ++r) {
    v[r] = estimate_utility_linearized(toy, full_batch(toy), lam, DecisionSet(1, h),
                                       LossSpec::tilted(0.3), big_m, 2, 2, seed_rng(1000 + r))
               .value;
  }
  const auto lin = testing::mean_se(v);
  const double lin_exact =
      -testing::gaussian_expectation([&](double y) { return loss(LossSpec::tilted(0.3), y, h); },
                                     m, sd_y) /
      big_m;
  checks.require(std::abs(lin.mean - lin_exact) < 3.0 * lin.se, "linearized biased");
  checks.note("linearized |mean - quadrature| = ")
      .note(std::abs(lin.mean - lin_exact))
      .note(" (3 se = ")
      .note(3.0 * lin.se)
      .note(")");

  // Naive: E_theta log E_delta u by nested quadrature.
  const double gamma = 0.5;
  const auto u = UtilitySpec::exp_transform(gamma, LossSpec::squared());
  const double naive_exact = testing::gaussian_expectation(
      [&](double theta) {
        return std::log(testing::gaussian_expectation(
            [&](double y) { return to_utility(u, y, h); }, theta, 1.0, 400));
      },
      m, s, 400);
  const auto bias = [&](int s_y) {
    for (int r = 0; r < 500; ++r) {
      v[r] = estimate_utility_naive(toy, full_batch(toy), lam, DecisionSet(1, h), u, 1, s_y,
                                    seed_rng(5000 + r))
                 .value;
    }
    return testing::mean_se(v).mean - naive_exact;
  };
  const double b1 = bias(1), b100 = bias(100);
  checks.require(std::abs(b1) > std::abs(b100), "naive bias did not shrink");
  checks.note("; naive bias S_y=1: ").note(b1).note(", S_y=100: ").note(b100);
  return checks.outcome();
}

}  // namespace

std::vector<Criterion> numeric_criteria() {
  return {
      {1, "gradient master suite", gradient_suite},
      {2, "Bayes estimators vs grid search", bayes_oracle},
      {7, "invariance suite", invariance_suite},
      {8, "estimator statistics", estimator_statistics},
  };
}

}  // namespace lcvi::acceptance
