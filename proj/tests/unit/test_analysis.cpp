#include <cmath>

#include "doctest.h"
#include "drive.hpp"
#include "llp/analysis.hpp"
#include "oracles.hpp"

using namespace llp;
using namespace testing_support;

namespace {

Vector scalar(double x) { return Vector::Constant(1, x); }

RoundRecord record(double h, double xi, double a_prev) {
  RoundRecord r;
  r.h = h;
  r.xi = xi;
  r.a_prev = a_prev;
  return r;
}

BenchmarkAccumulator replay(Environment& env, const ConvexSet& domain,
                            BenchmarkKind kind, int horizon, const Vector& play) {
  BenchmarkAccumulator acc(domain, kind);
  for (int t = 1; t <= horizon; ++t) {
    acc.add(env.round(t));
    env.record_play(t, play);
  }
  return acc;
}

}  // namespace

TEST_CASE("benchmark kind names") {
  CHECK(parse_benchmark_kind("X_T") == BenchmarkKind::kXT);
  CHECK(to_string(BenchmarkKind::kXTMax) == "X_T_max");
  CHECK_THROWS_AS(parse_benchmark_kind("X"), ConfigError);
}

TEST_CASE("alternating benchmark sits on the binding constraint") {
  Scenario s;
  auto env = make_environment(s);
  const ConvexSet domain = scenario_domain(s);
  const BenchmarkAccumulator acc =
      replay(*env, domain, BenchmarkKind::kXT, 100, scalar(0.0));
  const BenchmarkResult r = acc.solve();
  REQUIRE(r.feasible);
  CHECK(std::abs(r.x_star[0] + 26.0 / 79.0) < 1e-12);
  // Independent check: fine grid over the per-round feasible set.
  const Vector grid = oracle::grid_minimize(
      [&](const Vector& x) {
        const bool ok = 0.79 * x[0] + 0.26 <= 1e-9 && 0.64 * x[0] - 0.135 <= 1e-9;
        return ok ? -2.5 * x[0] : 1e9;
      },
      scalar(-1.0), scalar(1.0), 1e-6);
  CHECK(std::abs(r.x_star[0] - grid[0]) < 2e-6);
  const std::vector<double> per_round = acc.per_round_costs(r.x_star);
  double sum = 0.0;
  for (double v : per_round) sum += v;
  CHECK(std::abs(sum - r.optimal_total_cost) < 1e-9);
}

TEST_CASE("stochastic benchmark is the origin once g = x appears") {
  Scenario s;
  s.kind = ScenarioKind::kStochasticConstraint;
  s.seed = 2;
  auto env = make_environment(s);
  BenchmarkAccumulator acc(scenario_domain(s), BenchmarkKind::kXT);
  bool active = false;
  for (int t = 1; t <= 500; ++t) {
    const RoundOracle& r = env->round(t);
    active = active || r.constraint(scalar(1.0)).jacobian(0, 0) != 0.0;
    acc.add(r);
    env->record_play(t, scalar(0.0));
  }
  REQUIRE(active);
  const BenchmarkResult r = acc.solve();
  REQUIRE(r.feasible);
  CHECK(std::abs(r.x_star[0]) < 1e-12);
}

TEST_CASE("impossibility adversary aggregate benchmark is x = 1") {
  Scenario s;
  s.kind = ScenarioKind::kImpossibilityAdversary;
  auto env = make_environment(s);
  const ConvexSet domain = scenario_domain(s);
  // Playing 0 forever keeps the mean below the threshold: one I round, then
  // p rounds, so p plays dominate.
  BenchmarkAccumulator acc(domain, BenchmarkKind::kXTMax);
  for (int t = 1; t <= 400; ++t) {
    acc.add(env->round(t));
    env->record_play(t, scalar(0.0));
  }
  const BenchmarkResult r = acc.solve();
  REQUIRE(r.feasible);
  CHECK(r.x_star[0] == 1.0);
}

TEST_CASE("an empty benchmark set is reported as infeasible") {
  BenchmarkAccumulator acc(ConvexSet::box(1, -1.0, 1.0, 1.0), BenchmarkKind::kXT);
  acc.add({CostFunction::linear(scalar(1.0)),
           ConstraintFunction::constant(1, scalar(0.5)), std::nullopt});
  const BenchmarkResult r = acc.solve();
  CHECK_FALSE(r.feasible);
  CHECK(std::isnan(r.optimal_total_cost));
}

TEST_CASE("two-dimensional benchmark zooms onto a projection") {
  BenchmarkAccumulator acc(ConvexSet::box(2, -1.0, 1.0, std::sqrt(8.0)),
                           BenchmarkKind::kXT);
  const Vector u = Vector::Ones(2);
  for (int t = 0; t < 10; ++t) {
    acc.add({CostFunction::quadratic({1.0, -u, 1.0}),
             ConstraintFunction::affine({Jacobian::Ones(1, 2), scalar(-0.5)}),
             std::nullopt});
  }
  const BenchmarkResult r = acc.solve();
  REQUIRE(r.feasible);
  CHECK((r.x_star - Vector::Constant(2, 0.25)).norm() < 1e-3);
  CHECK(r.max_violation <= 1e-9);
}

TEST_CASE("higher-dimensional benchmark uses the penalty path") {
  BenchmarkAccumulator acc(ConvexSet::box(3, -1.0, 1.0, std::sqrt(12.0)),
                           BenchmarkKind::kXT);
  for (int t = 0; t < 50; ++t) {
    acc.add({CostFunction::linear(Vector::Constant(3, -1.0)),
             ConstraintFunction::affine({Jacobian::Identity(3, 3),
                                         Vector::Constant(3, -0.2 - 0.001 * t)}),
             std::nullopt});
  }
  const BenchmarkResult r = acc.solve(0.0, 3);
  REQUIRE(r.feasible);
  CHECK(r.method == "penalty_subgradient");
  CHECK((r.x_star - Vector::Constant(3, 0.2)).norm() < 1e-6);
  CHECK(r.cross_check_ok);
}

TEST_CASE("metrics agree with a recomputation from the raw trace") {
  Setup s = make_setup(ScenarioKind::kRandomQuadratic, Variant::kLlp,
                       PredictorKind::Kind::kNoisy, 0.5, 2, 2, 8);
  const Run run = run_setup(s, 200);
  BenchmarkAccumulator acc(scenario_domain(s.scenario), BenchmarkKind::kXT);
  for (const RoundOracle& r : run.truths) acc.add(r);
  const BenchmarkResult b = acc.solve();
  REQUIRE(b.feasible);
  const TraceMetrics m = compute_metrics(run.records, acc.per_round_costs(b.x_star));
  double regret = 0.0;
  Vector g = Vector::Zero(2);
  for (std::size_t i = 0; i < run.records.size(); ++i) {
    const Vector& x = run.records[i].x;
    regret += run.truths[i].cost.value(x) - run.truths[i].cost.value(b.x_star);
    g += run.truths[i].constraint.values(x);
    CHECK(std::abs(m.regret[i] - regret) <= 1e-9 * (1.0 + std::abs(regret)));
    CHECK(std::abs(m.violation[i] - g.cwiseMax(0.0).norm()) <= 1e-9);
    CHECK(m.violation[i] >= 0.0);
  }
}

TEST_CASE("proximal bound arithmetic") {
  LearnerConfig c;
  c.sigma = 1.0;
  c.bounds.D = 1.0;
  c.bounds.L_f = 1.0;
  const std::vector<RoundRecord> one = {record(4.0, 2.0, 1.0)};
  const BoundReport b = evaluate_proximal_bounds(one, c, 0.0);
  CHECK(b.B_T == 12.0);
  CHECK(b.phi_prev == 1.0);
  CHECK(std::abs(b.V_bound - (std::sqrt(24.0) + 2.0 * 2.0)) < 1e-12);
  const BoundReport clamped = evaluate_proximal_bounds(one, c, 20.0);
  CHECK(clamped.clamped);
  CHECK(clamped.Vz_bound == 0.0);
}

TEST_CASE("non-proximal bound adds mu to the primal term") {
  LearnerConfig c;
  c.variant = Variant::kLlp2;
  c.bounds.E_m = 0.0;
  c.bounds.Delta_m = 1.0;
  LlpLearner l(c, ConvexSet::box(1, -1.0, 1.0, 1.0), 1);
  const RoundOracle truth{CostFunction::linear(scalar(1.0)),
                          ConstraintFunction::zero(1, 1), std::nullopt};
  std::vector<RoundRecord> records;
  for (int t = 1; t <= 100; ++t) {
    l.decide();
    records.push_back(l.update(truth, PredictionBundle::zero(1, 1)));
  }
  CHECK(std::abs(records.back().mu_next - 10.1) < 1e-12);
  const BoundReport hat = evaluate_nonproximal_bounds(records, c, 0.0);
  const BoundReport plain = evaluate_proximal_bounds(records, c, 0.0);
  CHECK(hat.B_T >= plain.B_T);
  CHECK(std::abs(hat.B_T - 2.0 * 2.0 * std::sqrt(hat.h_cum + 10.1)) < 1e-9);
}

TEST_CASE("perturbed bound parameters") {
  LearnerConfig c;  // sigma = D = L_f = L_g = a = G = 1, beta = 1/2
  const std::vector<RoundRecord> zero = {record(0.0, 0.0, 0.5)};
  const BoundReport b = evaluate_perturbed_bounds(zero, c, 0.0);
  CHECK(b.A1 == 4.0);
  CHECK(b.A2 == 8.0);
  CHECK(b.A3 == 2.0);
  CHECK(b.A4 == 2.0);
  CHECK(b.K_T == 1.0);
  CHECK(b.B_T == 0.0);
}

TEST_CASE("dual term is below both majorants on random traces") {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const double a = rng.uniform(0.1, 2.0), G = rng.uniform(0.5, 2.0);
    const double beta = rng.uniform(0.0, 0.9);
    const int T = 50 + trial * 37;
    double sum_sq = 0.0, term = 0.0, a_prev = a / std::max(2.0 * G, 0.0);
    for (int t = 1; t <= T; ++t) {
      const double xi = rng.uniform(0.0, 2.0 * G);
      sum_sq += xi * xi;
      term += a_prev * xi * xi;
      a_prev = a / std::max(std::sqrt(4 * G * G + sum_sq), std::pow(t, beta));
    }
    const double m1 = 2.0 * a * std::sqrt(sum_sq);
    const double m2 = 4.0 * a * G * G * std::pow(T, 1.0 - beta) / (1.0 - beta);
    CHECK(term <= std::min(m1, m2) + 1e-12);
  }
}

TEST_CASE("proximal bounds, the V^z bound and the dual regret bound hold") {
  for (auto pk : {PredictorKind::Kind::kNone, PredictorKind::Kind::kNoisy,
                  PredictorKind::Kind::kPerfect}) {
    for (auto kind : {ScenarioKind::kAlternatingLinear, ScenarioKind::kRandomQuadratic}) {
      const int dim = kind == ScenarioKind::kRandomQuadratic ? 2 : 1;
      Setup s = make_setup(kind, Variant::kLlp, pk, 0.5, dim, dim, 21);
      const int T = 400;
      const Run run = run_setup(s, T);
      BenchmarkAccumulator acc(scenario_domain(s.scenario), BenchmarkKind::kXT);
      for (const RoundOracle& r : run.truths) acc.add(r);
      const BenchmarkResult bench = acc.solve();
      if (!bench.feasible) continue;
      const TraceMetrics m =
          compute_metrics(run.records, acc.per_round_costs(bench.x_star));
      const BoundReport b = evaluate_proximal_bounds(run.records, s.config,
                                                     m.final_regret());
      const double slack = T * (s.config.bounds.L_f + s.config.bounds.G) * 10.0 *
                           s.config.solver.gradient_map_tolerance;
      CHECK(m.final_regret() <= b.B_T + slack);
      CHECK(m.final_violation() <= b.V_bound + slack);
      CHECK(m.violation_z.back() <= b.Vz_bound + slack);
      for (const Vector& lambda :
           {Vector(Vector::Zero(dim)), Vector(Vector::Constant(dim, 0.7)),
            Vector(run.states.back().lambda)}) {
        const DualRegretCheck d = dual_regret_check(run.records, lambda);
        CHECK(d.regret <= d.bound + 1e-9 * (1.0 + d.bound));
      }
    }
  }
}

TEST_CASE("inverse power sums stay below their majorant") {
  for (double d : {0.1, 0.5, 0.9}) {
    for (long long T : {1LL, 10LL, 1000LL, 1000000LL}) {
      const auto [sum, bound] = inverse_power_sum(d, T);
      CHECK(sum <= bound);
    }
  }
}

TEST_CASE("growth exponent fits") {
  std::vector<std::pair<double, double>> power, flat, mixed;
  for (double T : {1e2, 1e3, 1e4, 1e5}) {
    power.emplace_back(T, 3.0 * std::pow(T, 0.75));
    flat.emplace_back(T, 2.0);
  }
  CHECK(std::abs(fit_growth_exponent(power).exponent - 0.75) < 1e-9);
  CHECK(std::abs(fit_growth_exponent(power, 1.0).exponent - 0.75) < 1e-9);
  CHECK(std::abs(fit_growth_exponent(flat).exponent) < 1e-12);
  mixed = power;
  mixed[3].second = 0.0;
  const GrowthFit f = fit_growth_exponent(mixed, 1.0);
  CHECK(f.dropped.size() == 1);
  CHECK(f.used == 3);
  CHECK_THROWS(fit_growth_exponent({{1.0, 1.0}, {2.0, 2.0}}));
}
