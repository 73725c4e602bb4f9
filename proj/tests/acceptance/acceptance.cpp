// One PASS/FAIL line per acceptance criterion; exit status 1 if any fail.
// Optional argv[1]: comma-separated criterion numbers to run.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "llp/analysis.hpp"
#include "llp/inner_solver.hpp"
#include "llp/runner.hpp"
#include "oracles.hpp"

#ifndef LLP_CONFIG_DIR
#define LLP_CONFIG_DIR "configs"
#endif

using namespace llp;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double time_limit_s;
  std::function<Outcome()> check;
};

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0,
                double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, a, b, c, d);
  return buf;
}

Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

RunConfig make_config(ScenarioKind kind, Variant variant, PredictorKind::Kind pk,
                      int horizon, double beta, std::uint64_t seed = 1, int dim = 1,
                      int constraints = 1) {
  Scenario s;
  s.kind = kind;
  s.horizon = horizon;
  s.dimension = dim;
  s.constraints = constraints;
  s.seed = seed;
  RunConfig c = default_run_config(s);
  c.learner.variant = variant;
  c.learner.beta = beta;
  c.predictor.kind = pk;
  c.predictor.level = 0.3;
  c.predictor.seed = seed + 100;
  return c;
}

// Criteria 1 and 4 share these runs.
struct RandomBatch {
  std::vector<RunConfig> configs;
  std::vector<RunResult> results;
};

const RandomBatch& random_batch() {
  static const RandomBatch batch = [] {
    RandomBatch b;
    std::mt19937_64 gen(20240611);
    std::uniform_real_distribution<double> beta(0.0, 0.9), a(0.5, 2.0),
        level(0.05, 0.6);
    const PredictorKind::Kind kinds[] = {PredictorKind::Kind::kNone,
                                         PredictorKind::Kind::kNoisy,
                                         PredictorKind::Kind::kPerfect};
    for (int i = 0; i < 20; ++i) {
      const bool quadratic = i % 2 == 1;
      const int dim = quadratic ? 1 + static_cast<int>(gen() % 3) : 1;
      const int d = quadratic ? 1 + static_cast<int>(gen() % 2) : 1;
      RunConfig c = make_config(
          quadratic ? ScenarioKind::kRandomQuadratic : ScenarioKind::kAlternatingLinear,
          Variant::kLlp, kinds[(i / 2) % 3], 2000, beta(gen), 1000 + i, dim, d);
      c.learner.a = a(gen);
      c.predictor.level = level(gen);
      b.configs.push_back(c);
      b.results.push_back(execute(c));
    }
    return b;
  }();
  return batch;
}

Outcome bound_validity() {
  const RandomBatch& b = random_batch();
  int bad = 0;
  double worst = -INFINITY;  // max over runs of (lhs - rhs)
  for (std::size_t i = 0; i < b.results.size(); ++i) {
    const RunResult& r = b.results[i];
    const double R = r.metrics.final_regret(), V = r.metrics.final_violation();
    const bool ok = r.benchmark.feasible && R <= r.bounds.B_T + r.slack &&
                    V <= r.bounds.V_bound + r.slack;
    bad += !ok;
    worst = std::max({worst, R - r.bounds.B_T, V - r.bounds.V_bound});
  }
  return {bad == 0, fmt("%.0f/20 runs out of bound, max(lhs - bound) = %.4g", bad, worst)};
}

Outcome perfect_collapse() {
  const RunConfig c = make_config(ScenarioKind::kAlternatingLinear, Variant::kLlp,
                                  PredictorKind::Kind::kPerfect, 10000, 0.0);
  const RunResult r = execute(c);
  const double R = r.metrics.final_regret();
  return {r.benchmark.feasible && R <= 1e-3 && r.max_gap <= 1e-7,
          fmt("R_T = %.6g, B_T = %.3g, max ||x - z|| = %.3g", R, r.bounds.B_T, r.max_gap)};
}

GrowthFit fit_over(const std::vector<int>& horizons,
                   const std::function<RunConfig(int)>& config_for, bool regret) {
  std::vector<std::pair<double, double>> samples;
  for (int T : horizons) {
    const RunResult r = execute(config_for(T));
    // Floored at 1: either quantity may be zero or negative.
    const double v = std::max(
        regret ? r.metrics.final_regret() : r.metrics.final_violation(), 1.0);
    samples.emplace_back(T, v);
  }
  return fit_growth_exponent(samples);
}

const std::vector<int> kHorizons = {100, 1000, 10000, 100000};

Outcome rate_trend() {
  auto config_for = [](int T) {
    return make_config(ScenarioKind::kAlternatingLinear, Variant::kLlp,
                       PredictorKind::Kind::kNone, T, 0.5);
  };
  std::vector<std::pair<double, double>> rs, vs;
  for (int T : kHorizons) {
    const RunResult r = execute(config_for(T));
    rs.emplace_back(T, std::max(r.metrics.final_regret(), 1.0));
    vs.emplace_back(T, std::max(r.metrics.final_violation(), 1.0));
  }
  const GrowthFit fr = fit_growth_exponent(rs), fv = fit_growth_exponent(vs);
  return {fv.exponent <= 0.85 && fr.exponent <= 0.775,
          fmt("max(V_T,1) exponent %.3f (<= 0.85), max(R_T,1) exponent %.3f (<= 0.775)",
              fv.exponent, fr.exponent)};
}

Outcome gap_inequality() {
  const RandomBatch& b = random_batch();
  int rounds = 0, bad = 0;
  double worst = -INFINITY;
  for (std::size_t i = 0; i < b.results.size(); ++i) {
    const double tol = 10.0 * b.configs[i].learner.solver.gradient_map_tolerance;
    for (const RoundRecord& r : b.results[i].records) {
      if (r.sigma_cum <= 0.0) continue;
      ++rounds;
      const double excess = (r.x - r.z).norm() - r.h / r.sigma_cum;
      worst = std::max(worst, excess);
      bad += excess > tol;
    }
  }
  return {bad == 0 && rounds > 0,
          fmt("%.0f violations over %.0f rounds, max(gap - bound) = %.3g", bad, rounds,
              worst)};
}

Outcome dual_closed_form_check() {
  std::mt19937_64 gen(77);
  std::uniform_real_distribution<double> u(-2.0, 2.0), rate(0.02, 2.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 1 + trial % 2;
    Vector cum(d), pred(d);
    for (int i = 0; i < d; ++i) {
      cum[i] = u(gen);
      pred[i] = u(gen);
    }
    const double a = rate(gen);
    const double upper = 2.0 * a * (cum + pred).cwiseMax(0.0).norm() + 1.0;
    const Vector ref = oracle::dual_grid_argmax(a, cum + pred, upper, 1e-4);
    worst = std::max(worst, (dual_closed_form(a, cum, pred) - ref).norm());
  }
  return {worst <= 1e-3, fmt("max argument error %.3g over 100 instances", worst)};
}

// g(x) = ||x - c||_1 - r, opaque to the solver.
ConstraintFunction l1_ball(const Vector& c, double r) {
  return ConstraintFunction(
      static_cast<int>(c.size()), 1,
      [c, r](const Vector& x) {
        const Vector d = x - c;
        Jacobian j(1, d.size());
        for (int k = 0; k < d.size(); ++k) j(0, k) = (d[k] > 0) - (d[k] < 0);
        return ConstraintEval{Vector::Constant(1, d.lpNorm<1>() - r), j};
      },
      kNonsmooth);
}

ConstraintFunction exp_sum(int n) {
  return ConstraintFunction(
      n, 1,
      [](const Vector& x) {
        const Vector e = x.array().exp().matrix();
        return ConstraintEval{Vector::Constant(1, e.sum() - 1.0), e.transpose()};
      },
      std::exp(1.0));
}

Outcome solver_vs_grid() {
  std::mt19937_64 gen(91);
  std::uniform_real_distribution<double> u(-1.5, 1.5), w(0.2, 3.0);
  double worst = 0.0;
  int nonconverged = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + trial % 2;
    const ConvexSet set = ConvexSet::box(n, -1.0, 1.0, std::sqrt(double(n)));
    FtrlObjective obj(set);
    obj.quad_weight = w(gen);
    for (int k = 0; k < n; ++k) {
      obj.quad_center[k] = u(gen);
      obj.linear[k] = u(gen);
    }
    if (trial == 0) {
      obj.weighted_constraints.push_back({vec({w(gen)}), l1_ball(Vector::Zero(n), 0.0)});
    } else if (trial % 3 == 0) {
      Vector c(n);
      for (int k = 0; k < n; ++k) c[k] = 0.5 * u(gen);
      obj.weighted_constraints.push_back({vec({w(gen)}), l1_ball(c, 0.2)});
    } else if (trial % 3 == 1) {
      obj.weighted_constraints.push_back({vec({0.5 * w(gen)}), exp_sum(n)});
    } else {
      obj.penalty = HingePenalty{w(gen), vec({0.3 * u(gen)}), exp_sum(n)};
    }
    const SolveResult r = minimize(obj, {});
    nonconverged += !r.converged;
    const Vector ref = oracle::grid_minimize(
        [&](const Vector& x) { return obj.value(x); }, set.lower(), set.upper(), 1e-4);
    worst = std::max(worst, (r.x - ref).norm());
  }
  return {worst <= 1e-3,
          fmt("max argument error %.3g over 100 instances (%.0f flagged)", worst,
              nonconverged)};
}

Outcome impossibility() {
  const RunConfig c = make_config(ScenarioKind::kImpossibilityAdversary, Variant::kLlp,
                                  PredictorKind::Kind::kNone, 10000, 0.5);
  RunConfig cm = c;
  cm.benchmark.kind = BenchmarkKind::kXTMax;
  const RunResult r = execute(cm);

  // Replay the plays to recover the adversary's block ends and rounds.
  AdversaryEnvironment env(c.scenario.param("threshold", 0.75));
  BenchmarkAccumulator prefix(env.domain(), BenchmarkKind::kXTMax);
  std::vector<RoundOracle> rounds;
  for (const RoundRecord& rec : r.records) {
    rounds.push_back(env.round(rec.t));
    env.record_play(rec.t, rec.x);
  }
  const AdversaryState& st = env.state();
  std::set<int> checkpoints(st.j_ends.begin(), st.j_ends.end());
  std::set<int> extra(st.i_ends.begin(), st.i_ends.end());
  extra.insert(static_cast<int>(r.records.size()));

  int added = 0, failures = 0, j_checked = 0;
  double best_ratio = 0.0, worst_margin = INFINITY;
  std::set<int> all = checkpoints;
  all.insert(extra.begin(), extra.end());
  double cum = 0.0;
  for (int t : all) {
    while (added < t) {
      prefix.add(rounds[added]);
      cum += r.records[added].f_value;
      ++added;
    }
    const BenchmarkResult b = prefix.solve();
    if (!b.feasible) continue;
    const double R = cum - b.optimal_total_cost;
    const double V = r.metrics.violation[t - 1];
    best_ratio = std::max({best_ratio, R / t, V / t});
    if (checkpoints.count(t)) {
      ++j_checked;
      const double margin = std::max(R, V) - (t / 8.0 - 10.0);
      worst_margin = std::min(worst_margin, margin);
      failures += margin < 0.0;
    }
  }
  return {j_checked > 0 && failures == 0 && best_ratio >= 0.1,
          fmt("%.0f block ends, min margin over t/8 - 10 = %.4g, max ratio %.4g "
              "(>= 0.1), %.0f failures",
              j_checked, worst_margin, best_ratio, failures)};
}

Outcome perturbed() {
  RunConfig p = make_config(ScenarioKind::kPerturbedLinear, Variant::kLlpPerturbed,
                            PredictorKind::Kind::kPerfect, 10000, 0.5, 3);
  const RunResult rp = execute(p);
  const double R = rp.metrics.final_regret();
  const GrowthFit fv = fit_over(
      kHorizons,
      [](int T) {
        return make_config(ScenarioKind::kPerturbedLinear, Variant::kLlpPerturbed,
                           PredictorKind::Kind::kNone, T, 0.5, 3);
      },
      false);
  return {rp.benchmark.feasible && R <= 1e-3 && fv.exponent <= 0.725,
          fmt("perfect R_T = %.4g (<= 1e-3), none max(V_T,1) exponent %.3f (<= 0.725)", R,
              fv.exponent)};
}

Outcome llp2_vs_llp() {
  int pairs = 0, bad = 0, cross = 0;
  double min_excess = INFINITY;
  for (int i = 0; i < 6; ++i) {
    const bool quadratic = i % 2 == 1;
    const auto kind =
        quadratic ? ScenarioKind::kRandomQuadratic : ScenarioKind::kAlternatingLinear;
    const auto pk = i < 2 ? PredictorKind::Kind::kNone
                          : (i < 4 ? PredictorKind::Kind::kNoisy
                                   : PredictorKind::Kind::kPerfect);
    const int dim = quadratic ? 2 : 1;
    const RunConfig c1 = make_config(kind, Variant::kLlp, pk, 2000, 0.5, 300 + i, dim, dim);
    RunConfig c2 = c1;
    c2.learner.variant = Variant::kLlp2;
    const RunResult r1 = execute(c1), r2 = execute(c2);
    // Same records: hat B_T against B_T; across runs: hat B_T of llp2 against llp.
    const double hat = r2.bounds.B_T;
    const double plain =
        evaluate_proximal_bounds(r2.records, c2.learner, r2.metrics.final_regret()).B_T;
    ++pairs;
    bad += !(hat >= plain);
    cross += hat >= r1.bounds.B_T;
    min_excess = std::min(min_excess, hat - plain);
  }
  auto fit_for = [](Variant v) {
    return fit_over(
        kHorizons,
        [v](int T) {
          return make_config(ScenarioKind::kAlternatingLinear, v,
                             PredictorKind::Kind::kNone, T, 0.5);
        },
        false);
  };
  const double e1 = fit_for(Variant::kLlp).exponent;
  const double e2 = fit_for(Variant::kLlp2).exponent;
  return {bad == 0 && std::abs(e1 - e2) <= 0.1,
          fmt("hat B_T >= B_T on all pairs: min excess %.4g (%.0f/6 also above llp's "
              "B_T); V_T exponents llp %.3f, llp2 %.3f",
              min_excess, cross, e1, e2) +
              (bad ? fmt(", %.0f pairs failed", bad) : std::string())};
}

std::vector<RunConfig> load_all(const std::vector<std::string>& names) {
  std::vector<RunConfig> out;
  for (const auto& n : names) {
    RunConfig c = load_run_config(std::string(LLP_CONFIG_DIR) + "/" + n);
    c.output.path.clear();
    out.push_back(c);
  }
  return out;
}

bool write_csv(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  return static_cast<bool>(out);
}

Outcome qualitative() {
  const CompareResult stoch = run_compare(load_all(
      {"compare_stochastic_llp_none.json", "compare_stochastic_llp_perfect_gradients.json",
       "compare_stochastic_greedy.json"}));
  const CompareResult alt = run_compare(load_all(
      {"compare_alternating_llp_none.json",
       "compare_alternating_llp_perfect_gradients.json", "compare_alternating_greedy.json"}));
  const bool written = write_csv("compare_stochastic.csv", render_compare_csv(stoch, 10)) &&
                       write_csv("compare_alternating.csv", render_compare_csv(alt, 10));
  auto avg_violation = [](const RunResult& r) {
    return r.metrics.final_violation() / static_cast<double>(r.records.size());
  };
  auto avg_regret = [](const RunResult& r) {
    return r.metrics.final_regret() / static_cast<double>(r.records.size());
  };
  const double v0 = avg_violation(stoch.runs[0]), v1 = avg_violation(stoch.runs[1]);
  const double rp = avg_regret(alt.runs[1]), rg = avg_regret(alt.runs[2]);
  return {written && v0 <= 1e-2 && v1 <= 1e-2 && rp < rg,
          fmt("stochastic V_T/T: llp+none %.4g, llp+perfect_gradients %.4g (<= 1e-2); "
              "alternating R_T/T: llp+perfect_gradients %.4g < greedy %.4g",
              v0, v1, rp, rg)};
}

Outcome determinism() {
  const std::vector<std::string> names = {
      "alternating_llp.json", "adversary_llp.json", "perturbed_llp.json",
      "compare_stochastic_llp_none.json", "compare_alternating_greedy.json"};
  std::vector<RunConfig> configs = load_all(names);
  RunConfig quad = make_config(ScenarioKind::kRandomQuadratic, Variant::kLlp2,
                               PredictorKind::Kind::kNoisy, 2000, 0.3, 9, 3, 2);
  configs.push_back(quad);
  int same = 0;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    std::string bytes[2];
    for (int rep = 0; rep < 2; ++rep) {
      RunConfig c = configs[i];
      c.output.path = "determinism_" + std::to_string(i) + "_" + std::to_string(rep) +
                      (i % 2 ? ".json" : ".csv");
      c.output.format = i % 2 ? OutputSpec::Format::kJson : OutputSpec::Format::kCsv;
      write_run_outputs(c, execute(c));
      std::ifstream in(c.output.path, std::ios::binary);
      std::ostringstream s;
      s << in.rdbuf();
      bytes[rep] = s.str();
      std::remove(c.output.path.c_str());
      std::remove(("determinism_" + std::to_string(i) + "_" + std::to_string(rep) +
                   ".summary.json").c_str());
    }
    same += !bytes[0].empty() && bytes[0] == bytes[1];
  }
  return {same == static_cast<int>(configs.size()),
          fmt("%.0f/%.0f configs byte-identical across two runs", same,
              static_cast<double>(configs.size()))};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "bound validity on 20 randomized runs", 120, bound_validity},
      {2, "perfect predictions collapse regret and the x-z gap", 30, perfect_collapse},
      {3, "growth exponents without predictions", 300, rate_trend},
      {4, "per-round x-z gap inequality", 120, gap_inequality},
      {5, "dual closed form vs brute force", 5, dual_closed_form_check},
      {6, "inner solver vs grid oracle", 30, solver_vs_grid},
      {7, "impossibility adversary", 60, impossibility},
      {8, "perturbed constraints", 300, perturbed},
      {9, "non-proximal variant vs proximal", 300, llp2_vs_llp},
      {10, "qualitative comparison runs", 120, qualitative},
      {11, "determinism", 60, determinism},
  };
  std::set<int> only;
  if (argc > 1) {
    std::stringstream list(argv[1]);
    for (std::string item; std::getline(list, item, ',');) only.insert(std::stoi(item));
  }
  int failed = 0;
  for (const Criterion& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs <= c.time_limit_s;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::printf("%s criterion %d: %s | %s | %.1f s (limit %.0f s)%s\n",
                pass ? "PASS" : "FAIL", c.id, c.name.c_str(), o.detail.c_str(), secs,
                c.time_limit_s, in_time ? "" : " TOO SLOW");
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
