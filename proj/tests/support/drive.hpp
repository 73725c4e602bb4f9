#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "llp/learner.hpp"
#include "llp/predictors.hpp"
#include "llp/problem.hpp"

namespace testing_support {

using namespace llp;

struct Run {
  std::vector<RoundRecord> records;
  std::vector<PredictionBundle> bundles;  // bundle used in round t
  std::vector<RoundOracle> truths;
  std::vector<LearnerState> states;  // after each round
};

inline Run drive(OnlineLearner& learner, Environment& env, Predictor& predictor,
                 int horizon, const Vector& x0) {
  Run run;
  const RoundOracle first = env.round(1);
  PredictionBundle bundle = predictor.predict(&first, x0);
  learner.set_first_prediction(bundle);
  for (int t = 1; t <= horizon; ++t) {
    const Vector x = learner.decide();
    const RoundOracle truth = env.round(t);
    env.record_play(t, x);
    std::optional<PredictionBundle> next;
    if (t < horizon) {
      const RoundOracle upcoming = env.round(t + 1);
      next = predictor.predict(&upcoming, x);
    }
    run.records.push_back(learner.update(truth, next));
    run.bundles.push_back(bundle);
    run.truths.push_back(truth);
    run.states.push_back(learner.state());
    if (next) bundle = *next;
  }
  return run;
}

struct Setup {
  Scenario scenario;
  LearnerConfig config;
  std::unique_ptr<Environment> env;
  std::unique_ptr<OnlineLearner> learner;
  std::unique_ptr<Predictor> predictor;
};

inline Setup make_setup(ScenarioKind kind, Variant variant, PredictorKind::Kind pk,
                        double beta = 0.5, int dim = 1, int d = 1,
                        std::uint64_t seed = 1, double level = 0.3) {
  Setup s;
  s.scenario.kind = kind;
  s.scenario.dimension = dim;
  s.scenario.constraints = d;
  s.scenario.seed = seed;
  s.scenario.horizon = 100000;
  s.config.variant = variant;
  s.config.beta = beta;
  s.config.bounds = declared_bounds(s.scenario);
  s.config.sigma = std::sqrt(s.config.bounds.L_f) / s.config.bounds.D;
  s.env = make_environment(s.scenario);
  const ConvexSet domain = scenario_domain(s.scenario);
  s.learner = make_learner(s.config, domain, d, s.env->base_constraint());
  s.predictor = std::make_unique<Predictor>(PredictorKind{pk, level, seed + 100},
                                            s.config.bounds, dim, d);
  return s;
}

inline Run run_setup(Setup& s, int horizon) {
  const Vector x0 =
      scenario_domain(s.scenario).project(Vector::Zero(s.scenario.dimension));
  return drive(*s.learner, *s.env, *s.predictor, horizon, x0);
}

}  // namespace testing_support
