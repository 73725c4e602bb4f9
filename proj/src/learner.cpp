#include "llp/learner.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace llp {

namespace {

struct VariantName {
  Variant variant;
  const char* name;
};

constexpr VariantName kVariantNames[] = {
    {Variant::kLlp, "llp"},
    {Variant::kLlp2, "llp2"},
    {Variant::kLlpLinearized, "llp_linearized"},
    {Variant::kLlpPerturbed, "llp_perturbed"},
    {Variant::kGreedyBaseline, "greedy_baseline"},
};

Vector initial_point(const LearnerConfig& config, const ConvexSet& domain) {
  if (config.x0.size() == 0) return domain.project(Vector::Zero(domain.dim()));
  return config.x0;
}

}  // namespace

Variant parse_variant(const std::string& name) {
  for (const auto& entry : kVariantNames) {
    if (name == entry.name) return entry.variant;
  }
  throw ConfigError("unknown learner variant '" + name + "'");
}

std::string to_string(Variant variant) {
  for (const auto& entry : kVariantNames) {
    if (variant == entry.variant) return entry.name;
  }
  return "unknown";
}

void LearnerConfig::validate(const ConvexSet& domain) const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw ConfigError("learner: sigma must be positive");
  }
  if (!(a > 0.0) || !std::isfinite(a)) {
    throw ConfigError("learner: a must be positive");
  }
  if (!(beta >= 0.0 && beta < 1.0)) {
    throw ConfigError("learner: beta must lie in [0, 1)");
  }
  bounds.validate();
  solver.validate();
  if (x0.size() != 0) {
    if (x0.size() != domain.dim()) {
      throw ConfigError("learner: x0 has the wrong dimension");
    }
    if (!x0.allFinite() || !domain.contains(x0, 1e-9)) {
      throw ConfigError("learner: x0 must lie in the domain");
    }
  }
}

LlpLearner::LlpLearner(LearnerConfig config, ConvexSet domain, int constraints,
                       std::optional<ConstraintFunction> base_constraint)
    : config_(std::move(config)),
      domain_(std::move(domain)),
      n_(domain_.dim()),
      d_(constraints),
      base_(std::move(base_constraint)) {
  if (config_.variant == Variant::kGreedyBaseline) {
    throw ConfigError("greedy_baseline is not an LLP variant");
  }
  config_.validate(domain_);
  if (d_ < 1) throw ConfigError("learner: constraints must be >= 1");
  if (config_.variant == Variant::kLlpPerturbed) {
    if (!base_) {
      throw UnsupportedScenarioError(
          "llp_perturbed needs a scenario exposing its fixed base constraint");
    }
    if (base_->dim() != n_ || base_->constraints() != d_) {
      throw ConfigError("llp_perturbed: base constraint has wrong dimensions");
    }
  }
  last_x_ = initial_point(config_, domain_);
  lambda_ = Vector::Zero(d_);
  bundle_ = PredictionBundle::zero(n_, d_);
  cost_sum_ = Vector::Zero(n_);
  folded_linear_ = Vector::Zero(n_);
  multiplier_sum_ = Vector::Zero(d_);
  weighted_centers_ = Vector::Zero(n_);
  cum_g_z_ = Vector::Zero(d_);
  a_prev_ = initial_rate();
  if (config_.variant == Variant::kLlp2) {
    mu_ = config_.bounds.E_m +
          a_prev_ * constraint_bound() * 1.0 * config_.bounds.Delta_m;
    sigma_cum_ = config_.sigma * std::sqrt(mu_);  // sigma_{1:0}
  }
}

double LlpLearner::constraint_bound() const {
  if (config_.estimate_constraint_bound && g_estimate_ > 0.0) {
    return g_estimate_;
  }
  return config_.bounds.G;
}

double LlpLearner::initial_rate() const {
  // t^beta at t = 0, with 0^0 = 1.
  const double time_term = config_.beta == 0.0 ? 1.0 : 0.0;
  return config_.a / std::max(2.0 * constraint_bound(), time_term);
}

void LlpLearner::expect(Phase phase, const char* step) const {
  if (phase_ != phase) {
    throw std::logic_error(std::string("learner step out of order: ") + step);
  }
}

void LlpLearner::set_first_prediction(const PredictionBundle& bundle) {
  if (t_ != 1 || phase_ != Phase::kPrimal) {
    throw std::logic_error("first prediction must precede round 1");
  }
  bundle_ = bundle;
}

void LlpLearner::fold_constraint(const Vector& multiplier,
                                 const ConstraintFunction& g) {
  if (!multiplier.any()) return;
  if (g.structure()) {
    folded_linear_ += g.structure()->matrix.transpose() * multiplier;
  } else {
    terms_.push_back({multiplier, g});
  }
}

FtrlObjective LlpLearner::accumulated_objective() const {
  FtrlObjective obj(domain_);
  obj.quad_weight = sigma_cum_;
  if (sigma_cum_ > 0.0 && config_.variant != Variant::kLlp2) {
    obj.quad_center = weighted_centers_ / sigma_cum_;
  }
  obj.linear = cost_sum_ + folded_linear_;
  obj.weighted_constraints = terms_;
  if (config_.variant == Variant::kLlpPerturbed && multiplier_sum_.any()) {
    obj.weighted_constraints.push_back({multiplier_sum_, *base_});
  }
  return obj;
}

Vector LlpLearner::primal_step() {
  expect(Phase::kPrimal, "primal_step");
  current_ = RoundRecord{};
  current_.t = t_;
  current_.a_prev = a_prev_;
  current_.sigma_cum_prev = sigma_cum_;

  FtrlObjective obj = accumulated_objective();
  if (bundle_.cost_oracle) {
    obj.cost_terms.push_back(*bundle_.cost_oracle);
  } else {
    obj.linear += bundle_.cost_gradient;
  }
  // The multiplier of a deferred forecast depends on x_t itself; from round
  // 2 on it is solved jointly with x_t. Round 1 keeps lambda_1 = 0.
  const bool joint = lambda_pending_ && t_ > 1;
  if (joint) {
    obj.penalty = HingePenalty{a_prev_, cum_g_z_, bundle_.constraint_oracle};
  } else if (lambda_.any()) {
    switch (config_.variant) {
      case Variant::kLlp:
      case Variant::kLlp2:
        obj.weighted_constraints.push_back({lambda_, bundle_.constraint_oracle});
        break;
      case Variant::kLlpLinearized:
        obj.linear += bundle_.linearization.jacobian.transpose() * lambda_;
        break;
      case Variant::kLlpPerturbed:
        obj.weighted_constraints.push_back({lambda_, *base_});
        break;
      case Variant::kGreedyBaseline:
        break;
    }
  }

  SolverSettings settings = config_.solver;
  settings.degenerate_fallback_point = last_x_;
  const SolveResult solved = minimize(obj, settings);
  current_.x = solved.x;
  current_.residual_x = solved.residual;
  if (!solved.converged) current_.flags.push_back(kFlagPrimalSolver);

  const Vector& x = current_.x;
  if (bundle_.value_deferred) {
    const ConstraintEval predicted = bundle_.constraint_oracle(x);
    current_.predicted_value = predicted.values;
    if (joint) lambda_ = dual_closed_form(a_prev_, cum_g_z_, predicted.values);
    lambda_pending_ = false;
  } else {
    current_.predicted_value = bundle_.constraint_value;
  }
  current_.lambda = lambda_;
  c_tilde_ = bundle_.cost_oracle ? (*bundle_.cost_oracle)(x).gradient
                                 : bundle_.cost_gradient;
  if (config_.variant == Variant::kLlpLinearized && !bundle_.value_deferred) {
    j_tilde_ = bundle_.linearization.jacobian;
  } else {
    j_tilde_ = bundle_.constraint_oracle(x).jacobian;
  }
  phase_ = Phase::kObserve;
  return x;
}

void LlpLearner::observe(const RoundOracle& truth) {
  expect(Phase::kObserve, "observe");
  const Vector& x = current_.x;
  const CostEval f = truth.cost(x);
  truth_at_x_ = truth.constraint(x);
  current_.f_value = f.value;
  current_.g_values = truth_at_x_.values;

  const Vector eps = f.gradient - c_tilde_;
  const Jacobian delta = truth_at_x_.jacobian - j_tilde_;
  current_.epsilon_norm = eps.norm();
  current_.delta_norm = delta.norm();
  current_.h = config_.variant == Variant::kLlpPerturbed
                   ? eps.norm()
                   : (eps + delta.transpose() * lambda_).norm();

  cost_sum_ += f.gradient;
  switch (config_.variant) {
    case Variant::kLlp:
    case Variant::kLlp2:
      fold_constraint(lambda_, truth.constraint);
      break;
    case Variant::kLlpLinearized:
      // Linear proxy g(x_t) + J_t (x - x_t); constants do not move argmins.
      folded_linear_ += truth_at_x_.jacobian.transpose() * lambda_;
      break;
    case Variant::kLlpPerturbed:
      multiplier_sum_ += lambda_;
      break;
    case Variant::kGreedyBaseline:
      break;
  }
  if (config_.estimate_constraint_bound) {
    g_estimate_ = std::max(g_estimate_, truth_at_x_.values.norm());
    current_.flags.push_back(kFlagEstimatedG);
  }
  phase_ = config_.variant == Variant::kLlp2 ? Phase::kPrescient
                                             : Phase::kRegularize;
}

void LlpLearner::advance_mu() {
  mu_ = config_.bounds.E_m + a_prev_ * constraint_bound() * (t_ + 1.0) *
                                 config_.bounds.Delta_m;
}

double LlpLearner::regularizer_step(double h) {
  expect(Phase::kRegularize, "regularizer_step");
  if (!(h >= 0.0) || !std::isfinite(h)) {
    throw std::invalid_argument("regularizer_step: h must be finite, >= 0");
  }
  h_cum_ += h;
  double next = 0.0;
  if (config_.variant == Variant::kLlp2) {
    advance_mu();  // a_t is already known here
    next = config_.sigma * std::sqrt(h_cum_ + mu_);
  } else {
    next = config_.sigma * std::sqrt(h_cum_);
  }
  const double sigma_t = next - sigma_cum_;
  if (config_.variant != Variant::kLlp2) {
    weighted_centers_ += sigma_t * current_.x;
  }
  sigma_cum_ = next;
  current_.sigma_t = sigma_t;
  current_.sigma_cum = sigma_cum_;
  current_.h_cum = h_cum_;
  current_.mu_next = mu_;
  phase_ = config_.variant == Variant::kLlp2 ? Phase::kFinish
                                             : Phase::kPrescient;
  return sigma_t;
}

Vector LlpLearner::prescient_step(const RoundOracle& truth) {
  expect(Phase::kPrescient, "prescient_step");
  SolverSettings settings = config_.solver;
  settings.degenerate_fallback_point = current_.x;
  const SolveResult solved = minimize(accumulated_objective(), settings);
  current_.z = solved.x;
  current_.residual_z = solved.residual;
  if (!solved.converged) current_.flags.push_back(kFlagPrescientSolver);
  if (config_.variant == Variant::kLlpLinearized) {
    current_.g_at_z = truth_at_x_.values +
                      truth_at_x_.jacobian * (current_.z - current_.x);
  } else {
    current_.g_at_z = truth.constraint.values(current_.z);
  }
  cum_g_z_ += current_.g_at_z;
  phase_ = Phase::kDual;
  return current_.z;
}

Vector LlpLearner::dual_step(const PredictionBundle& next) {
  expect(Phase::kDual, "dual_step");
  current_.xi = (current_.g_at_z - current_.predicted_value).norm();
  xi_sq_cum_ += current_.xi * current_.xi;
  const double g = constraint_bound();
  a_prev_ = config_.a / std::max(std::sqrt(4.0 * g * g + xi_sq_cum_),
                                 std::pow(static_cast<double>(t_), config_.beta));
  current_.a = a_prev_;
  current_.xi_sq_cum = xi_sq_cum_;

  if (next.cost_gradient.size() != n_ || next.constraint_value.size() != d_) {
    throw ConfigError("prediction bundle has wrong dimensions");
  }
  bundle_ = next;
  if (next.value_deferred) {
    lambda_pending_ = true;
  } else {
    lambda_ = dual_closed_form(a_prev_, cum_g_z_, next.constraint_value);
  }
  phase_ = config_.variant == Variant::kLlp2 ? Phase::kRegularize
                                             : Phase::kFinish;
  return lambda_;
}

RoundRecord LlpLearner::finish_round() {
  expect(Phase::kFinish, "finish_round");
  last_x_ = current_.x;
  ++t_;
  phase_ = Phase::kPrimal;
  return std::move(current_);
}

RoundRecord LlpLearner::update(const RoundOracle& truth,
                               const std::optional<PredictionBundle>& next) {
  observe(truth);
  const PredictionBundle upcoming =
      next ? *next : PredictionBundle::zero(n_, d_);
  if (config_.variant == Variant::kLlp2) {
    prescient_step(truth);
    dual_step(upcoming);
    regularizer_step(current_.h);
  } else {
    regularizer_step(current_.h);
    prescient_step(truth);
    dual_step(upcoming);
  }
  return finish_round();
}

LearnerState LlpLearner::state() const {
  LearnerState s;
  s.t = t_;
  s.lambda = lambda_;
  s.cum_cost_gradients = cost_sum_;
  s.sigma_cum = sigma_cum_;
  s.h_cum = h_cum_;
  s.a_prev = a_prev_;
  s.phi_cum = 1.0 / a_prev_;
  s.xi_sq_cum = xi_sq_cum_;
  s.cum_constraint_values_at_z = cum_g_z_;
  s.prox_center = (sigma_cum_ > 0.0 && config_.variant != Variant::kLlp2)
                      ? Vector(weighted_centers_ / sigma_cum_)
                      : Vector(Vector::Zero(n_));
  s.mu = mu_;
  s.lambda_pending = lambda_pending_;
  return s;
}

GreedyBaseline::GreedyBaseline(LearnerConfig config, ConvexSet domain,
                               int constraints)
    : config_(std::move(config)), domain_(std::move(domain)) {
  config_.validate(domain_);
  x_ = initial_point(config_, domain_);
  lambda_ = Vector::Zero(constraints);
  cost_sum_ = Vector::Zero(domain_.dim());
}

RoundRecord GreedyBaseline::update(const RoundOracle& truth,
                                   const std::optional<PredictionBundle>&) {
  RoundRecord r;
  r.t = t_;
  r.x = x_;
  r.z = x_;
  r.lambda = lambda_;
  const CostEval f = truth.cost(x_);
  const ConstraintEval g = truth.constraint(x_);
  r.f_value = f.value;
  r.g_values = g.values;
  r.g_at_z = g.values;
  r.predicted_value = Vector::Zero(g.values.size());
  const double eta = config_.a / std::sqrt(static_cast<double>(t_));
  r.a = eta;
  cost_sum_ += f.gradient;
  x_ = domain_.project(x_ - eta * (f.gradient + g.jacobian.transpose() * lambda_));
  lambda_ = positive_part(lambda_ + eta * g.values);
  ++t_;
  return r;
}

LearnerState GreedyBaseline::state() const {
  LearnerState s;
  s.t = t_;
  s.lambda = lambda_;
  s.cum_cost_gradients = cost_sum_;
  s.prox_center = x_;
  return s;
}

std::unique_ptr<OnlineLearner> make_learner(
    const LearnerConfig& config, const ConvexSet& domain, int constraints,
    std::optional<ConstraintFunction> base_constraint) {
  if (config.variant == Variant::kGreedyBaseline) {
    return std::make_unique<GreedyBaseline>(config, domain, constraints);
  }
  return std::make_unique<LlpLearner>(config, domain, constraints,
                                      std::move(base_constraint));
}

}  // namespace llp
