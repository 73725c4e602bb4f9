#include "llp/predictors.hpp"

#include <cmath>
#include <utility>

namespace llp {

namespace {

struct KindName {
  PredictorKind::Kind kind;
  const char* name;
};

constexpr KindName kKindNames[] = {
    {PredictorKind::Kind::kNone, "none"},
    {PredictorKind::Kind::kPerfect, "perfect"},
    {PredictorKind::Kind::kPerfectGradients, "perfect_gradients"},
    {PredictorKind::Kind::kNoisy, "noisy"},
    {PredictorKind::Kind::kAdversarial, "adversarial"},
};

Vector unit_or_zero(const Vector& v) {
  const double norm = v.norm();
  if (norm == 0.0) return Vector::Zero(v.size());
  return v / norm;
}

}  // namespace

PredictorKind::Kind parse_predictor_kind(const std::string& name) {
  for (const auto& entry : kKindNames) {
    if (name == entry.name) return entry.kind;
  }
  throw ConfigError("unknown predictor kind '" + name + "'");
}

std::string to_string(PredictorKind::Kind kind) {
  for (const auto& entry : kKindNames) {
    if (kind == entry.kind) return entry.name;
  }
  return "unknown";
}

void PredictorKind::validate() const {
  if (!std::isfinite(level) || level < 0.0) {
    throw ConfigError("predictor: noise level must be finite and >= 0");
  }
}

PredictionBundle PredictionBundle::zero(int dim, int constraints) {
  PredictionBundle b;
  b.cost_gradient = Vector::Zero(dim);
  b.constraint_oracle = ConstraintFunction::zero(dim, constraints);
  b.constraint_value = Vector::Zero(constraints);
  b.linearization = {Vector::Zero(constraints),
                     Jacobian::Zero(constraints, dim)};
  return b;
}

Vector clip_norm(const Vector& v, double radius) {
  const double norm = v.norm();
  if (norm <= radius || norm == 0.0) return v;
  return v * (radius / norm);
}

Jacobian clip_norm(const Jacobian& m, double radius) {
  const double norm = m.norm();
  if (norm <= radius || norm == 0.0) return m;
  return m * (radius / norm);
}

Predictor::Predictor(PredictorKind kind, ProblemBounds bounds, int dim,
                     int constraints)
    : kind_(kind),
      bounds_(bounds),
      dim_(dim),
      constraints_(constraints),
      rng_(kind.seed) {
  kind_.validate();
}

PredictionBundle Predictor::predict(const RoundOracle* next_truth,
                                    const Vector& reference) {
  if (kind_.kind == PredictorKind::Kind::kNone) {
    return PredictionBundle::zero(dim_, constraints_);
  }
  if (next_truth == nullptr) {
    throw UnsupportedScenarioError(
        "predictor '" + to_string(kind_.kind) +
        "' needs the next round, but the environment refuses lookahead");
  }
  const RoundOracle& truth = *next_truth;
  switch (kind_.kind) {
    case PredictorKind::Kind::kPerfect: {
      PredictionBundle b;
      b.cost_oracle = truth.cost;
      b.cost_gradient = truth.cost(reference).gradient;
      b.constraint_oracle = truth.constraint;
      const ConstraintEval g = truth.constraint(reference);
      b.constraint_value = g.values;
      b.value_deferred = true;
      b.linearization = {g.values, g.jacobian};
      return b;
    }
    case PredictorKind::Kind::kPerfectGradients: {
      // Exact cost and constraint functions, no forecast of the value.
      PredictionBundle b;
      b.cost_oracle = truth.cost;
      b.cost_gradient = truth.cost(reference).gradient;
      b.constraint_oracle = truth.constraint;
      b.constraint_value = Vector::Zero(constraints_);
      b.linearization = {b.constraint_value,
                         truth.constraint(reference).jacobian};
      return b;
    }
    case PredictorKind::Kind::kNoisy:
      return noisy(truth, reference);
    case PredictorKind::Kind::kAdversarial:
      return adversarial(truth, reference);
    case PredictorKind::Kind::kNone:
      break;
  }
  return PredictionBundle::zero(dim_, constraints_);
}

PredictionBundle Predictor::noisy(const RoundOracle& truth,
                                  const Vector& reference) {
  // Fixed draw count per call keeps the stream aligned across variants.
  const double w = kind_.level;
  Vector cost_noise(dim_);
  for (int k = 0; k < dim_; ++k) cost_noise[k] = rng_.uniform(-w, w);
  Jacobian jac_noise(constraints_, dim_);
  for (int i = 0; i < constraints_; ++i) {
    for (int k = 0; k < dim_; ++k) jac_noise(i, k) = rng_.uniform(-w, w);
  }
  Vector value_noise(constraints_);
  for (int i = 0; i < constraints_; ++i) value_noise[i] = rng_.uniform(-w, w);

  cost_noise = clip_norm(cost_noise, bounds_.E_m);
  jac_noise = clip_norm(jac_noise, bounds_.Delta_m);

  PredictionBundle b;
  b.cost_oracle = truth.cost.tilted(cost_noise);
  b.cost_gradient = b.cost_oracle->operator()(reference).gradient;
  if (truth.perturbed) {
    // The base constraint is known; only the shift is forecast.
    b.constraint_oracle = truth.perturbed->base.perturbed(
        Jacobian::Zero(constraints_, dim_), truth.perturbed->shift + value_noise);
  } else {
    b.constraint_oracle = truth.constraint.perturbed(jac_noise, value_noise);
  }
  const ConstraintEval g = b.constraint_oracle(reference);
  b.constraint_value = g.values;
  b.value_deferred = true;
  b.linearization = {g.values, g.jacobian};
  return b;
}

PredictionBundle Predictor::adversarial(const RoundOracle& truth,
                                        const Vector& reference) const {
  PredictionBundle b;
  b.cost_gradient = -bounds_.L_f * unit_or_zero(truth.cost(reference).gradient);
  const Vector value =
      -bounds_.G * unit_or_zero(truth.constraint(reference).values);
  b.constraint_value = value;
  if (truth.perturbed) {
    // Keep the known base; the forecast shift pushes the value to `value`
    // at the reference point.
    const Vector base_value = truth.perturbed->base.values(reference);
    b.constraint_oracle = truth.perturbed->base.perturbed(
        Jacobian::Zero(constraints_, dim_), value - base_value);
  } else {
    b.constraint_oracle = ConstraintFunction::constant(dim_, value);
  }
  b.linearization = {value, b.constraint_oracle(reference).jacobian};
  return b;
}

}  // namespace llp
