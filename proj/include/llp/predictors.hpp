#ifndef LLP_PREDICTORS_HPP_
#define LLP_PREDICTORS_HPP_

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "llp/core_math.hpp"
#include "llp/problem.hpp"

namespace llp {

// The environment cannot provide what a learner or predictor asks for
// (e.g. next-round truth, or a separately exposed base constraint).
class UnsupportedScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PredictorKind {
  enum class Kind { kNone, kPerfect, kPerfectGradients, kNoisy, kAdversarial };
  Kind kind = Kind::kNone;
  double level = 0.0;  // noisy only
  std::uint64_t seed = 0;

  void validate() const;
};

PredictorKind::Kind parse_predictor_kind(const std::string& name);
std::string to_string(PredictorKind::Kind kind);

struct Linearization {
  Vector value;
  Jacobian jacobian;
};

// Predictions for one round t, delivered at the end of round t-1.
struct PredictionBundle {
  // c~_t. When `cost_oracle` is set the learner uses the oracle's gradient
  // at its own x_t instead, and this holds the gradient at the reference
  // point the prediction was made from.
  Vector cost_gradient;
  std::optional<CostFunction> cost_oracle;
  ConstraintFunction constraint_oracle;
  // g~_t(x~_t). Ignored when `value_deferred`: the learner then evaluates
  // constraint_oracle at its own x_t, i.e. x~_t = x_t.
  Vector constraint_value;
  bool value_deferred = false;
  // Jacobian of the predicted constraint at the predicted point, for the
  // linearized learner. Its `value` mirrors constraint_value.
  Linearization linearization;

  static PredictionBundle zero(int dim, int constraints);
};

class Predictor {
 public:
  Predictor(PredictorKind kind, ProblemBounds bounds, int dim,
            int constraints);

  bool needs_truth() const { return kind_.kind != PredictorKind::Kind::kNone; }
  const PredictorKind& kind() const { return kind_; }

  // `next_truth` is the next round's oracle (required unless kind is none);
  // `reference` is the learner's latest play, where non-deferred gradient and
  // sign information is read off.
  PredictionBundle predict(const RoundOracle* next_truth,
                           const Vector& reference);

 private:
  PredictionBundle noisy(const RoundOracle& truth, const Vector& reference);
  PredictionBundle adversarial(const RoundOracle& truth,
                               const Vector& reference) const;

  PredictorKind kind_;
  ProblemBounds bounds_;
  int dim_;
  int constraints_;
  Rng rng_;
};

// Scales v down so that ||v|| <= radius (Frobenius norm for matrices).
Vector clip_norm(const Vector& v, double radius);
Jacobian clip_norm(const Jacobian& m, double radius);

}  // namespace llp

#endif  // LLP_PREDICTORS_HPP_
