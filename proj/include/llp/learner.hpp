#ifndef LLP_LEARNER_HPP_
#define LLP_LEARNER_HPP_

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "llp/core_math.hpp"
#include "llp/inner_solver.hpp"
#include "llp/predictors.hpp"
#include "llp/problem.hpp"

namespace llp {

enum class Variant { kLlp, kLlp2, kLlpLinearized, kLlpPerturbed, kGreedyBaseline };

Variant parse_variant(const std::string& name);
std::string to_string(Variant variant);

struct LearnerConfig {
  Variant variant = Variant::kLlp;
  double sigma = 1.0;
  double a = 1.0;  // dual scale; the step scale eta for the greedy baseline
  double beta = 0.5;
  ProblemBounds bounds;
  Vector x0;  // empty: project(0)
  SolverSettings solver;
  // Replace G in the dual rate by the running max of ||g_t(x_t)||. Outside
  // the analysed setting; rounds using it are flagged.
  bool estimate_constraint_bound = false;

  void validate(const ConvexSet& domain) const;
};

// Round flags.
inline constexpr const char* kFlagPrimalSolver = "primal_not_converged";
inline constexpr const char* kFlagPrescientSolver = "prescient_not_converged";
inline constexpr const char* kFlagEstimatedG = "estimated_G";

struct RoundRecord {
  int t = 0;
  Vector x;
  Vector z;
  Vector lambda;           // lambda_t used in round t
  double f_value = 0.0;    // f_t(x_t)
  Vector g_values;         // g_t(x_t)
  Vector g_at_z;           // g_t(z_t), or its linear proxy
  Vector predicted_value;  // g~_t(x~_t)
  double epsilon_norm = 0.0;
  double delta_norm = 0.0;  // Frobenius norm of the Jacobian error
  double h = 0.0;
  double xi = 0.0;
  double sigma_t = 0.0;
  double sigma_cum_prev = 0.0;  // sigma_{1:t-1}
  double sigma_cum = 0.0;       // sigma_{1:t}
  double h_cum = 0.0;
  double a_prev = 0.0;  // a_{t-1}
  double a = 0.0;       // a_t
  double mu_next = 0.0;  // mu_{t+1} (llp2)
  double xi_sq_cum = 0.0;
  double residual_x = 0.0;
  double residual_z = 0.0;
  std::vector<std::string> flags;
};

// Snapshot of the accumulators between rounds (after round t-1).
struct LearnerState {
  int t = 1;
  Vector lambda;
  Vector cum_cost_gradients;
  double sigma_cum = 0.0;
  double h_cum = 0.0;
  double phi_cum = 0.0;  // phi_{0:t-1} = 1 / a_{t-1}
  double a_prev = 0.0;
  double xi_sq_cum = 0.0;
  Vector cum_constraint_values_at_z;
  Vector prox_center;  // weighted center of r_{1:t-1}; origin for llp2
  double mu = 0.0;     // llp2: mu_t
  bool lambda_pending = false;  // lambda_t is fixed inside the next primal step
};

// One online learner. Per round: decide() once, then update().
class OnlineLearner {
 public:
  virtual ~OnlineLearner() = default;

  // Predictions for round 1; defaults to the zero bundle.
  virtual void set_first_prediction(const PredictionBundle& bundle) = 0;
  virtual Vector decide() = 0;
  // `next` carries the predictions for round t+1 (zero bundle if absent).
  virtual RoundRecord update(const RoundOracle& truth,
                             const std::optional<PredictionBundle>& next) = 0;
  virtual LearnerState state() const = 0;
  virtual Variant variant() const = 0;
};

// Lazy Lagrangians with predictions: proximal, non-proximal (llp2),
// linearized-constraint and perturbed-constraint forms.
class LlpLearner : public OnlineLearner {
 public:
  // `base_constraint` is required by (and only used for) the perturbed
  // variant.
  LlpLearner(LearnerConfig config, ConvexSet domain, int constraints,
             std::optional<ConstraintFunction> base_constraint = std::nullopt);

  void set_first_prediction(const PredictionBundle& bundle) override;
  Vector decide() override { return primal_step(); }
  RoundRecord update(const RoundOracle& truth,
                     const std::optional<PredictionBundle>& next) override;
  LearnerState state() const override;
  Variant variant() const override { return config_.variant; }

  // Individual steps of a round, in call order (llp2 runs the regularizer
  // step last, since sigma_t needs a_t).
  Vector primal_step();
  void observe(const RoundOracle& truth);
  double regularizer_step(double h);
  Vector prescient_step(const RoundOracle& truth);
  Vector dual_step(const PredictionBundle& next);
  RoundRecord finish_round();

  int round() const { return t_; }
  double current_rate() const { return a_prev_; }

 private:
  enum class Phase { kPrimal, kObserve, kRegularize, kPrescient, kDual, kFinish };
  void expect(Phase phase, const char* step) const;

  FtrlObjective accumulated_objective() const;
  void fold_constraint(const Vector& multiplier, const ConstraintFunction& g);
  double constraint_bound() const;
  double initial_rate() const;
  void advance_mu();

  LearnerConfig config_;
  ConvexSet domain_;
  int n_;
  int d_;
  std::optional<ConstraintFunction> base_;
  Phase phase_ = Phase::kPrimal;

  int t_ = 1;
  Vector lambda_;
  bool lambda_pending_ = false;
  PredictionBundle bundle_;
  Vector last_x_;

  // Accumulated objective pieces from rounds < t (or <= t after observe).
  Vector cost_sum_;
  Vector folded_linear_;
  std::vector<WeightedConstraint> terms_;
  Vector multiplier_sum_;  // perturbed: lambda_{1:t}
  double sigma_cum_ = 0.0;
  Vector weighted_centers_;  // sum_i sigma_i x_i
  double h_cum_ = 0.0;
  double a_prev_ = 0.0;
  double xi_sq_cum_ = 0.0;
  Vector cum_g_z_;
  double mu_ = 0.0;
  double g_estimate_ = 0.0;

  RoundRecord current_;
  Vector c_tilde_;
  Jacobian j_tilde_;
  ConstraintEval truth_at_x_;
};

// x_{t+1} = P(x_t - eta_t (c_t + J_t^T lambda_t)),
// lambda_{t+1} = [lambda_t + eta_t g_t(x_t)]_+, eta_t = eta / sqrt(t).
class GreedyBaseline : public OnlineLearner {
 public:
  GreedyBaseline(LearnerConfig config, ConvexSet domain, int constraints);

  void set_first_prediction(const PredictionBundle&) override {}
  Vector decide() override { return x_; }
  RoundRecord update(const RoundOracle& truth,
                     const std::optional<PredictionBundle>& next) override;
  LearnerState state() const override;
  Variant variant() const override { return Variant::kGreedyBaseline; }

 private:
  LearnerConfig config_;
  ConvexSet domain_;
  int t_ = 1;
  Vector x_;
  Vector lambda_;
  Vector cost_sum_;
};

std::unique_ptr<OnlineLearner> make_learner(
    const LearnerConfig& config, const ConvexSet& domain, int constraints,
    std::optional<ConstraintFunction> base_constraint = std::nullopt);

}  // namespace llp

#endif  // LLP_LEARNER_HPP_
