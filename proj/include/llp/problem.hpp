#ifndef LLP_PROBLEM_HPP_
#define LLP_PROBLEM_HPP_

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "llp/core_math.hpp"

namespace llp {

// Seedable 64-bit generator. Uniform draws use the top 53 bits of one engine
// output, so streams are bit-identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::mt19937_64 engine_;
};

struct CostEval {
  double value = 0.0;
  Vector gradient;
};

struct ConstraintEval {
  Vector values;
  Jacobian jacobian;
};

// f(x) = curvature/2 ||x||^2 + linear^T x + constant.
struct QuadraticForm {
  double curvature = 0.0;
  Vector linear;
  double constant = 0.0;
};

// g(x) = matrix x + offset.
struct AffineForm {
  Jacobian matrix;
  Vector offset;
};

inline constexpr double kNonsmooth = std::numeric_limits<double>::infinity();

// Convex cost with value and (sub)gradient. Quadratic/linear costs carry
// their closed-form description so solvers and benchmarks can aggregate
// them exactly.
class CostFunction {
 public:
  using Eval = std::function<CostEval(const Vector&)>;

  CostFunction() = default;
  // `gradient_lipschitz` is kNonsmooth for nonsmooth costs.
  CostFunction(int dim, Eval eval, double gradient_lipschitz);

  static CostFunction quadratic(QuadraticForm form);
  static CostFunction linear(Vector coefficients, double constant = 0.0);
  static CostFunction zero(int dim);

  CostEval operator()(const Vector& x) const;
  double value(const Vector& x) const { return (*this)(x).value; }

  int dim() const { return dim_; }
  double smoothness() const { return smoothness_; }
  const std::optional<QuadraticForm>& structure() const { return structure_; }
  explicit operator bool() const { return static_cast<bool>(eval_); }

  // f(x) + shift^T x.
  CostFunction tilted(const Vector& shift) const;

 private:
  int dim_ = 0;
  Eval eval_;
  double smoothness_ = 0.0;
  std::optional<QuadraticForm> structure_;
};

// Vector-valued convex constraint g: R^N -> R^d with Jacobian.
class ConstraintFunction {
 public:
  using Eval = std::function<ConstraintEval(const Vector&)>;

  ConstraintFunction() = default;
  // `gradient_lipschitz` bounds every row's gradient Lipschitz constant
  // (kNonsmooth if some row is nonsmooth).
  ConstraintFunction(int dim, int constraints, Eval eval,
                     double gradient_lipschitz);

  static ConstraintFunction affine(AffineForm form);
  static ConstraintFunction constant(int dim, Vector values);
  static ConstraintFunction zero(int dim, int constraints);

  ConstraintEval operator()(const Vector& x) const;
  Vector values(const Vector& x) const { return (*this)(x).values; }

  int dim() const { return dim_; }
  int constraints() const { return constraints_; }
  double smoothness() const { return smoothness_; }
  const std::optional<AffineForm>& structure() const { return structure_; }
  explicit operator bool() const { return static_cast<bool>(eval_); }

  // g(x) + jacobian_shift x + value_shift; stays convex.
  ConstraintFunction perturbed(const Jacobian& jacobian_shift,
                               const Vector& value_shift) const;

 private:
  int dim_ = 0;
  int constraints_ = 0;
  Eval eval_;
  double smoothness_ = 0.0;
  std::optional<AffineForm> structure_;
};

// Constraint of the form g(x) + shift with a fixed, known g.
struct PerturbedParts {
  ConstraintFunction base;
  Vector shift;
};

struct RoundOracle {
  CostFunction cost;
  ConstraintFunction constraint;
  // Present for linearly-perturbed scenarios only.
  std::optional<PerturbedParts> perturbed;
};

struct ProblemBounds {
  double L_f = 1.0;
  double L_g = 1.0;
  double G = 1.0;
  double D = 1.0;
  double F = 1.0;
  double E_m = 2.0;
  double Delta_m = 2.0;

  void validate() const;
};

enum class ScenarioKind {
  kAlternatingLinear,
  kStochasticConstraint,
  kImpossibilityAdversary,
  kPerturbedLinear,
  kRandomQuadratic,
};

ScenarioKind parse_scenario_kind(const std::string& name);
std::string to_string(ScenarioKind kind);

struct Scenario {
  ScenarioKind kind = ScenarioKind::kAlternatingLinear;
  int horizon = 1;
  int dimension = 1;
  int constraints = 1;
  std::uint64_t seed = 0;
  std::map<std::string, double> params;

  // Throws ConfigError for bad dimensions or unknown params.
  void validate() const;
  double param(const std::string& name, double fallback) const;
};

// Round t (1-based) of the two-phase linear scenario on [-1, 1]:
// even t: f = -4x, g = 0.79x + 0.26; odd t: f = -x, g = 0.64x - 0.135.
RoundOracle alternating_linear_round(int t);

struct StochasticConstraintParams {
  double base_probability = 0.1;
  double decay_exponent = 0.05;
  double inactive_value = -0.01;
  double cost_slope = 2.0;
};

// f = -2x; g = x with probability 0.1/(t+1)^0.05, else g = -0.01.
// Consumes exactly one uniform variate from `rng`.
RoundOracle stochastic_constraint_round(
    int t, Rng& rng, const StochasticConstraintParams& params = {});

// Block bookkeeping for the impossibility adversary on X = [0, 1].
struct AdversaryState {
  enum class Phase { kNotStarted, kI, kJ };
  Phase phase = Phase::kNotStarted;
  int block = 0;            // n of the current I_n / J_n
  int round = 0;            // last round issued
  int current_i_length = 0;
  int j_remaining = 0;
  std::vector<int> i_lengths;
  std::vector<int> j_lengths;
  std::vector<int> i_ends;  // last round of each completed I_n
  std::vector<int> j_ends;  // last round of each completed J_n
  double threshold = 0.75;
};

// Issues round state.round + 1 given the mean of all past plays (nullopt
// before the first round, treated as >= threshold). Plays q = (-2x, 2x - 1)
// throughout I_n until the first mean below the threshold, then
// p = (-x, -1) for |I_n| rounds, then opens I_{n+1}.
RoundOracle impossibility_adversary_next(std::optional<double> mean_play,
                                         AdversaryState& state);

// Constraint value g(x) + shift, Jacobian of g.
RoundOracle perturbed_linear_round(CostFunction cost,
                                   const ConstraintFunction& base,
                                   const Vector& shift);

// A sequential environment. Round t may be generated only after the plays
// of rounds 1..t-1 are recorded; it is generated once and cached, so
// lookahead (round t+1 after play t) does not perturb the stream.
class Environment {
 public:
  virtual ~Environment() = default;

  const RoundOracle& round(int t);
  void record_play(int t, const Vector& x);

  virtual bool supports_lookahead() const { return true; }
  virtual std::optional<ConstraintFunction> base_constraint() const {
    return std::nullopt;
  }

  const ConvexSet& domain() const { return domain_; }
  const ProblemBounds& declared_bounds() const { return bounds_; }
  int dimension() const { return domain_.dim(); }
  int constraints() const { return constraints_; }
  int plays() const { return static_cast<int>(plays_.size()); }
  const std::vector<RoundOracle>& realized_rounds() const { return rounds_; }

 protected:
  Environment(ConvexSet domain, ProblemBounds bounds, int constraints)
      : domain_(std::move(domain)),
        bounds_(bounds),
        constraints_(constraints) {}

  // Called exactly once per round, in order.
  virtual RoundOracle generate(int t) = 0;

  const std::vector<Vector>& play_history() const { return plays_; }

 private:
  ConvexSet domain_;
  ProblemBounds bounds_;
  int constraints_;
  std::vector<RoundOracle> rounds_;
  std::vector<Vector> plays_;
};

class AdversaryEnvironment : public Environment {
 public:
  explicit AdversaryEnvironment(double threshold = 0.75);
  const AdversaryState& state() const { return state_; }

 protected:
  RoundOracle generate(int t) override;

 private:
  AdversaryState state_;
  double play_sum_ = 0.0;
};

std::unique_ptr<Environment> make_environment(const Scenario& scenario);

// Bounds declared for a scenario's functions on its domain.
ProblemBounds declared_bounds(const Scenario& scenario);
ConvexSet scenario_domain(const Scenario& scenario);

}  // namespace llp

#endif  // LLP_PROBLEM_HPP_
