#include "llp/problem.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <utility>

namespace llp {

CostFunction::CostFunction(int dim, Eval eval, double gradient_lipschitz)
    : dim_(dim), eval_(std::move(eval)), smoothness_(gradient_lipschitz) {
  if (dim < 1) throw ConfigError("cost function: dimension must be >= 1");
  if (!eval_) throw ConfigError("cost function: empty evaluator");
}

CostFunction CostFunction::quadratic(QuadraticForm form) {
  const int dim = static_cast<int>(form.linear.size());
  if (dim < 1) throw ConfigError("quadratic cost: empty linear term");
  if (form.curvature < 0.0) {
    throw ConfigError("quadratic cost: curvature must be nonnegative");
  }
  CostFunction f(
      dim,
      [form](const Vector& x) {
        CostEval out;
        out.value = 0.5 * form.curvature * x.squaredNorm() +
                    form.linear.dot(x) + form.constant;
        out.gradient = form.curvature * x + form.linear;
        return out;
      },
      form.curvature);
  f.structure_ = std::move(form);
  return f;
}

CostFunction CostFunction::linear(Vector coefficients, double constant) {
  return quadratic(QuadraticForm{0.0, std::move(coefficients), constant});
}

CostFunction CostFunction::zero(int dim) { return linear(Vector::Zero(dim)); }

CostEval CostFunction::operator()(const Vector& x) const {
  if (!eval_) throw std::logic_error("evaluating an empty cost function");
  if (x.size() != dim_) throw ConfigError("cost function: dimension mismatch");
  return eval_(x);
}

CostFunction CostFunction::tilted(const Vector& shift) const {
  if (structure_) {
    QuadraticForm form = *structure_;
    form.linear += shift;
    return quadratic(std::move(form));
  }
  Eval inner = eval_;
  return CostFunction(
      dim_,
      [inner, shift](const Vector& x) {
        CostEval out = inner(x);
        out.value += shift.dot(x);
        out.gradient += shift;
        return out;
      },
      smoothness_);
}

ConstraintFunction::ConstraintFunction(int dim, int constraints, Eval eval,
                                       double gradient_lipschitz)
    : dim_(dim),
      constraints_(constraints),
      eval_(std::move(eval)),
      smoothness_(gradient_lipschitz) {
  if (dim < 1 || constraints < 1) {
    throw ConfigError("constraint function: dimensions must be >= 1");
  }
  if (!eval_) throw ConfigError("constraint function: empty evaluator");
}

ConstraintFunction ConstraintFunction::affine(AffineForm form) {
  const int dim = static_cast<int>(form.matrix.cols());
  const int constraints = static_cast<int>(form.matrix.rows());
  if (form.offset.size() != constraints) {
    throw ConfigError("affine constraint: offset size mismatch");
  }
  ConstraintFunction g(
      dim, constraints,
      [form](const Vector& x) {
        return ConstraintEval{form.matrix * x + form.offset, form.matrix};
      },
      0.0);
  g.structure_ = std::move(form);
  return g;
}

ConstraintFunction ConstraintFunction::constant(int dim, Vector values) {
  const auto d = values.size();
  return affine(AffineForm{Jacobian::Zero(d, dim), std::move(values)});
}

ConstraintFunction ConstraintFunction::zero(int dim, int constraints) {
  return constant(dim, Vector::Zero(constraints));
}

ConstraintEval ConstraintFunction::operator()(const Vector& x) const {
  if (!eval_) throw std::logic_error("evaluating an empty constraint function");
  if (x.size() != dim_) {
    throw ConfigError("constraint function: dimension mismatch");
  }
  return eval_(x);
}

ConstraintFunction ConstraintFunction::perturbed(
    const Jacobian& jacobian_shift, const Vector& value_shift) const {
  if (structure_) {
    AffineForm form = *structure_;
    form.matrix += jacobian_shift;
    form.offset += value_shift;
    return affine(std::move(form));
  }
  Eval inner = eval_;
  return ConstraintFunction(
      dim_, constraints_,
      [inner, jacobian_shift, value_shift](const Vector& x) {
        ConstraintEval out = inner(x);
        out.values += jacobian_shift * x + value_shift;
        out.jacobian += jacobian_shift;
        return out;
      },
      smoothness_);
}

void ProblemBounds::validate() const {
  const std::pair<const char*, double> fields[] = {
      {"L_f", L_f}, {"L_g", L_g}, {"G", G}, {"D", D},
      {"F", F},     {"E_m", E_m}, {"Delta_m", Delta_m}};
  for (const auto& [name, value] : fields) {
    if (!std::isfinite(value) || value < 0.0) {
      throw ConfigError(std::string("bounds: ") + name +
                        " must be finite and nonnegative");
    }
  }
  if (!(D > 0.0)) throw ConfigError("bounds: D must be positive");
  if (!(G > 0.0)) throw ConfigError("bounds: G must be positive");
}

namespace {

struct KindName {
  ScenarioKind kind;
  const char* name;
};

constexpr KindName kKindNames[] = {
    {ScenarioKind::kAlternatingLinear, "alternating_linear"},
    {ScenarioKind::kStochasticConstraint, "stochastic_constraint"},
    {ScenarioKind::kImpossibilityAdversary, "impossibility_adversary"},
    {ScenarioKind::kPerturbedLinear, "perturbed_linear"},
    {ScenarioKind::kRandomQuadratic, "random_quadratic"},
};

std::set<std::string> allowed_params(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::kAlternatingLinear:
      return {};
    case ScenarioKind::kStochasticConstraint:
      return {"base_probability", "decay_exponent", "inactive_value",
              "cost_slope"};
    case ScenarioKind::kImpossibilityAdversary:
      return {"threshold"};
    case ScenarioKind::kPerturbedLinear:
      return {"perturbation", "cost_low", "cost_high"};
    case ScenarioKind::kRandomQuadratic:
      return {"target_spread", "matrix_scale", "offset_low", "offset_high"};
  }
  return {};
}

StochasticConstraintParams stochastic_params(const Scenario& s) {
  StochasticConstraintParams p;
  p.base_probability = s.param("base_probability", p.base_probability);
  p.decay_exponent = s.param("decay_exponent", p.decay_exponent);
  p.inactive_value = s.param("inactive_value", p.inactive_value);
  p.cost_slope = s.param("cost_slope", p.cost_slope);
  return p;
}

RoundOracle scalar_round(double cost_slope, double g_slope, double g_offset) {
  RoundOracle r;
  r.cost = CostFunction::linear(Vector::Constant(1, cost_slope));
  r.constraint = ConstraintFunction::affine(
      AffineForm{Jacobian::Constant(1, 1, g_slope),
                 Vector::Constant(1, g_offset)});
  return r;
}

}  // namespace

ScenarioKind parse_scenario_kind(const std::string& name) {
  for (const auto& entry : kKindNames) {
    if (name == entry.name) return entry.kind;
  }
  throw ConfigError("unknown scenario kind '" + name + "'");
}

std::string to_string(ScenarioKind kind) {
  for (const auto& entry : kKindNames) {
    if (kind == entry.kind) return entry.name;
  }
  return "unknown";
}

double Scenario::param(const std::string& name, double fallback) const {
  auto it = params.find(name);
  return it == params.end() ? fallback : it->second;
}

void Scenario::validate() const {
  if (horizon < 1) throw ConfigError("scenario: horizon must be >= 1");
  if (dimension < 1 || constraints < 1) {
    throw ConfigError("scenario: dimension and constraints must be >= 1");
  }
  const auto allowed = allowed_params(kind);
  for (const auto& [name, value] : params) {
    if (!allowed.count(name)) {
      throw ConfigError("scenario " + to_string(kind) + ": unknown param '" +
                        name + "'");
    }
    if (!std::isfinite(value)) {
      throw ConfigError("scenario: param '" + name + "' must be finite");
    }
  }
  switch (kind) {
    case ScenarioKind::kAlternatingLinear:
    case ScenarioKind::kStochasticConstraint:
    case ScenarioKind::kImpossibilityAdversary:
      if (dimension != 1 || constraints != 1) {
        throw ConfigError("scenario " + to_string(kind) +
                          " is one-dimensional with one constraint");
      }
      break;
    case ScenarioKind::kPerturbedLinear:
      if (constraints != dimension) {
        throw ConfigError(
            "scenario perturbed_linear needs constraints == dimension");
      }
      if (param("perturbation", 0.1) < 0.0 ||
          param("cost_low", 0.5) > param("cost_high", 1.5)) {
        throw ConfigError("scenario perturbed_linear: invalid params");
      }
      break;
    case ScenarioKind::kRandomQuadratic: {
      const double lo = param("offset_low", 0.05);
      const double hi = param("offset_high", 0.5);
      if (lo < 0.0 || hi < lo || param("target_spread", 1.5) < 0.0 ||
          param("matrix_scale", 1.0) < 0.0) {
        throw ConfigError("scenario random_quadratic: invalid params");
      }
      break;
    }
  }
  if (kind == ScenarioKind::kStochasticConstraint) {
    const auto p = stochastic_params(*this);
    if (p.base_probability < 0.0 || p.base_probability > 1.0) {
      throw ConfigError("stochastic_constraint: base_probability in [0, 1]");
    }
  }
}

RoundOracle alternating_linear_round(int t) {
  if (t < 1) throw std::invalid_argument("round index must be >= 1");
  if (t % 2 == 0) return scalar_round(-4.0, 0.79, 0.26);
  return scalar_round(-1.0, 0.64, -0.135);
}

RoundOracle stochastic_constraint_round(
    int t, Rng& rng, const StochasticConstraintParams& params) {
  if (t < 1) throw std::invalid_argument("round index must be >= 1");
  const double probability =
      params.base_probability / std::pow(t + 1.0, params.decay_exponent);
  const bool active = rng.uniform() < probability;
  if (active) return scalar_round(-params.cost_slope, 1.0, 0.0);
  return scalar_round(-params.cost_slope, 0.0, params.inactive_value);
}

RoundOracle impossibility_adversary_next(std::optional<double> mean_play,
                                         AdversaryState& state) {
  const RoundOracle p = scalar_round(-1.0, 0.0, -1.0);
  const RoundOracle q = scalar_round(-2.0, 2.0, -1.0);
  const int t = ++state.round;

  auto open_i = [&] {
    state.phase = AdversaryState::Phase::kI;
    ++state.block;
    state.current_i_length = 1;
    return q;
  };

  switch (state.phase) {
    case AdversaryState::Phase::kNotStarted:
      return open_i();
    case AdversaryState::Phase::kI: {
      const bool below = mean_play.has_value() && *mean_play < state.threshold;
      if (!below) {
        ++state.current_i_length;
        return q;
      }
      // I_n closed at round t - 1; J_n mirrors its length.
      state.i_lengths.push_back(state.current_i_length);
      state.i_ends.push_back(t - 1);
      state.phase = AdversaryState::Phase::kJ;
      state.j_remaining = state.current_i_length - 1;
      if (state.j_remaining == 0) {
        state.j_lengths.push_back(state.current_i_length);
        state.j_ends.push_back(t);
        state.phase = AdversaryState::Phase::kNotStarted;
      }
      return p;
    }
    case AdversaryState::Phase::kJ:
      --state.j_remaining;
      if (state.j_remaining == 0) {
        state.j_lengths.push_back(state.i_lengths.back());
        state.j_ends.push_back(t);
        state.phase = AdversaryState::Phase::kNotStarted;
      }
      return p;
  }
  return q;
}

RoundOracle perturbed_linear_round(CostFunction cost,
                                   const ConstraintFunction& base,
                                   const Vector& shift) {
  if (shift.size() != base.constraints()) {
    throw ConfigError("perturbed round: shift size mismatch");
  }
  RoundOracle r;
  r.cost = std::move(cost);
  r.constraint =
      base.perturbed(Jacobian::Zero(base.constraints(), base.dim()), shift);
  r.perturbed = PerturbedParts{base, shift};
  return r;
}

const RoundOracle& Environment::round(int t) {
  if (t < 1) throw std::invalid_argument("round index must be >= 1");
  if (t <= static_cast<int>(rounds_.size())) return rounds_[t - 1];
  if (t != static_cast<int>(rounds_.size()) + 1) {
    throw std::logic_error("rounds must be requested in order");
  }
  if (static_cast<int>(plays_.size()) < t - 1) {
    throw std::logic_error("round " + std::to_string(t) +
                           " requested before play " + std::to_string(t - 1));
  }
  rounds_.push_back(generate(t));
  return rounds_.back();
}

void Environment::record_play(int t, const Vector& x) {
  if (t != static_cast<int>(plays_.size()) + 1) {
    throw std::logic_error("plays must be recorded in order");
  }
  if (x.size() != domain_.dim()) {
    throw ConfigError("play has wrong dimension");
  }
  plays_.push_back(x);
}

namespace {

class AlternatingEnvironment : public Environment {
 public:
  AlternatingEnvironment(ConvexSet domain, ProblemBounds bounds)
      : Environment(std::move(domain), bounds, 1) {}

 protected:
  RoundOracle generate(int t) override { return alternating_linear_round(t); }
};

class StochasticEnvironment : public Environment {
 public:
  StochasticEnvironment(ConvexSet domain, ProblemBounds bounds,
                        std::uint64_t seed, StochasticConstraintParams params)
      : Environment(std::move(domain), bounds, 1), rng_(seed), params_(params) {}

 protected:
  RoundOracle generate(int t) override {
    return stochastic_constraint_round(t, rng_, params_);
  }

 private:
  Rng rng_;
  StochasticConstraintParams params_;
};

class PerturbedEnvironment : public Environment {
 public:
  PerturbedEnvironment(ConvexSet domain, int constraints, ProblemBounds bounds,
                       std::uint64_t seed, double width, double cost_low,
                       double cost_high)
      : Environment(std::move(domain), bounds, constraints),
        rng_(seed),
        width_(width),
        cost_low_(cost_low),
        cost_high_(cost_high) {
    const int n = dimension();
    base_ = ConstraintFunction::affine(
        AffineForm{Jacobian::Identity(n, n), Vector::Zero(n)});
  }

  std::optional<ConstraintFunction> base_constraint() const override {
    return base_;
  }

 protected:
  RoundOracle generate(int) override {
    const int n = dimension();
    Vector c(n), shift(n);
    for (int k = 0; k < n; ++k) c[k] = rng_.uniform(cost_low_, cost_high_);
    for (int k = 0; k < n; ++k) shift[k] = rng_.uniform(-width_, width_);
    return perturbed_linear_round(CostFunction::linear(-c), base_, shift);
  }

 private:
  Rng rng_;
  double width_;
  double cost_low_;
  double cost_high_;
  ConstraintFunction base_;
};

class RandomQuadraticEnvironment : public Environment {
 public:
  RandomQuadraticEnvironment(ConvexSet domain, ProblemBounds bounds,
                             const Scenario& s)
      : Environment(std::move(domain), bounds, s.constraints),
        rng_(s.seed),
        spread_(s.param("target_spread", 1.5)),
        scale_(s.param("matrix_scale", 1.0)),
        offset_low_(s.param("offset_low", 0.05)),
        offset_high_(s.param("offset_high", 0.5)) {}

 protected:
  RoundOracle generate(int) override {
    const int n = dimension();
    const int d = constraints();
    Vector u(n);
    for (int k = 0; k < n; ++k) u[k] = rng_.uniform(-spread_, spread_);
    Jacobian a(d, n);
    for (int i = 0; i < d; ++i) {
      for (int k = 0; k < n; ++k) a(i, k) = rng_.uniform(-scale_, scale_);
    }
    Vector b(d);
    for (int i = 0; i < d; ++i) b[i] = rng_.uniform(offset_low_, offset_high_);
    RoundOracle r;
    // ||x - u||^2 / 2 = ||x||^2 / 2 - u^T x + ||u||^2 / 2.
    r.cost = CostFunction::quadratic(QuadraticForm{1.0, -u, 0.5 * u.squaredNorm()});
    r.constraint = ConstraintFunction::affine(AffineForm{a, -b});
    return r;
  }

 private:
  Rng rng_;
  double spread_;
  double scale_;
  double offset_low_;
  double offset_high_;
};

}  // namespace

AdversaryEnvironment::AdversaryEnvironment(double threshold)
    : Environment(ConvexSet::box(1, 0.0, 1.0, 1.0),
                  ProblemBounds{2.0, 2.0, 1.0, 1.0, 2.0, 4.0, 4.0}, 1) {
  state_.threshold = threshold;
}

RoundOracle AdversaryEnvironment::generate(int t) {
  const auto& history = play_history();
  std::optional<double> mean;
  if (t > 1) {
    play_sum_ += history[t - 2][0];
    mean = play_sum_ / static_cast<double>(t - 1);
  }
  return impossibility_adversary_next(mean, state_);
}

ConvexSet scenario_domain(const Scenario& s) {
  switch (s.kind) {
    case ScenarioKind::kAlternatingLinear:
    case ScenarioKind::kStochasticConstraint:
      return ConvexSet::box(1, -1.0, 1.0, 1.0);
    case ScenarioKind::kImpossibilityAdversary:
      return ConvexSet::box(1, 0.0, 1.0, 1.0);
    case ScenarioKind::kPerturbedLinear:
    case ScenarioKind::kRandomQuadratic:
      return ConvexSet::box(s.dimension, -1.0, 1.0,
                            std::sqrt(static_cast<double>(s.dimension)));
  }
  throw ConfigError("unknown scenario kind");
}

ProblemBounds declared_bounds(const Scenario& s) {
  const double n = s.dimension;
  const double d = s.constraints;
  ProblemBounds b;
  switch (s.kind) {
    case ScenarioKind::kAlternatingLinear:
      b = {4.0, 0.79, 1.05, 1.0, 4.0, 8.0, 1.58};
      break;
    case ScenarioKind::kStochasticConstraint: {
      const auto p = stochastic_params(s);
      const double slope = std::abs(p.cost_slope);
      const double g = std::max(1.0, std::abs(p.inactive_value));
      b = {slope, 1.0, g, 1.0, slope, 2.0 * slope, 2.0};
      break;
    }
    case ScenarioKind::kImpossibilityAdversary:
      b = {2.0, 2.0, 1.0, 1.0, 2.0, 4.0, 4.0};
      break;
    case ScenarioKind::kPerturbedLinear: {
      const double hi =
          std::max(std::abs(s.param("cost_low", 0.5)),
                   std::abs(s.param("cost_high", 1.5)));
      const double w = s.param("perturbation", 0.1);
      const double lf = hi * std::sqrt(n);
      b = {lf, 1.0, std::sqrt(n) * (1.0 + w), std::sqrt(n), hi * n, 2.0 * lf,
           2.0};
      break;
    }
    case ScenarioKind::kRandomQuadratic: {
      const double spread = s.param("target_spread", 1.5);
      const double scale = s.param("matrix_scale", 1.0);
      const double offset = s.param("offset_high", 0.5);
      const double lf = std::sqrt(n) * (1.0 + spread);
      const double lg = scale * std::sqrt(n * d);
      const double g = lg * std::sqrt(n) + offset * std::sqrt(d);
      b = {lf, lg, g, std::sqrt(n), 0.5 * lf * lf, 2.0 * lf, 2.0 * lg};
      break;
    }
  }
  return b;
}

std::unique_ptr<Environment> make_environment(const Scenario& s) {
  s.validate();
  ConvexSet domain = scenario_domain(s);
  const ProblemBounds bounds = declared_bounds(s);
  switch (s.kind) {
    case ScenarioKind::kAlternatingLinear:
      return std::make_unique<AlternatingEnvironment>(std::move(domain),
                                                      bounds);
    case ScenarioKind::kStochasticConstraint:
      return std::make_unique<StochasticEnvironment>(
          std::move(domain), bounds, s.seed, stochastic_params(s));
    case ScenarioKind::kImpossibilityAdversary:
      return std::make_unique<AdversaryEnvironment>(s.param("threshold", 0.75));
    case ScenarioKind::kPerturbedLinear:
      return std::make_unique<PerturbedEnvironment>(
          std::move(domain), s.dimension, bounds, s.seed, s.param("perturbation", 0.1),
          s.param("cost_low", 0.5), s.param("cost_high", 1.5));
    case ScenarioKind::kRandomQuadratic:
      return std::make_unique<RandomQuadraticEnvironment>(std::move(domain),
                                                          bounds, s);
  }
  throw ConfigError("unknown scenario kind");
}

}  // namespace llp
