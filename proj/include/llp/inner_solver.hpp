#ifndef LLP_INNER_SOLVER_HPP_
#define LLP_INNER_SOLVER_HPP_

#include <optional>
#include <string>
#include <vector>

#include "llp/core_math.hpp"
#include "llp/problem.hpp"

namespace llp {

// lambda^T g(x) with lambda >= 0.
struct WeightedConstraint {
  Vector multiplier;
  ConstraintFunction oracle;
};

// (rate / 2) ||[offset + g(x)]_+||^2. Minimizing F(x) plus this term is the
// same as minimizing F(x) + lambda^T g(x) with lambda = [rate(offset +
// g(x))]_+ evaluated at the solution, which is how a multiplier that depends
// on the point being chosen is handled.
struct HingePenalty {
  double rate = 0.0;
  Vector offset;
  ConstraintFunction oracle;
};

// S/2 ||x - center||^2 + linear^T x + sum_i lambda_i^T g_i(x)
//   + sum_j f_j(x) + penalty(x), minimized over `domain`.
struct FtrlObjective {
  explicit FtrlObjective(ConvexSet set);

  ConvexSet domain;
  double quad_weight = 0.0;
  Vector quad_center;
  Vector linear;
  std::vector<WeightedConstraint> weighted_constraints;
  std::vector<CostFunction> cost_terms;
  std::optional<HingePenalty> penalty;

  double value(const Vector& x) const;
  // A subgradient (the gradient where the objective is smooth).
  Vector gradient(const Vector& x) const;

  bool has_nonlinear_terms() const {
    return !weighted_constraints.empty() || !cost_terms.empty() ||
           penalty.has_value();
  }
};

struct SolverSettings {
  double gradient_map_tolerance = 1e-9;
  int max_iterations = 10000;
  // Tie-break target for flat objectives; project(0) when empty.
  Vector degenerate_fallback_point;

  void validate() const;
};

struct SolveResult {
  enum class Method {
    kClosedForm,
    kLinear,
    kBisection,
    kAcceleratedGradient,
    kEllipsoid,
    kSubgradient,
  };
  Vector x;
  double residual = 0.0;
  int iterations = 0;
  bool converged = true;
  Method method = Method::kClosedForm;
};

std::string to_string(SolveResult::Method method);

// Affine constraint terms and quadratic cost terms are folded into the
// quadratic/linear part; the result has the same minimizers.
FtrlObjective fold_structured_terms(const FtrlObjective& obj);

// Never throws on non-convergence: the best iterate comes back with
// converged = false and the achieved residual.
SolveResult minimize(const FtrlObjective& obj, const SolverSettings& settings);

// [rate (cumulative + predicted)]_+, the maximizer of
// lambda^T v - ||lambda||^2 / (2 rate) over lambda >= 0.
Vector dual_closed_form(double rate, const Vector& cumulative,
                        const Vector& predicted);

}  // namespace llp

#endif  // LLP_INNER_SOLVER_HPP_
