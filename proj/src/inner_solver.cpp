#include "llp/inner_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace llp {

FtrlObjective::FtrlObjective(ConvexSet set)
    : domain(std::move(set)),
      quad_center(Vector::Zero(domain.dim())),
      linear(Vector::Zero(domain.dim())) {}

double FtrlObjective::value(const Vector& x) const {
  double v = linear.dot(x);
  if (quad_weight > 0.0) v += 0.5 * quad_weight * (x - quad_center).squaredNorm();
  for (const auto& term : weighted_constraints) {
    v += term.multiplier.dot(term.oracle.values(x));
  }
  for (const auto& f : cost_terms) v += f.value(x);
  if (penalty) {
    const Vector excess =
        positive_part(penalty->offset + penalty->oracle.values(x));
    v += 0.5 * penalty->rate * excess.squaredNorm();
  }
  return v;
}

Vector FtrlObjective::gradient(const Vector& x) const {
  Vector grad = linear;
  if (quad_weight > 0.0) grad += quad_weight * (x - quad_center);
  for (const auto& term : weighted_constraints) {
    grad += term.oracle(x).jacobian.transpose() * term.multiplier;
  }
  for (const auto& f : cost_terms) grad += f(x).gradient;
  if (penalty) {
    const ConstraintEval g = penalty->oracle(x);
    grad += penalty->rate * g.jacobian.transpose() *
            positive_part(penalty->offset + g.values);
  }
  return grad;
}

void SolverSettings::validate() const {
  if (!(gradient_map_tolerance > 0.0)) {
    throw ConfigError("solver: tolerance must be positive");
  }
  if (max_iterations < 1) throw ConfigError("solver: max_iterations >= 1");
}

std::string to_string(SolveResult::Method method) {
  switch (method) {
    case SolveResult::Method::kClosedForm:
      return "closed_form";
    case SolveResult::Method::kLinear:
      return "linear";
    case SolveResult::Method::kBisection:
      return "bisection";
    case SolveResult::Method::kAcceleratedGradient:
      return "accelerated_gradient";
    case SolveResult::Method::kEllipsoid:
      return "ellipsoid";
    case SolveResult::Method::kSubgradient:
      return "subgradient";
  }
  return "unknown";
}

FtrlObjective fold_structured_terms(const FtrlObjective& obj) {
  FtrlObjective out(obj.domain);
  out.quad_weight = obj.quad_weight;
  out.quad_center = obj.quad_center;
  out.linear = obj.linear;
  out.penalty = obj.penalty;
  for (const auto& term : obj.weighted_constraints) {
    if (term.oracle.structure()) {
      out.linear += term.oracle.structure()->matrix.transpose() * term.multiplier;
    } else if (term.multiplier.any()) {
      out.weighted_constraints.push_back(term);
    }
  }
  for (const auto& f : obj.cost_terms) {
    if (!f.structure()) {
      out.cost_terms.push_back(f);
      continue;
    }
    const QuadraticForm& q = *f.structure();
    out.linear += q.linear;
    if (q.curvature > 0.0) {
      const double merged = out.quad_weight + q.curvature;
      out.quad_center = (out.quad_weight / merged) * out.quad_center;
      out.quad_weight = merged;
    }
  }
  return out;
}

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

double gradient_map(const FtrlObjective& obj, const Vector& x) {
  const double step = 1.0 / std::max(obj.quad_weight, 1.0);
  return (x - obj.domain.project(x - step * obj.gradient(x))).norm();
}

bool all_smooth(const FtrlObjective& obj) {
  for (const auto& term : obj.weighted_constraints) {
    if (!std::isfinite(term.oracle.smoothness())) return false;
  }
  for (const auto& f : obj.cost_terms) {
    if (!std::isfinite(f.smoothness())) return false;
  }
  if (obj.penalty && !std::isfinite(obj.penalty->oracle.smoothness())) {
    return false;
  }
  return true;
}

double smoothness_estimate(const FtrlObjective& obj) {
  double lip = obj.quad_weight;
  for (const auto& term : obj.weighted_constraints) {
    lip += term.multiplier.lpNorm<1>() * term.oracle.smoothness();
  }
  for (const auto& f : obj.cost_terms) lip += f.smoothness();
  if (obj.penalty) {
    const auto& form = obj.penalty->oracle.structure();
    const double jac = form ? form->matrix.squaredNorm() : 1.0;
    lip += obj.penalty->rate * std::max(jac, obj.penalty->oracle.smoothness());
  }
  return std::max(lip, 1e-6);
}

// Convex 1-D minimization by bisection on the sign of a subgradient.
SolveResult bisection(const FtrlObjective& obj, const SolverSettings& s,
                      const Vector& fallback) {
  SolveResult r;
  r.method = SolveResult::Method::kBisection;
  double lo = obj.domain.lower()[0];
  double hi = obj.domain.upper()[0];
  auto slope = [&](double x) {
    return obj.gradient(Vector::Constant(1, x))[0];
  };
  const double d_lo = slope(lo);
  const double d_hi = slope(hi);
  r.iterations = 2;
  if (d_lo >= 0.0 && d_hi <= 0.0) {
    // Flat on the whole interval.
    r.x = obj.domain.project(fallback);
    return r;
  }
  if (d_lo >= 0.0) {
    r.x = Vector::Constant(1, lo);
    return r;
  }
  if (d_hi <= 0.0) {
    r.x = Vector::Constant(1, hi);
    return r;
  }
  const int limit = std::max(s.max_iterations, 2);
  while (r.iterations < limit) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double d = slope(mid);
    ++r.iterations;
    if (d > 0.0) {
      hi = mid;
    } else if (d < 0.0) {
      lo = mid;
    } else {
      lo = hi = mid;
      break;
    }
  }
  r.x = Vector::Constant(1, 0.5 * (lo + hi));
  r.residual = hi - lo;
  r.converged = r.residual <= std::max(s.gradient_map_tolerance,
                                       8.0 * kEps * std::max(1.0, std::abs(lo)));
  return r;
}

// FISTA with backtracking and restart. Both the step-size test and the
// restart test use gradients only: near the minimizer objective values stop
// resolving distances below ~sqrt(machine epsilon).
SolveResult accelerated_gradient(const FtrlObjective& obj,
                                 const SolverSettings& s, const Vector& start) {
  SolveResult r;
  r.method = SolveResult::Method::kAcceleratedGradient;
  const ConvexSet& set = obj.domain;
  const double map_step = 1.0 / std::max(obj.quad_weight, 1.0);
  auto residual_at = [&](const Vector& x, const Vector& grad) {
    return (x - set.project(x - map_step * grad)).norm();
  };
  double lip = smoothness_estimate(obj);
  Vector x = set.project(start);
  Vector y = x;
  double momentum = 1.0;
  r.residual = residual_at(x, obj.gradient(x));
  // With known strong convexity the distance to the minimizer scales like
  // residual / S, so aim below the tolerance; the contract is still
  // residual <= tolerance.
  const double target =
      obj.quad_weight > 0.0
          ? s.gradient_map_tolerance * std::min(1.0, 0.1 * obj.quad_weight)
          : s.gradient_map_tolerance;
  for (r.iterations = 0; r.iterations < s.max_iterations; ++r.iterations) {
    if (r.residual <= target) break;
    const Vector gy = obj.gradient(y);
    lip = std::max(0.9 * lip, 1e-12);
    Vector candidate, gc;
    for (int tries = 0; tries < 80; ++tries) {
      candidate = set.project(y - gy / lip);
      gc = obj.gradient(candidate);
      const double moved = (candidate - y).norm();
      if ((gc - gy).norm() <= lip * moved * (1.0 + 1e-12)) break;
      lip *= 2.0;
    }
    if ((y - candidate).dot(candidate - x) > 0.0) {
      momentum = 1.0;
      y = candidate;
    } else {
      const double next =
          0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
      y = candidate + ((momentum - 1.0) / next) * (candidate - x);
      momentum = next;
    }
    x = std::move(candidate);
    r.residual = residual_at(x, gc);
  }
  r.x = x;
  r.converged = r.residual <= s.gradient_map_tolerance;
  return r;
}

// Central-cut ellipsoid method; feasibility cuts outside the domain,
// subgradient cuts inside. Returns the best feasible center.
SolveResult ellipsoid(const FtrlObjective& obj, const SolverSettings& s,
                      const Vector& start) {
  SolveResult r;
  r.method = SolveResult::Method::kEllipsoid;
  const ConvexSet& set = obj.domain;
  const int n = set.dim();
  const double dn = n;
  Vector center = 0.5 * (set.lower() + set.upper());
  const double radius =
      0.5 * (set.upper() - set.lower()).norm() * (1.0 + 1e-9) + 1e-12;
  Jacobian shape = Jacobian::Identity(n, n) * (radius * radius);

  Vector best = set.project(start);
  double best_value = obj.value(best);
  double gap = std::numeric_limits<double>::infinity();
  for (r.iterations = 0; r.iterations < s.max_iterations; ++r.iterations) {
    Vector cut;
    const Vector projected = set.project(center);
    if ((projected - center).norm() > 0.0) {
      cut = center - projected;
    } else {
      const double v = obj.value(center);
      if (v < best_value) {
        best_value = v;
        best = center;
      }
      cut = obj.gradient(center);
      if (cut.norm() == 0.0) {
        best = center;
        gap = 0.0;
        break;
      }
    }
    const Vector pc = shape * cut;
    const double width = std::sqrt(std::max(cut.dot(pc), 0.0));
    if (!(width > 0.0)) break;
    gap = std::min(gap, width);
    if (width <= 1e-3 * s.gradient_map_tolerance) break;
    const Vector unit = pc / width;
    center -= unit / (dn + 1.0);
    shape = (dn * dn / (dn * dn - 1.0)) *
            (shape - (2.0 / (dn + 1.0)) * unit * unit.transpose());
    shape = 0.5 * (shape + shape.transpose()).eval();
  }
  r.x = best;
  r.residual = gap;
  r.converged = gap <= s.gradient_map_tolerance;
  return r;
}

// Projected subgradient with best-iterate tracking; used where the ellipsoid
// method does not apply (flat domains such as the simplex).
SolveResult subgradient(const FtrlObjective& obj, const SolverSettings& s,
                        const Vector& start) {
  SolveResult r;
  r.method = SolveResult::Method::kSubgradient;
  const ConvexSet& set = obj.domain;
  Vector x = set.project(start);
  Vector best = x;
  double best_value = obj.value(x);
  const double scale = set.diameter_bound();
  for (r.iterations = 1; r.iterations <= s.max_iterations; ++r.iterations) {
    const Vector g = obj.gradient(x);
    const double norm = g.norm();
    if (norm == 0.0) break;
    const double step = obj.quad_weight > 0.0
                            ? 1.0 / (obj.quad_weight * r.iterations)
                            : scale / (norm * std::sqrt(r.iterations));
    x = set.project(x - step * g);
    const double v = obj.value(x);
    if (v < best_value) {
      best_value = v;
      best = x;
    }
  }
  r.x = best;
  r.residual = gradient_map(obj, best);
  r.converged = r.residual <= s.gradient_map_tolerance;
  return r;
}

}  // namespace

SolveResult minimize(const FtrlObjective& input, const SolverSettings& s) {
  s.validate();
  const FtrlObjective obj = fold_structured_terms(input);
  const ConvexSet& set = obj.domain;
  const Vector fallback = s.degenerate_fallback_point.size() == set.dim()
                              ? s.degenerate_fallback_point
                              : set.project(Vector::Zero(set.dim()));
  if (!obj.has_nonlinear_terms()) {
    SolveResult r;
    if (obj.quad_weight > 0.0) {
      r.method = SolveResult::Method::kClosedForm;
      r.x = set.project(obj.quad_center - obj.linear / obj.quad_weight);
    } else {
      r.method = SolveResult::Method::kLinear;
      r.x = set.linear_minimize(obj.linear, fallback,
                                10.0 * s.gradient_map_tolerance);
    }
    return r;
  }
  if (set.kind() == ConvexSet::Kind::kSimplex && set.dim() == 1) {
    SolveResult r;
    r.x = Vector::Constant(1, set.scale());
    return r;
  }
  if (set.dim() == 1) return bisection(obj, s, fallback);
  if (all_smooth(obj)) return accelerated_gradient(obj, s, fallback);
  if (set.kind() != ConvexSet::Kind::kSimplex) return ellipsoid(obj, s, fallback);
  return subgradient(obj, s, fallback);
}

Vector dual_closed_form(double rate, const Vector& cumulative,
                        const Vector& predicted) {
  if (!(rate > 0.0)) throw ConfigError("dual step: rate must be positive");
  if (cumulative.size() != predicted.size()) {
    throw ConfigError("dual step: dimension mismatch");
  }
  return positive_part(rate * (cumulative + predicted));
}

}  // namespace llp
