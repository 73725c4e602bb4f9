#include "llp/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "llp/inner_solver.hpp"

namespace llp {

namespace {

constexpr double kFeasibilityTol = 1e-9;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double clamp_sqrt(double v, bool& clamped) {
  if (v < 0.0) {
    clamped = true;
    return 0.0;
  }
  return std::sqrt(v);
}

}  // namespace

BenchmarkKind parse_benchmark_kind(const std::string& name) {
  if (name == "X_T") return BenchmarkKind::kXT;
  if (name == "X_T_max") return BenchmarkKind::kXTMax;
  throw ConfigError("unknown benchmark kind '" + name + "'");
}

std::string to_string(BenchmarkKind kind) {
  return kind == BenchmarkKind::kXT ? "X_T" : "X_T_max";
}

BenchmarkAccumulator::BenchmarkAccumulator(ConvexSet domain, BenchmarkKind kind)
    : domain_(std::move(domain)), kind_(kind), n_(domain_.dim()) {
  cost_sum_.linear = Vector::Zero(n_);
}

void BenchmarkAccumulator::add(const RoundOracle& round) {
  if (round.cost.dim() != n_ || round.constraint.dim() != n_) {
    throw ConfigError("benchmark: round has the wrong dimension");
  }
  ++rounds_;
  costs_.push_back(round.cost);
  if (costs_structured_ && round.cost.structure()) {
    const QuadraticForm& q = *round.cost.structure();
    cost_sum_.curvature += q.curvature;
    cost_sum_.linear += q.linear;
    cost_sum_.constant += q.constant;
  } else {
    costs_structured_ = false;
  }

  const auto& affine = round.constraint.structure();
  if (rows_structured_ && !affine) {
    rows_structured_ = false;
    if (kind_ == BenchmarkKind::kXTMax && summed_.matrix.size() != 0) {
      constraint_sum_ = ConstraintFunction::affine(summed_);
    }
  }
  if (rows_structured_) {
    if (kind_ == BenchmarkKind::kXT) {
      for (Eigen::Index k = 0; k < affine->matrix.rows(); ++k) {
        std::vector<double> key(static_cast<std::size_t>(n_));
        for (int j = 0; j < n_; ++j) key[j] = affine->matrix(k, j);
        auto [it, inserted] = rows_.emplace(std::move(key), affine->offset[k]);
        if (!inserted) it->second = std::max(it->second, affine->offset[k]);
      }
    } else if (summed_.matrix.size() == 0) {
      summed_ = *affine;
    } else {
      summed_.matrix += affine->matrix;
      summed_.offset += affine->offset;
    }
    return;
  }
  if (kind_ == BenchmarkKind::kXT) {
    constraints_.push_back(round.constraint);
  } else if (!constraint_sum_) {
    constraint_sum_ = round.constraint;
  } else {
    const ConstraintFunction prev = *constraint_sum_;
    const ConstraintFunction next = round.constraint;
    constraint_sum_ = ConstraintFunction(
        n_, prev.constraints(),
        [prev, next](const Vector& x) {
          ConstraintEval a = prev(x);
          const ConstraintEval b = next(x);
          a.values += b.values;
          a.jacobian += b.jacobian;
          return a;
        },
        prev.smoothness() + next.smoothness());
  }
}

std::vector<std::pair<Vector, double>> BenchmarkAccumulator::dense_rows() const {
  std::vector<std::pair<Vector, double>> rows;
  if (kind_ == BenchmarkKind::kXT) {
    rows.reserve(rows_.size());
    for (const auto& [key, offset] : rows_) {
      rows.emplace_back(Eigen::Map<const Vector>(key.data(), n_), offset);
    }
  } else if (rows_structured_ && summed_.matrix.size() != 0) {
    for (Eigen::Index k = 0; k < summed_.matrix.rows(); ++k) {
      rows.emplace_back(summed_.matrix.row(k).transpose(), summed_.offset[k]);
    }
  }
  return rows;
}

double BenchmarkAccumulator::total_cost(const Vector& x) const {
  if (costs_structured_) {
    return 0.5 * cost_sum_.curvature * x.squaredNorm() + cost_sum_.linear.dot(x) +
           cost_sum_.constant;
  }
  double total = 0.0;
  for (const CostFunction& f : costs_) total += f.value(x);
  return total;
}

std::vector<double> BenchmarkAccumulator::per_round_costs(const Vector& x) const {
  std::vector<double> out;
  out.reserve(costs_.size());
  for (const CostFunction& f : costs_) out.push_back(f.value(x));
  return out;
}

double BenchmarkAccumulator::max_violation(const Vector& x) const {
  double worst = -std::numeric_limits<double>::infinity();
  if (rows_structured_) {
    if (kind_ == BenchmarkKind::kXT) {
      for (const auto& [key, offset] : rows_) {
        double v = offset;
        for (int j = 0; j < n_; ++j) v += key[j] * x[j];
        worst = std::max(worst, v);
      }
    } else if (summed_.matrix.size() != 0) {
      worst = (summed_.matrix * x + summed_.offset).maxCoeff();
    }
  } else if (kind_ == BenchmarkKind::kXT) {
    for (const auto& [key, offset] : rows_) {
      double v = offset;
      for (int j = 0; j < n_; ++j) v += key[j] * x[j];
      worst = std::max(worst, v);
    }
    for (const ConstraintFunction& g : constraints_) {
      worst = std::max(worst, g.values(x).maxCoeff());
    }
  } else if (constraint_sum_) {
    worst = constraint_sum_->values(x).maxCoeff();
  }
  return worst;
}

BenchmarkResult BenchmarkAccumulator::solve(double grid_resolution,
                                            std::uint64_t cross_check_seed) const {
  if (rounds_ == 0) throw std::logic_error("benchmark: no rounds recorded");
  BenchmarkResult result;
  const double res =
      grid_resolution > 0.0 ? grid_resolution : 1e-4 * domain_.diameter_bound();
  const Vector lo = domain_.lower();
  const Vector hi = domain_.upper();

  auto admissible = [&](const Vector& x) {
    return domain_.contains(x, kFeasibilityTol) &&
           max_violation(x) <= kFeasibilityTol;
  };
  double best = std::numeric_limits<double>::infinity();
  Vector best_x;
  auto consider = [&](const Vector& x) {
    if (!admissible(x)) return;
    const double v = total_cost(x);
    if (v < best) {
      best = v;
      best_x = x;
    }
  };

  if (n_ == 1) {
    // Full grid at the target resolution.
    const long long steps =
        static_cast<long long>(std::ceil((hi[0] - lo[0]) / res - 1e-9));
    Vector x(1);
    for (long long i = 0; i <= steps; ++i) {
      x[0] = std::min(hi[0], lo[0] + static_cast<double>(i) * res);
      consider(x);
    }
    result.method = "grid";
    result.resolution = res;
    // Structured rows cut out an interval; polish the grid answer exactly.
    if (costs_structured_ && rows_structured_) {
      double left = lo[0], right = hi[0];
      bool empty = false;
      for (const auto& [a, b] : dense_rows()) {
        if (a[0] > 0.0) {
          right = std::min(right, -b / a[0]);
        } else if (a[0] < 0.0) {
          left = std::max(left, -b / a[0]);
        } else if (b > kFeasibilityTol) {
          empty = true;
        }
      }
      if (!empty && left <= right) {
        double x0;
        if (cost_sum_.curvature > 0.0) {
          x0 = std::clamp(-cost_sum_.linear[0] / cost_sum_.curvature, left, right);
        } else {
          const Vector ends[2] = {Vector::Constant(1, left), Vector::Constant(1, right)};
          x0 = total_cost(ends[0]) <= total_cost(ends[1]) ? left : right;
        }
        const Vector exact = Vector::Constant(1, x0);
        if (max_violation(exact) <= kFeasibilityTol &&
            (best_x.size() == 0 || total_cost(exact) <= best)) {
          best = total_cost(exact);
          best_x = exact;
          result.method = "grid_exact";
        }
      }
    }
  } else if (n_ == 2) {
    // Coarse grid, then shrinking windows around the incumbent.
    double step = std::max(res, std::max(hi[0] - lo[0], hi[1] - lo[1]) / 400.0);
    Vector x(2);
    const auto rows = dense_rows();
    const bool by_line = rows_structured_;
    auto sweep = [&](const Vector& from, const Vector& to, double h) {
      const long long nx = static_cast<long long>(std::ceil((to[0] - from[0]) / h));
      const long long ny = static_cast<long long>(std::ceil((to[1] - from[1]) / h));
      for (long long i = 0; i <= nx; ++i) {
        x[0] = std::min(to[0], from[0] + static_cast<double>(i) * h);
        // Affine rows leave an interval of x[1] on each grid line.
        double low = -std::numeric_limits<double>::infinity();
        double high = std::numeric_limits<double>::infinity();
        if (by_line) {
          for (const auto& [a, b] : rows) {
            const double rest = kFeasibilityTol - b - a[0] * x[0];
            if (a[1] > 0.0) {
              high = std::min(high, rest / a[1]);
            } else if (a[1] < 0.0) {
              low = std::max(low, rest / a[1]);
            } else if (rest < 0.0) {
              high = -std::numeric_limits<double>::infinity();
            }
          }
        }
        for (long long j = 0; j <= ny; ++j) {
          x[1] = std::min(to[1], from[1] + static_cast<double>(j) * h);
          if (!by_line) {
            consider(x);
            continue;
          }
          if (x[1] < low || x[1] > high || !domain_.contains(x, kFeasibilityTol)) {
            continue;
          }
          const double v = total_cost(x);
          if (v < best) {
            best = v;
            best_x = x;
          }
        }
      }
    };
    sweep(lo, hi, step);
    while (best_x.size() != 0 && step > res) {
      const double next = std::max(res, step / 10.0);
      const Vector from = (best_x.array() - 2.0 * step).max(lo.array()).matrix();
      const Vector to = (best_x.array() + 2.0 * step).min(hi.array()).matrix();
      sweep(from, to, next);
      step = next;
    }
    result.method = "grid_zoom";
    result.resolution = res;
  } else {
    // Exact penalty on the worst constraint row, raised until feasible.
    FtrlObjective obj(domain_);
    if (costs_structured_) {
      obj.cost_terms.push_back(CostFunction::quadratic(cost_sum_));
    } else {
      obj.cost_terms = costs_;
    }
    const auto rows = dense_rows();
    const ConstraintFunction hinge(
        n_, 1,
        [this, rows](const Vector& x) {
          double worst = 0.0;
          Vector grad = Vector::Zero(n_);
          auto take = [&](double v, const Vector& a) {
            if (v > worst) {
              worst = v;
              grad = a;
            }
          };
          for (const auto& [a, b] : rows) take(a.dot(x) + b, a);
          if (!rows_structured_) {
            auto take_all = [&](const ConstraintFunction& g) {
              const ConstraintEval ge = g(x);
              for (Eigen::Index k = 0; k < ge.values.size(); ++k) {
                take(ge.values[k], ge.jacobian.row(k).transpose());
              }
            };
            for (const auto& g : constraints_) take_all(g);
            if (constraint_sum_) take_all(*constraint_sum_);
          }
          return ConstraintEval{Vector::Constant(1, worst), grad.transpose()};
        },
        kNonsmooth);
    double scale = 1.0 + std::abs(cost_sum_.curvature) * domain_.diameter_bound() +
                   cost_sum_.linear.norm();
    if (!costs_structured_) scale = 1.0 + static_cast<double>(rounds_);
    SolverSettings settings;
    settings.max_iterations = 20000;
    Vector x;
    for (int attempt = 0; attempt < 8; ++attempt) {
      FtrlObjective penalized = obj;
      penalized.weighted_constraints.push_back({Vector::Constant(1, scale), hinge});
      x = minimize(penalized, settings).x;
      if (max_violation(x) <= 1e-7) break;
      scale *= 10.0;
    }
    result.method = "penalty_subgradient";
    if (max_violation(x) <= 1e-7) {
      best_x = x;
      best = total_cost(x);
      Rng rng(cross_check_seed);
      const double slack = 1e-6 * (1.0 + std::abs(best));
      for (int s = 0; s < 2000; ++s) {
        Vector y(n_);
        for (int k = 0; k < n_; ++k) y[k] = rng.uniform(lo[k], hi[k]);
        y = domain_.project(y);
        if (max_violation(y) > kFeasibilityTol) continue;
        if (total_cost(y) < best - slack) result.cross_check_ok = false;
      }
    }
  }

  if (best_x.size() == 0) {
    result.feasible = false;
    result.optimal_total_cost = kNaN;
    return result;
  }
  result.feasible = true;
  result.x_star = best_x;
  result.optimal_total_cost = best;
  result.max_violation = max_violation(best_x);
  return result;
}

TraceMetrics compute_metrics(const std::vector<RoundRecord>& records,
                             const std::vector<double>& benchmark_costs) {
  if (!benchmark_costs.empty() && benchmark_costs.size() < records.size()) {
    throw std::invalid_argument("compute_metrics: benchmark costs too short");
  }
  TraceMetrics m;
  const std::size_t T = records.size();
  m.cum_cost.reserve(T);
  m.cum_constraint.reserve(T);
  m.regret.reserve(T);
  m.violation.reserve(T);
  m.violation_z.reserve(T);
  double cost = 0.0, star = 0.0;
  Vector g, gz;
  for (std::size_t i = 0; i < T; ++i) {
    const RoundRecord& r = records[i];
    if (i == 0) {
      g = Vector::Zero(r.g_values.size());
      gz = Vector::Zero(r.g_at_z.size());
    }
    cost += r.f_value;
    g += r.g_values;
    gz += r.g_at_z;
    m.cum_cost.push_back(cost);
    m.cum_constraint.push_back(g);
    if (benchmark_costs.empty()) {
      m.regret.push_back(kNaN);
    } else {
      star += benchmark_costs[i];
      m.regret.push_back(cost - star);
    }
    m.violation.push_back(positive_part(g).norm());
    m.violation_z.push_back(positive_part(gz).norm());
  }
  return m;
}

namespace {

BoundReport common_inputs(const std::vector<RoundRecord>& records,
                          const LearnerConfig& config, double regret) {
  if (records.empty()) throw std::invalid_argument("bounds: empty trace");
  BoundReport b;
  b.sigma = config.sigma;
  b.D = config.bounds.D;
  b.L_f = config.bounds.L_f;
  b.L_g = config.bounds.L_g;
  b.G = config.bounds.G;
  b.a = config.a;
  b.beta = config.beta;
  b.regret = regret;
  b.horizon = static_cast<int>(records.size());
  for (const RoundRecord& r : records) {
    b.h_cum += r.h;
    b.xi_sq_cum += r.xi * r.xi;
    b.dual_term += r.a_prev * r.xi * r.xi;
  }
  b.phi_prev = 1.0 / records.back().a_prev;
  b.mu_next = records.back().mu_next;
  return b;
}

void finish_violation(BoundReport& b, double primal_root) {
  b.Vz_bound = clamp_sqrt(2.0 * b.phi_prev * (b.B_T - b.regret), b.clamped);
  b.V_bound = b.Vz_bound + 2.0 * b.L_g / b.sigma * primal_root;
}

}  // namespace

BoundReport evaluate_proximal_bounds(const std::vector<RoundRecord>& records,
                                     const LearnerConfig& config, double regret) {
  BoundReport b = common_inputs(records, config, regret);
  const double root = std::sqrt(b.h_cum);
  b.B_T = 2.0 * (b.sigma * b.D * b.D + b.L_f / b.sigma) * root + b.dual_term;
  finish_violation(b, root);
  return b;
}

BoundReport evaluate_nonproximal_bounds(const std::vector<RoundRecord>& records,
                                        const LearnerConfig& config, double regret) {
  BoundReport b = common_inputs(records, config, regret);
  const double root = std::sqrt(b.h_cum + b.mu_next);
  b.B_T = 2.0 * (b.sigma * b.D * b.D + b.L_f / b.sigma) * root + b.dual_term;
  finish_violation(b, root);
  return b;
}

BoundReport evaluate_perturbed_bounds(const std::vector<RoundRecord>& records,
                                      const LearnerConfig& config, double regret) {
  BoundReport b = common_inputs(records, config, regret);
  const double T = static_cast<double>(b.horizon);
  b.A1 = 2.0 * b.sigma * b.D * b.D + 2.0 * b.L_f / b.sigma;
  b.A2 = 4.0 * b.a * b.G * b.G / (1.0 - b.beta);
  b.A3 = 2.0 / b.a;
  b.A4 = 2.0 * b.L_g / b.sigma;
  // Note the G^2 here against 4G^2 in the dual rate; both as stated.
  b.K_T = std::sqrt(b.G * b.G + b.xi_sq_cum);
  const double root = std::sqrt(b.h_cum);
  b.B_T = b.A1 * root + std::min(2.0 * b.a * std::sqrt(b.xi_sq_cum),
                                 b.A2 * std::pow(T, 1.0 - b.beta));
  b.Vz_bound = clamp_sqrt(
      b.A3 * std::max(b.K_T, std::pow(T, b.beta)) * (b.B_T - b.regret), b.clamped);
  b.V_bound = b.Vz_bound + b.A4 * root;
  return b;
}

DualRegretCheck dual_regret_check(const std::vector<RoundRecord>& records,
                                  const Vector& lambda) {
  DualRegretCheck c;
  if (records.empty()) return c;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const RoundRecord& r = records[i];
    c.regret += (lambda - r.lambda).dot(r.g_at_z);
    const Vector forecast =
        i == 0 ? Vector(Vector::Zero(r.g_at_z.size())) : r.predicted_value;
    c.bound += r.a_prev * (r.g_at_z - forecast).squaredNorm();
  }
  c.bound += lambda.squaredNorm() / (2.0 * records.back().a_prev);
  return c;
}

std::pair<double, double> inverse_power_sum(double d, long long horizon) {
  if (!(d >= 0.0 && d < 1.0) || horizon < 1) {
    throw std::invalid_argument("inverse_power_sum: need d in [0,1), T >= 1");
  }
  // Summed from the smallest terms up to limit rounding.
  double sum = 0.0;
  for (long long t = horizon; t >= 1; --t) sum += std::pow(static_cast<double>(t), -d);
  return {sum, std::pow(static_cast<double>(horizon), 1.0 - d) / (1.0 - d)};
}

GrowthFit fit_growth_exponent(const std::vector<std::pair<double, double>>& samples,
                              double fraction) {
  if (samples.size() < 4) {
    throw std::invalid_argument("fit_growth_exponent: need at least 4 samples");
  }
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw std::invalid_argument("fit_growth_exponent: fraction must be in (0,1]");
  }
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (!(samples[i].first > samples[i - 1].first)) {
      throw std::invalid_argument("fit_growth_exponent: T must increase");
    }
  }
  GrowthFit fit;
  std::vector<std::pair<double, double>> kept;
  for (const auto& [T, v] : samples) {
    if (v > 0.0 && T > 0.0) {
      kept.emplace_back(std::log(T), std::log(v));
    } else {
      fit.dropped.push_back(T);
    }
  }
  const std::size_t count = std::max<std::size_t>(
      2, static_cast<std::size_t>(std::ceil(fraction * samples.size())));
  if (kept.size() > count) kept.erase(kept.begin(), kept.end() - count);
  if (kept.size() < 2) {
    throw std::invalid_argument("fit_growth_exponent: too few positive values");
  }
  const double n = static_cast<double>(kept.size());
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : kept) {
    mx += x;
    my += y;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& [x, y] : kept) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
    syy += (y - my) * (y - my);
  }
  fit.exponent = sxy / sxx;
  fit.intercept = my - fit.exponent * mx;
  fit.r_squared = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
  fit.used = static_cast<int>(kept.size());
  return fit;
}

}  // namespace llp
