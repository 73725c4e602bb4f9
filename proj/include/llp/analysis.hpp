#ifndef LLP_ANALYSIS_HPP_
#define LLP_ANALYSIS_HPP_

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "llp/core_math.hpp"
#include "llp/learner.hpp"
#include "llp/problem.hpp"

namespace llp {

enum class BenchmarkKind { kXT, kXTMax };

BenchmarkKind parse_benchmark_kind(const std::string& name);
std::string to_string(BenchmarkKind kind);

struct BenchmarkResult {
  bool feasible = false;
  Vector x_star;
  double optimal_total_cost = 0.0;  // sum_t f_t(x_star)
  double resolution = 0.0;          // grid step, 0 for the iterative path
  double max_violation = 0.0;       // of the benchmark constraints at x_star
  std::string method;
  // Iterative path only: no random feasible sample beat x_star.
  bool cross_check_ok = true;
};

// Collects the rounds of a run and solves for the best fixed point in
// hindsight. Quadratic costs and affine constraints are aggregated exactly
// (X_T keeps one row per distinct constraint gradient, with the largest
// offset); other functions are kept and evaluated round by round.
class BenchmarkAccumulator {
 public:
  BenchmarkAccumulator(ConvexSet domain, BenchmarkKind kind);

  void add(const RoundOracle& round);

  // grid_resolution <= 0 selects 1e-4 * D.
  BenchmarkResult solve(double grid_resolution = 0.0,
                        std::uint64_t cross_check_seed = 0) const;

  // f_t(x) for every round added, in order.
  std::vector<double> per_round_costs(const Vector& x) const;
  double total_cost(const Vector& x) const;
  // max over benchmark constraint rows of the row value at x.
  double max_violation(const Vector& x) const;
  int rounds() const { return rounds_; }

 private:
  ConvexSet domain_;
  BenchmarkKind kind_;
  int n_;
  int rounds_ = 0;

  bool costs_structured_ = true;
  QuadraticForm cost_sum_;
  std::vector<CostFunction> costs_;  // every round, for per-round values

  bool rows_structured_ = true;
  std::map<std::vector<double>, double> rows_;  // X_T: gradient -> max offset
  AffineForm summed_;                            // X_T_max
  std::vector<ConstraintFunction> constraints_;  // fallback
  std::optional<ConstraintFunction> constraint_sum_;

  std::vector<std::pair<Vector, double>> dense_rows() const;
};

// Per-round cumulative metrics of a trace.
struct TraceMetrics {
  std::vector<double> cum_cost;
  std::vector<Vector> cum_constraint;  // sum_{i<=t} g_i(x_i)
  std::vector<double> regret;          // NaN without a benchmark
  std::vector<double> violation;       // ||[sum g_i(x_i)]_+||
  std::vector<double> violation_z;     // same on z_i

  double final_regret() const { return regret.empty() ? 0.0 : regret.back(); }
  double final_violation() const {
    return violation.empty() ? 0.0 : violation.back();
  }
};

// `benchmark_costs` holds f_t(x*) per round (empty: regret left as NaN).
TraceMetrics compute_metrics(const std::vector<RoundRecord>& records,
                             const std::vector<double>& benchmark_costs);

struct BoundReport {
  double B_T = 0.0;
  double V_bound = 0.0;
  double Vz_bound = 0.0;  // first term of V_bound alone
  bool clamped = false;   // B - R < 0 was clamped inside a square root

  // Perturbed-constraint parameters.
  double A1 = 0.0, A2 = 0.0, A3 = 0.0, A4 = 0.0, K_T = 0.0;

  // Inputs.
  double sigma = 0.0, D = 0.0, L_f = 0.0, L_g = 0.0, G = 0.0;
  double a = 0.0, beta = 0.0;
  double h_cum = 0.0;
  double xi_sq_cum = 0.0;
  double dual_term = 0.0;  // sum_t a_{t-1} xi_t^2
  double phi_prev = 0.0;   // phi_{0:T-1} = 1 / a_{T-1}
  double mu_next = 0.0;    // mu_{T+1}
  double regret = 0.0;
  int horizon = 0;
};

// B_T = 2(sigma D^2 + L_f/sigma) sqrt(h) + sum a_{t-1} xi_t^2,
// V <= sqrt(2 (B_T - R_T) / a_{T-1}) + (2 L_g / sigma) sqrt(h).
BoundReport evaluate_proximal_bounds(const std::vector<RoundRecord>& records,
                                     const LearnerConfig& config, double regret);
// Non-proximal form: sqrt(h) becomes sqrt(h + mu_{T+1}).
BoundReport evaluate_nonproximal_bounds(const std::vector<RoundRecord>& records,
                                        const LearnerConfig& config, double regret);
// B_T = A1 sqrt(h) + min{2a sqrt(sum xi^2), A2 T^(1-beta)},
// V <= sqrt(A3 max{K_T, T^beta} (B_T - R_T)) + A4 sqrt(h).
BoundReport evaluate_perturbed_bounds(const std::vector<RoundRecord>& records,
                                      const LearnerConfig& config, double regret);

// Realized dual regret of {lambda_t} against a fixed `lambda`, and the
// optimistic-FTRL bound ||lambda||^2 / (2 a_{T-1}) + sum a_{t-1} ||g_t(z_t) -
// p_t||^2. p_t is the forecast behind lambda_t (zero in round 1, where
// lambda_1 = 0 by construction).
struct DualRegretCheck {
  double regret = 0.0;
  double bound = 0.0;
};
DualRegretCheck dual_regret_check(const std::vector<RoundRecord>& records,
                                  const Vector& lambda);

// sum_{t=1}^T t^-d and its majorant T^(1-d) / (1-d).
std::pair<double, double> inverse_power_sum(double d, long long horizon);

struct GrowthFit {
  double exponent = 0.0;
  double intercept = 0.0;
  double r_squared = 1.0;
  int used = 0;
  std::vector<double> dropped;  // horizons with nonpositive values
};

// Least squares of log(value) on log(T). Only the largest `fraction` of the
// horizons enter the fit (at least two).
GrowthFit fit_growth_exponent(const std::vector<std::pair<double, double>>& samples,
                              double fraction = 0.5);

}  // namespace llp

#endif  // LLP_ANALYSIS_HPP_
