#ifndef LLP_CORE_MATH_HPP_
#define LLP_CORE_MATH_HPP_

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace llp {

// Points in R^N (decisions) and R^d (constraint values, multipliers).
using Vector = Eigen::VectorXd;
// d x N matrix of constraint partial derivatives.
using Jacobian = Eigen::MatrixXd;

// Raised for invalid configuration: bad dimensions, out-of-range parameters,
// malformed config documents.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Elementwise max(0, v_i); the Euclidean projection onto the nonnegative
// orthant.
Vector positive_part(const Vector& v);

bool all_finite(const Vector& v);

// Compact convex feasible region with an exact Euclidean projection.
//
// Immutable after construction. `diameter_bound` is the D with ||x|| <= D for
// every member x; only ||project(0)|| <= D is checked at construction.
class ConvexSet {
 public:
  enum class Kind { kBox, kIntervalProduct, kBall, kSimplex };

  // [lower, upper]^dim.
  static ConvexSet box(int dim, double lower, double upper,
                       double diameter_bound);
  // Product of per-coordinate intervals [lower_k, upper_k].
  static ConvexSet interval_product(Vector lower, Vector upper,
                                    double diameter_bound);
  static ConvexSet ball(Vector center, double radius, double diameter_bound);
  // {x >= 0, sum(x) = scale}.
  static ConvexSet simplex(int dim, double scale, double diameter_bound);

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  double diameter_bound() const { return diameter_bound_; }

  // Box / interval-product bounds; for the other kinds these are a bounding
  // box of the set.
  const Vector& lower() const { return lower_; }
  const Vector& upper() const { return upper_; }
  const Vector& center() const { return center_; }
  double radius() const { return radius_; }
  double scale() const { return scale_; }

  Vector project(const Vector& y) const;
  bool contains(const Vector& x, double tol = 1e-12) const;

  // A minimizer of c^T x over the set. Coefficients with |c_k| <= tie_tol
  // are treated as ties; ties resolve to the minimizer closest to
  // `fallback`.
  Vector linear_minimize(const Vector& c, const Vector& fallback,
                         double tie_tol) const;

  std::string describe() const;

 private:
  ConvexSet() = default;
  void validate() const;
  void check_dim(const Vector& y) const;

  Kind kind_ = Kind::kBox;
  int dim_ = 0;
  double diameter_bound_ = 0.0;
  Vector lower_;
  Vector upper_;
  Vector center_;
  double radius_ = 0.0;
  double scale_ = 0.0;
};

// Euclidean projection onto {x >= 0, sum(x) = scale} (sort-based).
Vector project_simplex(const Vector& y, double scale);

}  // namespace llp

#endif  // LLP_CORE_MATH_HPP_
