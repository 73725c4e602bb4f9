#include "llp/core_math.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>
#include <vector>

namespace llp {

Vector positive_part(const Vector& v) { return v.cwiseMax(0.0); }

bool all_finite(const Vector& v) { return v.allFinite(); }

Vector project_simplex(const Vector& y, double scale) {
  const Eigen::Index n = y.size();
  // Members (up to rounding in the sum) are returned unchanged so projection
  // is idempotent.
  const double slack = 4.0 * std::numeric_limits<double>::epsilon() *
                       static_cast<double>(n) * std::max(scale, y.cwiseAbs().sum());
  if ((y.array() >= 0.0).all() && std::abs(y.sum() - scale) <= slack) return y;
  std::vector<double> sorted(y.data(), y.data() + n);
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double threshold = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    cumulative += sorted[k];
    const double candidate = (cumulative - scale) / static_cast<double>(k + 1);
    if (sorted[k] - candidate > 0.0) threshold = candidate;
  }
  return (y.array() - threshold).cwiseMax(0.0).matrix();
}

ConvexSet ConvexSet::box(int dim, double lower, double upper,
                         double diameter_bound) {
  if (dim < 1) throw ConfigError("box: dimension must be >= 1");
  ConvexSet set;
  set.kind_ = Kind::kBox;
  set.dim_ = dim;
  set.lower_ = Vector::Constant(dim, lower);
  set.upper_ = Vector::Constant(dim, upper);
  set.diameter_bound_ = diameter_bound;
  set.validate();
  return set;
}

ConvexSet ConvexSet::interval_product(Vector lower, Vector upper,
                                      double diameter_bound) {
  if (lower.size() != upper.size() || lower.size() < 1) {
    throw ConfigError("interval_product: bound vectors must match, dim >= 1");
  }
  ConvexSet set;
  set.kind_ = Kind::kIntervalProduct;
  set.dim_ = static_cast<int>(lower.size());
  set.lower_ = std::move(lower);
  set.upper_ = std::move(upper);
  set.diameter_bound_ = diameter_bound;
  set.validate();
  return set;
}

ConvexSet ConvexSet::ball(Vector center, double radius,
                          double diameter_bound) {
  if (center.size() < 1) throw ConfigError("ball: dimension must be >= 1");
  if (!(radius > 0.0)) throw ConfigError("ball: radius must be positive");
  ConvexSet set;
  set.kind_ = Kind::kBall;
  set.dim_ = static_cast<int>(center.size());
  set.radius_ = radius;
  set.lower_ = center.array() - radius;
  set.upper_ = center.array() + radius;
  set.center_ = std::move(center);
  set.diameter_bound_ = diameter_bound;
  set.validate();
  return set;
}

ConvexSet ConvexSet::simplex(int dim, double scale, double diameter_bound) {
  if (dim < 1) throw ConfigError("simplex: dimension must be >= 1");
  if (!(scale > 0.0)) throw ConfigError("simplex: scale must be positive");
  ConvexSet set;
  set.kind_ = Kind::kSimplex;
  set.dim_ = dim;
  set.scale_ = scale;
  set.lower_ = Vector::Zero(dim);
  set.upper_ = Vector::Constant(dim, scale);
  set.diameter_bound_ = diameter_bound;
  set.validate();
  return set;
}

void ConvexSet::validate() const {
  if (!(diameter_bound_ > 0.0) || !std::isfinite(diameter_bound_)) {
    throw ConfigError("convex set: diameter bound must be positive and finite");
  }
  if (!lower_.allFinite() || !upper_.allFinite() ||
      (lower_.array() > upper_.array()).any()) {
    throw ConfigError("convex set: invalid bounds");
  }
  const double origin_image = project(Vector::Zero(dim_)).norm();
  if (origin_image > diameter_bound_ * (1.0 + 1e-12)) {
    throw ConfigError("convex set: ||project(0)|| exceeds the diameter bound");
  }
}

void ConvexSet::check_dim(const Vector& y) const {
  if (y.size() != dim_) {
    throw ConfigError("dimension mismatch: set has dim " +
                      std::to_string(dim_) + ", point has " +
                      std::to_string(y.size()));
  }
}

Vector ConvexSet::project(const Vector& y) const {
  check_dim(y);
  switch (kind_) {
    case Kind::kBox:
    case Kind::kIntervalProduct:
      return y.cwiseMax(lower_).cwiseMin(upper_);
    case Kind::kBall: {
      const Vector offset = y - center_;
      const double dist = offset.norm();
      // Points within rounding of the sphere count as members, which keeps
      // projection idempotent after the radial rescale.
      if (dist <= radius_ * (1.0 + 4.0 * std::numeric_limits<double>::epsilon())) {
        return y;
      }
      return center_ + offset * (radius_ / dist);
    }
    case Kind::kSimplex:
      return project_simplex(y, scale_);
  }
  return y;
}

bool ConvexSet::contains(const Vector& x, double tol) const {
  check_dim(x);
  switch (kind_) {
    case Kind::kBox:
    case Kind::kIntervalProduct:
      return (x.array() >= lower_.array() - tol).all() &&
             (x.array() <= upper_.array() + tol).all();
    case Kind::kBall:
      return (x - center_).norm() <= radius_ + tol;
    case Kind::kSimplex:
      return (x.array() >= -tol).all() && std::abs(x.sum() - scale_) <= tol;
  }
  return false;
}

Vector ConvexSet::linear_minimize(const Vector& c, const Vector& fallback,
                                  double tie_tol) const {
  check_dim(c);
  check_dim(fallback);
  switch (kind_) {
    case Kind::kBox:
    case Kind::kIntervalProduct: {
      Vector x(dim_);
      for (int k = 0; k < dim_; ++k) {
        if (c[k] > tie_tol) {
          x[k] = lower_[k];
        } else if (c[k] < -tie_tol) {
          x[k] = upper_[k];
        } else {
          x[k] = std::clamp(fallback[k], lower_[k], upper_[k]);
        }
      }
      return x;
    }
    case Kind::kBall: {
      const double norm = c.norm();
      if (norm <= tie_tol) return project(fallback);
      return center_ - c * (radius_ / norm);
    }
    case Kind::kSimplex: {
      const double best = c.minCoeff();
      std::vector<int> face;
      for (int k = 0; k < dim_; ++k) {
        if (c[k] <= best + tie_tol) face.push_back(k);
      }
      Vector x = Vector::Zero(dim_);
      if (face.size() == 1) {
        x[face.front()] = scale_;
        return x;
      }
      Vector restricted(static_cast<Eigen::Index>(face.size()));
      for (size_t i = 0; i < face.size(); ++i) restricted[i] = fallback[face[i]];
      const Vector on_face = project_simplex(restricted, scale_);
      for (size_t i = 0; i < face.size(); ++i) x[face[i]] = on_face[i];
      return x;
    }
  }
  return fallback;
}

std::string ConvexSet::describe() const {
  std::ostringstream out;
  switch (kind_) {
    case Kind::kBox:
      out << "box[" << lower_[0] << ", " << upper_[0] << "]^" << dim_;
      break;
    case Kind::kIntervalProduct:
      out << "interval_product(dim=" << dim_ << ")";
      break;
    case Kind::kBall:
      out << "ball(radius=" << radius_ << ", dim=" << dim_ << ")";
      break;
    case Kind::kSimplex:
      out << "simplex(scale=" << scale_ << ", dim=" << dim_ << ")";
      break;
  }
  return out.str();
}

}  // namespace llp
