#pragma once

// Poincare ball model of hyperbolic space.
//
// The ball of curvature parameter c is {x : c * |x|^2 < 1}. All routines work
// in double precision; artanh amplifies rounding near the boundary.

#include "hypml/types.hpp"

namespace hypml::geometry {

/// Norm reduction applied by the boundary clip: points end up at (1 - eps) / sqrt(c).
inline constexpr double kBoundaryEps = 1e-5;

/// artanh arguments are clamped to 1 - kArtanhGuard.
inline constexpr double kArtanhGuard = 1e-15;

/// Construction of a BallPoint clamps overshoots up to this relative amount.
inline constexpr double kBallTolerance = 1e-3;

/// Curvature parameter c > 0 (sectional curvature -c^2).
class Curvature {
 public:
  explicit Curvature(double c);

  double value() const noexcept { return c_; }
  double sqrt_c() const noexcept { return sqrt_c_; }
  /// Radius 1/sqrt(c) of the open ball.
  double radius() const noexcept { return 1.0 / sqrt_c_; }
  /// Norm enforced by clip_ball.
  double boundary_norm() const noexcept { return (1.0 - kBoundaryEps) / sqrt_c_; }

  friend bool operator==(Curvature a, Curvature b) noexcept { return a.c_ == b.c_; }

 private:
  double c_;
  double sqrt_c_;
};

/// Point strictly inside the ball.
class BallPoint {
 public:
  /// Throws Domain if coords are non-finite or lie outside the ball by more
  /// than kBallTolerance (relative); smaller overshoots are clamped.
  BallPoint(Vector coords, Curvature c);

  static BallPoint origin(Index dim, Curvature c) { return BallPoint(Vector::Zero(dim), c); }

  const Vector& coords() const noexcept { return coords_; }
  Curvature curvature() const noexcept { return c_; }
  Index dim() const noexcept { return coords_.size(); }

 private:
  Vector coords_;
  Curvature c_;
};

/// Euclidean tangent vector; only finiteness is required.
class TangentVector {
 public:
  explicit TangentVector(Vector coords);

  const Vector& coords() const noexcept { return coords_; }
  Index dim() const noexcept { return coords_.size(); }

 private:
  Vector coords_;
};

using VecRef = Eigen::Ref<const Vector>;

double conformal_factor(const VecRef& x, Curvature c);

BallPoint mobius_add(const BallPoint& x, const BallPoint& y);
double dist_hyp(const BallPoint& x, const BallPoint& y);
BallPoint exp_map_zero(const TangentVector& v, Curvature c);
/// Exponential map at an arbitrary base point, composed through mobius_add.
BallPoint exp_map(const BallPoint& base, const TangentVector& v);
BallPoint clip_ball(const VecRef& x, Curvature c);
/// min{1, r/|x|} * x; the zero vector is returned unchanged.
Vector clip_features(const VecRef& x, double r);

// Unchecked kernels on raw vectors. Callers guarantee matching dimensions and
// (for the ball routines) that inputs lie inside the ball.
namespace raw {

Vector mobius_add(const VecRef& x, const VecRef& y, double c);
double dist_hyp(const VecRef& x, const VecRef& y, double c);
Vector exp_map_zero(const VecRef& v, double c);
Vector clip_ball(const VecRef& x, double c);

}  // namespace raw

// Vector-Jacobian products for the embedding pipeline
// features -> clip_features -> exp_map_zero -> clip_ball.
// Each takes the forward input and the gradient w.r.t. the forward output.
namespace grad {

Vector clip_features(const VecRef& x, double r, const VecRef& upstream);
Vector exp_map_zero(const VecRef& v, double c, const VecRef& upstream);
Vector clip_ball(const VecRef& x, double c, const VecRef& upstream);

/// Hyperbolic distance with its gradients w.r.t. both arguments, computed from
/// the equivalent arcosh form 1/sqrt(c) * arcosh(1 + 2c|x-y|^2 / ((1-c|x|^2)(1-c|y|^2))).
struct DistanceGrad {
  double value;
  Vector d_x;
  Vector d_y;
};
DistanceGrad dist_hyp(const VecRef& x, const VecRef& y, double c);

}  // namespace grad

}  // namespace hypml::geometry
