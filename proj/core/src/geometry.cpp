#include "hypml/geometry.hpp"

#include "hypml/error.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace hypml::geometry {
namespace {

constexpr double kClipSlack = 1.0 + 8.0 * std::numeric_limits<double>::epsilon();

void require_same_space(const BallPoint& x, const BallPoint& y) {
  require(x.dim() == y.dim(), ErrorKind::Domain, "ball points differ in dimension");
  require(x.curvature() == y.curvature(), ErrorKind::Domain, "ball points differ in curvature");
}

// tanh(s)/s and (d/ds)(tanh(s)/s) / s, with series below the cancellation zone.
double tanh_ratio(double s) { return s == 0.0 ? 1.0 : std::tanh(s) / s; }

double tanh_ratio_slope_over_s(double s) {
  if (s < 1e-2) {
    const double s2 = s * s;
    return -2.0 / 3.0 + s2 * (8.0 / 15.0 - s2 * 34.0 / 105.0);
  }
  const double t = std::tanh(s);
  const double sech2 = 1.0 - t * t;
  return (sech2 * s - t) / (s * s * s);
}

}  // namespace

Curvature::Curvature(double c) : c_(c), sqrt_c_(std::sqrt(c)) {
  if (!(std::isfinite(c) && c > 0.0)) {
    std::ostringstream msg;
    msg << "curvature must be positive and finite, got " << c;
    fail(ErrorKind::Domain, msg.str());
  }
}

BallPoint::BallPoint(Vector coords, Curvature c) : coords_(std::move(coords)), c_(c) {
  require(coords_.allFinite(), ErrorKind::Domain, "ball point has non-finite coordinates");
  const double scaled = c_.sqrt_c() * coords_.norm();
  if (scaled >= 1.0) {
    if (scaled - 1.0 > kBallTolerance) {
      std::ostringstream msg;
      msg << "point outside the Poincare ball: sqrt(c)*|x| = " << scaled;
      fail(ErrorKind::Domain, msg.str());
    }
    coords_ = raw::clip_ball(coords_, c_.value());
  }
}

TangentVector::TangentVector(Vector coords) : coords_(std::move(coords)) {
  require(coords_.allFinite(), ErrorKind::Domain, "tangent vector has non-finite coordinates");
}

double conformal_factor(const VecRef& x, Curvature c) {
  const double shrink = 1.0 - c.value() * x.squaredNorm();
  require(shrink > 0.0, ErrorKind::Domain, "conformal_factor: point not inside the ball");
  return 2.0 / shrink;
}

namespace raw {

Vector mobius_add(const VecRef& x, const VecRef& y, double c) {
  const double xy = x.dot(y);
  const double x2 = x.squaredNorm();
  const double y2 = y.squaredNorm();
  const double num_x = 1.0 + 2.0 * c * xy + c * y2;
  const double num_y = 1.0 - c * x2;
  const double den = 1.0 + 2.0 * c * xy + c * c * x2 * y2;
  return (num_x * x + num_y * y) / den;
}

double dist_hyp(const VecRef& x, const VecRef& y, double c) {
  const double sqrt_c = std::sqrt(c);
  const Vector diff = mobius_add(-x, y, c);
  const double arg = std::min(sqrt_c * diff.norm(), 1.0 - kArtanhGuard);
  return 2.0 / sqrt_c * std::atanh(arg);
}

Vector exp_map_zero(const VecRef& v, double c) {
  const double sqrt_c = std::sqrt(c);
  return tanh_ratio(sqrt_c * v.norm()) * v;
}

Vector clip_ball(const VecRef& x, double c) {
  const double limit = (1.0 - kBoundaryEps) / std::sqrt(c);
  const double norm = x.norm();
  if (norm >= limit) return x * (limit / norm);
  return x;
}

}  // namespace raw

BallPoint mobius_add(const BallPoint& x, const BallPoint& y) {
  require_same_space(x, y);
  const double c = x.curvature().value();
  return BallPoint(raw::clip_ball(raw::mobius_add(x.coords(), y.coords(), c), c), x.curvature());
}

double dist_hyp(const BallPoint& x, const BallPoint& y) {
  require_same_space(x, y);
  const double d = raw::dist_hyp(x.coords(), y.coords(), x.curvature().value());
  require(!std::isnan(d), ErrorKind::Numerical, "dist_hyp produced NaN");
  return d;
}

BallPoint exp_map_zero(const TangentVector& v, Curvature c) {
  return BallPoint(raw::clip_ball(raw::exp_map_zero(v.coords(), c.value()), c.value()), c);
}

BallPoint exp_map(const BallPoint& base, const TangentVector& v) {
  require(base.dim() == v.dim(), ErrorKind::Domain, "exp_map: dimension mismatch");
  const Curvature c = base.curvature();
  const double norm = v.coords().norm();
  if (norm == 0.0) return base;
  const double lambda = conformal_factor(base.coords(), c);
  const double s = c.sqrt_c() * lambda * norm / 2.0;
  Vector step = std::tanh(s) / (c.sqrt_c() * norm) * v.coords();
  const BallPoint step_point(raw::clip_ball(step, c.value()), c);
  return mobius_add(base, step_point);
}

BallPoint clip_ball(const VecRef& x, Curvature c) {
  require(x.allFinite(), ErrorKind::Domain, "clip_ball: non-finite input");
  return BallPoint(raw::clip_ball(x, c.value()), c);
}

Vector clip_features(const VecRef& x, double r) {
  require(r > 0.0, ErrorKind::Config, "clip radius must be positive");
  const double norm = x.norm();
  // A rescaled vector can come back a few ulps above r; the slack keeps the
  // clip idempotent.
  if (norm > r * kClipSlack) return x * (r / norm);
  return x;
}

namespace grad {

Vector clip_features(const VecRef& x, double r, const VecRef& upstream) {
  const double norm = x.norm();
  if (norm == 0.0 || norm <= r * kClipSlack) return upstream;
  const Vector unit = x / norm;
  return (r / norm) * (upstream - unit * unit.dot(upstream));
}

Vector exp_map_zero(const VecRef& v, double c, const VecRef& upstream) {
  const double s = std::sqrt(c) * v.norm();
  return tanh_ratio(s) * upstream + (c * tanh_ratio_slope_over_s(s) * v.dot(upstream)) * v;
}

Vector clip_ball(const VecRef& x, double c, const VecRef& upstream) {
  const double limit = (1.0 - kBoundaryEps) / std::sqrt(c);
  const double norm = x.norm();
  if (norm < limit) return upstream;
  const Vector unit = x / norm;
  return (limit / norm) * (upstream - unit * unit.dot(upstream));
}

DistanceGrad dist_hyp(const VecRef& x, const VecRef& y, double c) {
  const Vector diff = x - y;
  const double u = diff.squaredNorm();
  const double a = 1.0 - c * x.squaredNorm();
  const double b = 1.0 - c * y.squaredNorm();
  const double t = 2.0 * c * u / (a * b);
  const double root = std::sqrt(t * (t + 2.0));
  const double sqrt_c = std::sqrt(c);

  DistanceGrad out{std::log1p(t + root) / sqrt_c, Vector::Zero(x.size()), Vector::Zero(y.size())};
  if (root == 0.0) return out;

  const double scale = 4.0 * c / (a * b) / (sqrt_c * root);
  out.d_x = scale * (diff + (c * u / a) * x);
  out.d_y = scale * (-diff + (c * u / b) * y);
  return out;
}

}  // namespace grad

}  // namespace hypml::geometry
