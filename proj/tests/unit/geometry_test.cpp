#include "hypml/error.hpp"
#include "hypml/geometry.hpp"

#include "../support/oracles.hpp"
#include "../support/test_utils.hpp"

#include <gtest/gtest.h>

#include <random>

namespace {

using namespace hypml;
using namespace hypml::geometry;
using testutil::random_in_ball;
using testutil::random_vector;

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

TEST(Curvature, RejectsNonPositive) {
  EXPECT_THROW(Curvature(0.0), Error);
  EXPECT_THROW(Curvature(-1.0), Error);
  EXPECT_THROW(Curvature(std::nan("")), Error);
  EXPECT_DOUBLE_EQ(Curvature(0.25).radius(), 2.0);
}

TEST(BallPoint, ClampsSmallOvershootAndRejectsLargeOnes) {
  const Curvature c(1.0);
  const BallPoint near(vec({1.0005, 0.0}), c);
  EXPECT_NEAR(near.coords().norm(), 1.0 - kBoundaryEps, 1e-15);
  EXPECT_THROW(BallPoint(vec({1.01, 0.0}), c), Error);
  EXPECT_THROW(BallPoint(vec({std::nan(""), 0.0}), c), Error);
}

TEST(ConformalFactor, ClosedForm) {
  EXPECT_DOUBLE_EQ(conformal_factor(Vector::Zero(5), Curvature(1.0)), 2.0);
  EXPECT_NEAR(conformal_factor(vec({0.5, 0.0}), Curvature(1.0)), 2.6666666666666666667, 1e-15);
  EXPECT_NEAR(conformal_factor(vec({0.3, 0.4}), Curvature(0.1)), 2.0512820512820512821, 1e-15);
  EXPECT_THROW(conformal_factor(vec({1.0, 0.0}), Curvature(1.0)), Error);
}

TEST(MobiusAdd, IdentityInverseAndReference) {
  const Curvature c1(1.0);
  const BallPoint y(vec({0.3, -0.2}), c1);
  EXPECT_TRUE(mobius_add(BallPoint::origin(2, c1), y).coords().isApprox(y.coords(), 1e-15));

  const BallPoint x(vec({0.4, 0.0}), c1);
  const BallPoint minus_x(vec({-0.4, 0.0}), c1);
  EXPECT_LE(mobius_add(x, minus_x).coords().norm(), 1e-15);

  // mpmath (40 digits) reference of the gyrovector sum.
  const Curvature c(0.1);
  const Vector sum = mobius_add(BallPoint(vec({0.1, 0.2}), c), BallPoint(vec({0.3, -0.1}), c)).coords();
  EXPECT_NEAR(sum(0), 0.39888229130282920014, 1e-14);
  EXPECT_NEAR(sum(1), 0.10268948655256723716, 1e-14);
}

TEST(MobiusAdd, RejectsMismatchedSpaces) {
  EXPECT_THROW(mobius_add(BallPoint::origin(2, Curvature(1.0)), BallPoint::origin(3, Curvature(1.0))), Error);
  EXPECT_THROW(mobius_add(BallPoint::origin(2, Curvature(1.0)), BallPoint::origin(2, Curvature(0.5))), Error);
}

TEST(MobiusAdd, RandomLeftIdentityAndInverse) {
  std::mt19937_64 gen(11);
  for (double cval : {0.1, 1.0, 3.0}) {
    const Curvature c(cval);
    for (int trial = 0; trial < 1000; ++trial) {
      const Vector xv = random_in_ball(4, c.radius(), gen);
      const BallPoint x(xv, c);
      const BallPoint neg(-xv, c);
      EXPECT_LE(mobius_add(x, neg).coords().norm(), 1e-12);
      const Vector sum = mobius_add(BallPoint::origin(4, c), x).coords();
      EXPECT_LE((sum - xv).norm(), 1e-12 * std::max(1.0, xv.norm()));
    }
  }
}

TEST(MobiusAdd, MatchesIndependentTranscription) {
  std::mt19937_64 gen(5);
  const Curvature c(0.7);
  for (int trial = 0; trial < 200; ++trial) {
    const Vector x = random_in_ball(3, c.radius(), gen);
    const Vector y = random_in_ball(3, c.radius(), gen);
    const auto expected = oracle::mobius_add(testutil::to_std(x), testutil::to_std(y), 0.7);
    const Vector got = raw::mobius_add(x, y, 0.7);
    for (Index i = 0; i < 3; ++i) EXPECT_NEAR(got(i), expected[static_cast<std::size_t>(i)], 1e-12);
  }
}

TEST(DistHyp, Examples) {
  const BallPoint p(vec({0.2, 0.7}), Curvature(0.5));
  EXPECT_EQ(dist_hyp(p, p), 0.0);
  EXPECT_NEAR(dist_hyp(BallPoint::origin(2, Curvature(1.0)), BallPoint(vec({0.5, 0.0}), Curvature(1.0))),
              1.0986122886681096914, 1e-14);
  const Curvature tiny(1e-8);
  const double d = dist_hyp(BallPoint(vec({0.3, 0.0}), tiny), BallPoint(vec({-0.1, 0.0}), tiny));
  EXPECT_NEAR(d, 0.8, 0.8 * 1e-5);
}

TEST(DistHyp, MetricProperties) {
  std::mt19937_64 gen(3);
  const Curvature c(1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const BallPoint x(random_in_ball(3, c.radius(), gen), c);
    const BallPoint y(random_in_ball(3, c.radius(), gen), c);
    const BallPoint z(random_in_ball(3, c.radius(), gen), c);
    const double xy = dist_hyp(x, y);
    EXPECT_LE(std::abs(xy - dist_hyp(y, x)), 1e-10);
    EXPECT_LE(dist_hyp(x, z), xy + dist_hyp(y, z) + 1e-9);
    EXPECT_GE(xy, 0.0);
  }
}

TEST(DistHyp, EuclideanLimit) {
  std::mt19937_64 gen(8);
  for (double cval : {1e-6, 1e-8}) {
    const Curvature c(cval);
    for (int trial = 0; trial < 1000; ++trial) {
      const Vector x = random_in_ball(3, 1.0, gen, 1.0);
      const Vector y = random_in_ball(3, 1.0, gen, 1.0);
      const double euclid = 2.0 * (x - y).norm();
      EXPECT_LE(std::abs(dist_hyp(BallPoint(x, c), BallPoint(y, c)) - euclid) / euclid, 10.0 * cval);
    }
  }
}

TEST(DistHyp, ArtanhGuardKeepsBoundaryPointsFinite) {
  const Curvature c(1.0);
  const BallPoint a = clip_ball(vec({5.0, 0.0}), c);
  const BallPoint b = clip_ball(vec({-5.0, 0.0}), c);
  EXPECT_TRUE(std::isfinite(dist_hyp(a, b)));
}

TEST(ExpMapZero, Examples) {
  EXPECT_EQ(exp_map_zero(TangentVector(Vector::Zero(3)), Curvature(1.0)).coords().norm(), 0.0);
  const Vector e1 = exp_map_zero(TangentVector(vec({1.0, 0.0})), Curvature(1.0)).coords();
  EXPECT_NEAR(e1(0), 0.76159415595576488812, 1e-15);
  EXPECT_EQ(e1(1), 0.0);
  const Vector e2 = exp_map_zero(TangentVector(vec({3.0, 4.0})), Curvature(0.1)).coords();
  EXPECT_NEAR(e2.norm(), 2.9054360729485363333, 1e-13);
  EXPECT_NEAR(e2(0) / e2.norm(), 0.6, 1e-15);
  EXPECT_NEAR(e2(1) / e2.norm(), 0.8, 1e-15);
}

TEST(ExpMapZero, StaysInsideBallAndIsMonotone) {
  const Curvature c(0.3);
  double previous = 0.0;
  for (double len : {1e-9, 1e-3, 0.5, 1.0, 3.0, 10.0, 100.0, 1e3, 1e6}) {
    const Vector v = len * vec({0.6, 0.0, 0.8});
    const Vector z = exp_map_zero(TangentVector(v), c).coords();
    EXPECT_LT(c.value() * z.squaredNorm(), 1.0);
    EXPECT_GE(z.norm(), previous);
    previous = z.norm();
  }
}

TEST(ExpMapZero, DistanceFromOriginIsTwiceTangentNorm) {
  std::mt19937_64 gen(21);
  const Curvature c(0.5);
  for (int trial = 0; trial < 200; ++trial) {
    const Vector v = random_vector(4, gen, 0.8);
    const BallPoint z = exp_map_zero(TangentVector(v), c);
    const double d = dist_hyp(BallPoint::origin(4, c), z);
    EXPECT_LE(std::abs(d - 2.0 * v.norm()), 1e-9 * 2.0 * v.norm());
  }
}

TEST(ExpMap, GeneralBaseReducesToZeroBaseAtOrigin) {
  const Curvature c(0.4);
  const TangentVector v(vec({0.3, -1.2, 0.5}));
  const Vector at_origin = exp_map(BallPoint::origin(3, c), v).coords();
  EXPECT_TRUE(at_origin.isApprox(exp_map_zero(v, c).coords(), 1e-14));
}

TEST(ExpMap, GeodesicDistanceFromBaseIsLambdaScaledNorm) {
  // d(x, exp_x(v)) = lambda_x |v| along the geodesic through x.
  const Curvature c(1.0);
  const BallPoint base(vec({0.2, -0.3}), c);
  const TangentVector v(vec({0.05, 0.1}));
  const double expected = conformal_factor(base.coords(), c) * v.coords().norm();
  EXPECT_NEAR(dist_hyp(base, exp_map(base, v)), expected, 1e-12);
}

TEST(ClipBall, Examples) {
  EXPECT_TRUE(clip_ball(vec({0.1, 0.1}), Curvature(0.1)).coords().isApprox(vec({0.1, 0.1})));
  const Vector clipped = clip_ball(vec({5.0, 0.0}), Curvature(1.0)).coords();
  EXPECT_NEAR(clipped(0), 0.99999, 1e-15);
  EXPECT_EQ(clipped(1), 0.0);
  EXPECT_TRUE(clip_ball(vec({3.0, 4.0}), Curvature(0.01)).coords().isApprox(vec({3.0, 4.0})));
}

TEST(ClipFeatures, Examples) {
  EXPECT_EQ(clip_features(vec({1.0, 1.0}), 2.3), vec({1.0, 1.0}));
  EXPECT_TRUE(clip_features(vec({3.0, 4.0}), 2.5).isApprox(vec({1.5, 2.0}), 1e-15));
  EXPECT_EQ(clip_features(Vector::Zero(2), 1.0), Vector::Zero(2));
}

TEST(ClipFeatures, IdempotentBitForBit) {
  std::mt19937_64 gen(2);
  for (int trial = 0; trial < 500; ++trial) {
    const Vector x = random_vector(6, gen, 3.0);
    const Vector once = clip_features(x, 2.3);
    const Vector twice = clip_features(once, 2.3);
    for (Index i = 0; i < x.size(); ++i) EXPECT_EQ(once(i), twice(i));
    EXPECT_LE(once.norm(), 2.3 * (1.0 + 1e-15));
  }
}

// Vector-Jacobian products against central differences of the forward maps.
TEST(PipelineGradients, MatchFiniteDifferences) {
  std::mt19937_64 gen(17);
  const double c = 0.7;
  for (int trial = 0; trial < 50; ++trial) {
    const Vector x = random_vector(5, gen, trial % 2 == 0 ? 0.6 : 3.0);
    const Vector w = random_vector(5, gen);
    auto check = [&](auto forward, auto backward) {
      const Vector analytic = backward(x, w);
      Vector numeric(x.size());
      for (Index i = 0; i < x.size(); ++i) {
        Vector up = x, down = x;
        up(i) += 1e-6;
        down(i) -= 1e-6;
        numeric(i) = (forward(up).dot(w) - forward(down).dot(w)) / 2e-6;
      }
      EXPECT_LE((analytic - numeric).cwiseAbs().maxCoeff(), 1e-7 * std::max(1.0, numeric.norm()));
    };
    check([&](const Vector& v) { return clip_features(v, 1.5); },
          [&](const Vector& v, const Vector& g) { return grad::clip_features(v, 1.5, g); });
    check([&](const Vector& v) { return raw::exp_map_zero(v, c); },
          [&](const Vector& v, const Vector& g) { return grad::exp_map_zero(v, c, g); });
  }
  // Near-zero tangent vectors exercise the series branch.
  const Vector tiny = 1e-4 * random_vector(3, gen);
  const Vector g = random_vector(3, gen);
  Vector numeric(3);
  for (Index i = 0; i < 3; ++i) {
    Vector up = tiny, down = tiny;
    up(i) += 1e-7;
    down(i) -= 1e-7;
    numeric(i) = (raw::exp_map_zero(up, c).dot(g) - raw::exp_map_zero(down, c).dot(g)) / 2e-7;
  }
  EXPECT_LE((grad::exp_map_zero(tiny, c, g) - numeric).norm(), 1e-8);
}

TEST(PipelineGradients, HyperbolicDistanceGradient) {
  std::mt19937_64 gen(23);
  const double c = 0.3;
  const double radius = 1.0 / std::sqrt(c);
  for (int trial = 0; trial < 100; ++trial) {
    const Vector x = random_in_ball(4, radius, gen, 0.9);
    const Vector y = random_in_ball(4, radius, gen, 0.9);
    const auto g = grad::dist_hyp(x, y, c);
    EXPECT_NEAR(g.value, raw::dist_hyp(x, y, c), 1e-10 * std::max(1.0, g.value));
    for (Index i = 0; i < 4; ++i) {
      Vector up = x, down = x;
      up(i) += 1e-6;
      down(i) -= 1e-6;
      const double num = (raw::dist_hyp(up, y, c) - raw::dist_hyp(down, y, c)) / 2e-6;
      EXPECT_NEAR(g.d_x(i), num, 1e-6 * std::max(1.0, std::abs(num)));
    }
  }
}

}  // namespace
