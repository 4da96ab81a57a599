#include "rotavg/so3.h"

#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "oracles.h"
#include "rotavg/errors.h"

namespace rotavg {
namespace {

Rotation RandomRotation(std::mt19937_64& rng) {
  return Rotation::FromMatrix(oracle::RandomRotation(rng));
}

TEST(Rotation, QuaternionIsCanonical) {
  const Rotation a = Rotation::FromQuaternion(-0.5, 0.5, 0.5, 0.5);
  const Rotation b = Rotation::FromQuaternion(0.5, -0.5, -0.5, -0.5);
  EXPECT_EQ(a, b);
  EXPECT_GE(a.quaternion().w(), 0.0);
  const Rotation c = Rotation::FromQuaternion(0.0, -1.0, 0.0, 0.0);
  EXPECT_EQ(c, Rotation::FromQuaternion(0.0, 1.0, 0.0, 0.0));
}

TEST(Rotation, RejectsInvalidQuaternions) {
  EXPECT_THROW(Rotation::FromQuaternion(0, 0, 0, 0), InvalidArgumentError);
  EXPECT_THROW(Rotation::FromQuaternion(NAN, 0, 0, 1), InvalidArgumentError);
}

TEST(Rotation, MatrixIsOrthonormal) {
  std::mt19937_64 rng(1);
  for (int n = 0; n < 200; ++n) {
    const Eigen::Matrix3d R = RandomRotation(rng).matrix();
    EXPECT_LT((R.transpose() * R - Eigen::Matrix3d::Identity()).norm(), 1e-10);
    EXPECT_NEAR(R.determinant(), 1.0, 1e-10);
  }
}

TEST(Rotation, NormStaysUnitUnderComposition) {
  std::mt19937_64 rng(2);
  Rotation r = RandomRotation(rng);
  for (int n = 0; n < 10000; ++n) r = r * RandomRotation(rng);
  EXPECT_NEAR(r.quaternion().norm(), 1.0, 1e-12);
}

TEST(Rotation, MatrixRoundTrip) {
  std::mt19937_64 rng(3);
  for (int n = 0; n < 100; ++n) {
    const Eigen::Matrix3d R = oracle::RandomRotation(rng);
    EXPECT_LT((Rotation::FromMatrix(R).matrix() - R).norm(), 1e-12);
  }
  Eigen::Matrix3d bad = Eigen::Matrix3d::Identity();
  bad(0, 0) = -1.0;
  EXPECT_THROW(Rotation::FromMatrix(bad), InvalidArgumentError);
}

TEST(ExpSO3, ZeroIsIdentity) {
  EXPECT_EQ(ExpSO3(Eigen::Vector3d::Zero()), Rotation::Identity());
}

TEST(ExpSO3, QuarterTurnAboutX) {
  Eigen::Matrix3d expected;
  expected << 1, 0, 0, 0, 0, -1, 0, 1, 0;
  const Eigen::Vector3d v(M_PI / 2, 0, 0);
  EXPECT_LT((ExpSO3(v).matrix() - expected).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((oracle::RodriguesExp(v) - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ExpSO3, MatchesRodriguesOracle) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> angle(0.0, M_PI);
  for (int n = 0; n < 500; ++n) {
    const Eigen::Vector3d v = angle(rng) * oracle::RandomUnitVector(rng);
    EXPECT_LT((ExpSO3(v).matrix() - oracle::RodriguesExp(v)).norm(), 1e-13);
  }
}

TEST(ExpSO3, TinyAngleMatchesFirstOrder) {
  std::mt19937_64 rng(5);
  for (int n = 0; n < 50; ++n) {
    const Eigen::Vector3d v = 1e-10 * oracle::RandomUnitVector(rng);
    const Eigen::Matrix3d first_order =
        Eigen::Matrix3d::Identity() + oracle::Skew(v);
    EXPECT_LT((ExpSO3(v).matrix() - first_order).cwiseAbs().maxCoeff(), 1e-18);
  }
}

TEST(ExpSO3, RejectsNonFinite) {
  EXPECT_THROW(ExpSO3(Eigen::Vector3d(NAN, 0, 0)), InvalidArgumentError);
  EXPECT_THROW(
      ExpSO3(Eigen::Vector3d(0, std::numeric_limits<double>::infinity(), 0)),
      InvalidArgumentError);
}

TEST(LogSO3, Identity) {
  EXPECT_EQ(LogSO3(Rotation::Identity()), Eigen::Vector3d::Zero());
}

TEST(LogSO3, RoundTripSpecificVector) {
  const Eigen::Vector3d v(0.3, -0.2, 0.1);
  EXPECT_LT((LogSO3(ExpSO3(v)) - v).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(LogSO3, RoundTripBelowPi) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> angle(0.0, M_PI - 1e-6);
  for (int n = 0; n < 2000; ++n) {
    const Eigen::Vector3d v = angle(rng) * oracle::RandomUnitVector(rng);
    EXPECT_LT((LogSO3(ExpSO3(v)) - v).norm(), 1e-9);
  }
}

TEST(LogSO3, HalfTurnAboutZ) {
  Eigen::Matrix3d Rz;
  Rz << -1, 0, 0, 0, -1, 0, 0, 0, 1;
  const Rotation r = Rotation::FromMatrix(Rz);
  const Eigen::Vector3d v = LogSO3(r);
  EXPECT_NEAR(v.norm(), M_PI, 1e-12);
  EXPECT_NEAR(std::abs(v.z()), M_PI, 1e-12);
  EXPECT_LT((oracle::RodriguesExp(v) - Rz).norm(), 1e-9);
}

TEST(LogSO3, HalfTurnsAboutRandomAxes) {
  std::mt19937_64 rng(7);
  for (int n = 0; n < 200; ++n) {
    const Eigen::Vector3d axis = oracle::RandomUnitVector(rng);
    const Eigen::Matrix3d R = oracle::RodriguesExp(M_PI * axis);
    const Eigen::Vector3d v = LogSO3(Rotation::FromMatrix(R));
    EXPECT_LE(v.norm(), M_PI + 1e-15);
    EXPECT_NEAR(v.norm(), M_PI, 1e-7);
    EXPECT_LT((oracle::RodriguesExp(v) - R).norm(), 1e-9);
  }
}

TEST(LogSO3, MatchesMatrixLogOracle) {
  std::mt19937_64 rng(8);
  for (int n = 0; n < 500; ++n) {
    const Eigen::Matrix3d R = oracle::RandomRotation(rng);
    const Eigen::Vector3d expected = oracle::MatrixLog(R);
    if (M_PI - expected.norm() < 1e-3) continue;
    EXPECT_LT((LogSO3(Rotation::FromMatrix(R)) - expected).norm(), 1e-10);
  }
}

TEST(GeodesicAngle, BasicValues) {
  std::mt19937_64 rng(9);
  const Rotation r = RandomRotation(rng);
  EXPECT_NEAR(GeodesicAngle(r, r), 0.0, 1e-15);
  for (double theta : {0.1, 1.0, 2.0, 3.0}) {
    EXPECT_NEAR(GeodesicAngle(Rotation::Identity(),
                              ExpSO3(Eigen::Vector3d(theta, 0, 0))),
                theta, 1e-12);
  }
}

TEST(GeodesicAngle, SymmetricAndBiInvariant) {
  std::mt19937_64 rng(10);
  for (int n = 0; n < 500; ++n) {
    const Rotation r = RandomRotation(rng);
    const Rotation s = RandomRotation(rng);
    const Rotation q = RandomRotation(rng);
    const double d = GeodesicAngle(r, s);
    EXPECT_NEAR(d, GeodesicAngle(s, r), 1e-12);
    EXPECT_NEAR(d, GeodesicAngle(q * r, q * s), 1e-10);
    EXPECT_NEAR(d, GeodesicAngle(r * q, s * q), 1e-10);
    EXPECT_GE(d, 0.0);
    EXPECT_LE(d, M_PI);
  }
}

TEST(GeodesicAngle, TriangleInequality) {
  std::mt19937_64 rng(11);
  for (int n = 0; n < 1000; ++n) {
    const Rotation a = RandomRotation(rng);
    const Rotation b = RandomRotation(rng);
    const Rotation c = RandomRotation(rng);
    EXPECT_LE(GeodesicAngle(a, c),
              GeodesicAngle(a, b) + GeodesicAngle(b, c) + 1e-9);
  }
}

TEST(RelativeResidual, Definition) {
  EXPECT_EQ(RelativeResidual(Rotation::Identity(), Rotation::Identity(),
                             Rotation::Identity()),
            Eigen::Vector3d::Zero());
  const double theta = 0.4;
  const Rotation ri = ExpSO3(Eigen::Vector3d(theta, 0, 0));
  EXPECT_NEAR(
      RelativeResidual(ri, Rotation::Identity(), Rotation::Identity()).norm(),
      theta, 1e-14);
}

TEST(RelativeResidual, NormEqualsGeodesicAngle) {
  std::mt19937_64 rng(12);
  for (int n = 0; n < 500; ++n) {
    const Rotation ri = RandomRotation(rng);
    const Rotation rj = RandomRotation(rng);
    const Rotation rij = RandomRotation(rng);
    EXPECT_NEAR(RelativeResidual(ri, rj, rij).norm(),
                GeodesicAngle(rij, ri * rj.Inverse()), 1e-12);
  }
}

TEST(RelativeResidual, MatchesMatrixOracle) {
  std::mt19937_64 rng(13);
  for (int n = 0; n < 300; ++n) {
    const Eigen::Matrix3d Ri = oracle::RandomRotation(rng);
    const Eigen::Matrix3d Rj = oracle::RandomRotation(rng);
    const Eigen::Matrix3d Rij =
        oracle::RodriguesExp(0.5 * oracle::RandomUnitVector(rng)) * Ri *
        Rj.transpose();
    const Eigen::Vector3d expected =
        oracle::MatrixLog(Rij * (Ri * Rj.transpose()).transpose());
    const Eigen::Vector3d actual =
        RelativeResidual(Rotation::FromMatrix(Ri), Rotation::FromMatrix(Rj),
                         Rotation::FromMatrix(Rij));
    EXPECT_LT((actual - expected).norm(), 1e-10);
  }
}

TEST(RelativeResidual, ZeroIffConsistent) {
  std::mt19937_64 rng(14);
  const Rotation ri = RandomRotation(rng);
  const Rotation rj = RandomRotation(rng);
  EXPECT_LT(RelativeResidual(ri, rj, ri * rj.Inverse()).norm(), 1e-15);
  EXPECT_GT(RelativeResidual(ri, rj, ri).norm(), 1e-3);
}

TEST(RelativeResidual, InvariantUnderRightMultiplication) {
  std::mt19937_64 rng(15);
  for (int n = 0; n < 300; ++n) {
    const Rotation ri = RandomRotation(rng);
    const Rotation rj = RandomRotation(rng);
    const Rotation rij = RandomRotation(rng);
    const Rotation q = RandomRotation(rng);
    const Eigen::Vector3d r0 = RelativeResidual(ri, rj, rij);
    const Eigen::Vector3d r1 = RelativeResidual(ri * q, rj * q, rij);
    EXPECT_LT((r0 - r1).norm(), 1e-10);
  }
}

TEST(RightJacobian, MatchesFiniteDifferences) {
  std::mt19937_64 rng(16);
  std::uniform_real_distribution<double> angle(0.0, 3.0);
  for (int n = 0; n < 100; ++n) {
    const Eigen::Vector3d phi = angle(rng) * oracle::RandomUnitVector(rng);
    const Rotation base = ExpSO3(phi);
    // d/du Log(Exp(phi) Exp(u)) at u = 0.
    auto f = [&](const Eigen::VectorXd& u) -> Eigen::VectorXd {
      return LogSO3(base * ExpSO3(u));
    };
    const Eigen::MatrixXd fd =
        oracle::CentralDifferences(f, Eigen::VectorXd::Zero(3), 1e-6);
    EXPECT_LT((RightJacobianInverse(phi) - fd).norm(), 1e-7);
    EXPECT_LT((RightJacobian(phi) * RightJacobianInverse(phi) -
               Eigen::Matrix3d::Identity())
                  .norm(),
              1e-10);
  }
  EXPECT_LT((RightJacobianInverse(Eigen::Vector3d(1e-9, 0, 0)) -
             Eigen::Matrix3d::Identity())
                .norm(),
            1e-8);
}

}  // namespace
}  // namespace rotavg
