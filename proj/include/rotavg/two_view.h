#pragma once

#include <vector>

#include <Eigen/Core>

#include "rotavg/so3.h"
#include "rotavg/view_graph.h"

namespace rotavg {

// Upper-triangular pinhole calibration matrix (pixels).
class CameraIntrinsics {
 public:
  CameraIntrinsics() = default;
  // Throws InvalidArgumentError unless K is upper triangular with
  // K(2,2) = 1 and positive focal lengths.
  explicit CameraIntrinsics(const Eigen::Matrix3d& K);

  const Eigen::Matrix3d& K() const { return K_; }
  Eigen::Matrix3d Inverse() const;

 private:
  Eigen::Matrix3d K_ = Eigen::Matrix3d::Identity();
};

// A pixel correspondence p (view i) <-> p_prime (view j).
struct Correspondence {
  Eigen::Vector2d p = Eigen::Vector2d::Zero();
  Eigen::Vector2d p_prime = Eigen::Vector2d::Zero();
};

// Relative pose of view j with respect to view i. Camera coordinates are
// related by X_j = rotation * (X_i + s * translation) for some scale s > 0, so
// that p'^T F p = 0 with F = K_j^-T R [t]x K_i^-1.
//
// With world-to-camera absolute rotations this pose rotation equals
// R_j R_i^T, the transpose of the view-graph edge measurement R_i R_j^T.
struct TwoViewGeometry {
  Rotation rotation;
  Eigen::Vector3d translation = Eigen::Vector3d::UnitX();  // unit norm
  CameraIntrinsics intrinsics_i;
  CameraIntrinsics intrinsics_j;
  std::vector<Correspondence> inliers;
};

enum class CovarianceMode {
  kRotationOnly,
  kMarginalizeTranslation,
};

struct CovarianceResult {
  Eigen::Matrix3d covariance;  // radians^2, right perturbation R * Exp(d)
  Eigen::Matrix3d whitener;    // lower triangular, D D^T = covariance^-1
  double trace = 0.0;
  double fro_norm = 0.0;  // Frobenius norm of covariance^-1
};

enum class UncertaintyScalar {
  kTrace,
  kFroNormInv,
};

Eigen::Matrix3d FundamentalFromPose(const TwoViewGeometry& geometry);

// Signed Sampson distance of a correspondence with respect to F.
// Throws NumericalError when the gradient norm is below 1e-15.
double SampsonDistance(const Eigen::Matrix3d& F, const Correspondence& c);

// Sampson residuals of all inliers at the geometry's pose.
Eigen::VectorXd SampsonResiduals(const TwoViewGeometry& geometry);

// N x 3 Jacobian of the inlier Sampson residuals with respect to a right
// perturbation R * Exp(d) at d = 0. Needs at least 3 inliers.
Eigen::MatrixX3d RotationJacobian(const TwoViewGeometry& geometry);

// Tangent basis (b1, b2) of the unit sphere at t used by PoseJacobian:
// t(beta) = normalize(t + beta_1 b1 + beta_2 b2).
Eigen::Matrix<double, 3, 2> TranslationTangentBasis(const Eigen::Vector3d& t);

// N x 5 Jacobian: three rotation columns followed by the two translation
// tangent columns.
Eigen::Matrix<double, Eigen::Dynamic, 5> PoseJacobian(
    const TwoViewGeometry& geometry);

// Propagates keypoint noise (residual_sigma pixels) to the covariance of the
// rotation: residual_sigma^2 (J^T J)^-1, or the rotation block of the joint
// rotation/translation inverse in kMarginalizeTranslation mode.
//
// Throws DataError for fewer than 3 inliers and NumericalError when J^T J is
// singular or has a condition number above 1e12.
CovarianceResult CovarianceOfRotation(
    const TwoViewGeometry& geometry,
    double residual_sigma = 1.0,
    CovarianceMode mode = CovarianceMode::kRotationOnly);

// Packs an existing covariance into a CovarianceResult.
CovarianceResult MakeCovarianceResult(const Eigen::Matrix3d& covariance);

double ScalarUncertainty(const CovarianceResult& result,
                         UncertaintyScalar kind);

// One estimated two-view geometry between graph nodes i and j.
struct PairRecord {
  ViewId i = 0;
  ViewId j = 0;
  TwoViewGeometry geometry;
};

struct WeighOptions {
  double residual_sigma = 1.0;
  CovarianceMode mode = CovarianceMode::kRotationOnly;
  int num_threads = 1;
};

struct WeighReport {
  int num_pairs = 0;
  // Pairs whose covariance was degenerate; their edges carry no covariance.
  std::vector<EdgeKey> degenerate;
};

// Converts pairs to view-graph edges (i, j, R^T) with the propagated
// covariance and the match count as inlier count. With a base graph, edges
// already present keep their rotation and only get covariance and inlier
// count; new pairs are added with their endpoints. Results do not depend on
// num_threads. Throws DataError on duplicate pairs.
ViewGraph WeighPairs(const std::vector<PairRecord>& pairs,
                     const WeighOptions& options,
                     const ViewGraph* base = nullptr,
                     WeighReport* report = nullptr);

}  // namespace rotavg
