#include "rotavg/two_view.h"

#include <algorithm>
#include <array>
#include <optional>
#include <set>
#include <cmath>
#include <exception>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "rotavg/errors.h"
#include "rotavg/view_graph.h"
#include "parallel.h"

namespace rotavg {
namespace {

constexpr double kMaxConditionNumber = 1e12;
constexpr int kMinInliers = 3;

// Derivative of the Sampson residual of c along dF = G.
struct SampsonTerms {
  Eigen::Vector3d x;
  Eigen::Vector3d y;
  Eigen::Vector3d Fx;
  Eigen::Vector3d Fty;
  double numerator;
  double denominator_sq;

  SampsonTerms(const Eigen::Matrix3d& F, const Correspondence& c)
      : x(c.p.x(), c.p.y(), 1.0),
        y(c.p_prime.x(), c.p_prime.y(), 1.0),
        Fx(F * x),
        Fty(F.transpose() * y),
        numerator(y.dot(Fx)),
        denominator_sq(Fx(0) * Fx(0) + Fx(1) * Fx(1) + Fty(0) * Fty(0) +
                       Fty(1) * Fty(1)) {}

  double Directional(const Eigen::Matrix3d& G) const {
    const Eigen::Vector3d Gx = G * x;
    const Eigen::Vector3d Gty = G.transpose() * y;
    const double d_numerator = y.dot(Gx);
    const double d_denominator_sq =
        2.0 * (Fx(0) * Gx(0) + Fx(1) * Gx(1) + Fty(0) * Gty(0) +
               Fty(1) * Gty(1));
    const double denominator = std::sqrt(denominator_sq);
    return d_numerator / denominator -
           numerator * d_denominator_sq /
               (2.0 * denominator_sq * denominator);
  }
};

void CheckDenominator(double denominator_sq) {
  if (!(std::sqrt(denominator_sq) >= 1e-15)) {
    throw NumericalError("degenerate correspondence: Sampson denominator is "
                         "below 1e-15");
  }
}

// Directional derivatives of F: rotation columns dF/dd_k followed by any
// extra directions supplied by the caller.
template <int kCols>
Eigen::Matrix<double, Eigen::Dynamic, kCols> StackedJacobian(
    const TwoViewGeometry& geometry,
    const std::array<Eigen::Matrix3d, kCols>& directions) {
  const int n = static_cast<int>(geometry.inliers.size());
  if (n < kMinInliers) {
    std::ostringstream msg;
    msg << "insufficient data: " << n << " inliers, at least " << kMinInliers
        << " are required";
    throw DataError(msg.str());
  }
  const Eigen::Matrix3d F = FundamentalFromPose(geometry);
  Eigen::Matrix<double, Eigen::Dynamic, kCols> jacobian(n, kCols);
  for (int row = 0; row < n; ++row) {
    const SampsonTerms terms(F, geometry.inliers[row]);
    CheckDenominator(terms.denominator_sq);
    for (int col = 0; col < kCols; ++col) {
      jacobian(row, col) = terms.Directional(directions[col]);
    }
  }
  return jacobian;
}

void CheckUnitTranslation(const TwoViewGeometry& geometry) {
  const double norm = geometry.translation.norm();
  if (!std::isfinite(norm) || std::abs(norm - 1.0) > 1e-10) {
    throw InvalidArgumentError("two-view translation must have unit norm");
  }
}

template <int kDim>
Eigen::Matrix<double, kDim, kDim> InvertInformation(
    const Eigen::Matrix<double, kDim, kDim>& information) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, kDim, kDim>> eig(
      information);
  const double smallest = eig.eigenvalues()(0);
  const double largest = eig.eigenvalues()(kDim - 1);
  if (eig.info() != Eigen::Success || !(smallest > 0.0) ||
      largest / smallest > kMaxConditionNumber) {
    std::ostringstream msg;
    msg << "degenerate covariance: J^T J eigenvalues in [" << smallest << ", "
        << largest << "]";
    throw NumericalError(msg.str());
  }
  return eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal() *
         eig.eigenvectors().transpose();
}

}  // namespace

CameraIntrinsics::CameraIntrinsics(const Eigen::Matrix3d& K) : K_(K) {
  const bool upper = K(1, 0) == 0.0 && K(2, 0) == 0.0 && K(2, 1) == 0.0;
  if (!K.allFinite() || !upper || K(2, 2) != 1.0 || !(K(0, 0) > 0.0) ||
      !(K(1, 1) > 0.0)) {
    throw InvalidArgumentError(
        "invalid intrinsics: K must be upper triangular with K(2,2) = 1 and "
        "positive focal lengths");
  }
}

Eigen::Matrix3d CameraIntrinsics::Inverse() const {
  return K_.triangularView<Eigen::Upper>().solve(Eigen::Matrix3d::Identity());
}

Eigen::Matrix3d FundamentalFromPose(const TwoViewGeometry& geometry) {
  return geometry.intrinsics_j.Inverse().transpose() *
         geometry.rotation.matrix() * Hat(geometry.translation) *
         geometry.intrinsics_i.Inverse();
}

double SampsonDistance(const Eigen::Matrix3d& F, const Correspondence& c) {
  const SampsonTerms terms(F, c);
  CheckDenominator(terms.denominator_sq);
  return terms.numerator / std::sqrt(terms.denominator_sq);
}

Eigen::VectorXd SampsonResiduals(const TwoViewGeometry& geometry) {
  const Eigen::Matrix3d F = FundamentalFromPose(geometry);
  Eigen::VectorXd residuals(geometry.inliers.size());
  for (std::size_t n = 0; n < geometry.inliers.size(); ++n) {
    residuals(static_cast<Eigen::Index>(n)) =
        SampsonDistance(F, geometry.inliers[n]);
  }
  return residuals;
}

Eigen::MatrixX3d RotationJacobian(const TwoViewGeometry& geometry) {
  CheckUnitTranslation(geometry);
  const Eigen::Matrix3d left =
      geometry.intrinsics_j.Inverse().transpose() * geometry.rotation.matrix();
  const Eigen::Matrix3d right =
      Hat(geometry.translation) * geometry.intrinsics_i.Inverse();
  std::array<Eigen::Matrix3d, 3> directions;
  for (int k = 0; k < 3; ++k) {
    directions[k] = left * Hat(Eigen::Vector3d::Unit(k)) * right;
  }
  return StackedJacobian<3>(geometry, directions);
}

Eigen::Matrix<double, 3, 2> TranslationTangentBasis(const Eigen::Vector3d& t) {
  Eigen::Index axis;
  t.cwiseAbs().minCoeff(&axis);
  Eigen::Matrix<double, 3, 2> basis;
  basis.col(0) = t.cross(Eigen::Vector3d::Unit(axis)).normalized();
  basis.col(1) = t.cross(basis.col(0)).normalized();
  return basis;
}

Eigen::Matrix<double, Eigen::Dynamic, 5> PoseJacobian(
    const TwoViewGeometry& geometry) {
  CheckUnitTranslation(geometry);
  const Eigen::Matrix3d Kj_inv_t = geometry.intrinsics_j.Inverse().transpose();
  const Eigen::Matrix3d Ki_inv = geometry.intrinsics_i.Inverse();
  const Eigen::Matrix3d R = geometry.rotation.matrix();
  const Eigen::Matrix3d left = Kj_inv_t * R;
  const Eigen::Matrix3d right = Hat(geometry.translation) * Ki_inv;
  const Eigen::Matrix<double, 3, 2> basis =
      TranslationTangentBasis(geometry.translation);

  std::array<Eigen::Matrix3d, 5> directions;
  for (int k = 0; k < 3; ++k) {
    directions[k] = left * Hat(Eigen::Vector3d::Unit(k)) * right;
  }
  for (int k = 0; k < 2; ++k) {
    directions[3 + k] = left * Hat(basis.col(k)) * Ki_inv;
  }
  return StackedJacobian<5>(geometry, directions);
}

CovarianceResult CovarianceOfRotation(const TwoViewGeometry& geometry,
                                      double residual_sigma,
                                      CovarianceMode mode) {
  if (!(residual_sigma > 0.0) || !std::isfinite(residual_sigma)) {
    throw InvalidArgumentError("residual_sigma must be positive");
  }
  CheckUnitTranslation(geometry);
  Eigen::Matrix3d covariance;
  if (mode == CovarianceMode::kRotationOnly) {
    const Eigen::MatrixX3d J = RotationJacobian(geometry);
    const Eigen::Matrix3d information = J.transpose() * J;
    covariance = InvertInformation<3>(information);
  } else {
    const Eigen::Matrix<double, Eigen::Dynamic, 5> J = PoseJacobian(geometry);
    const Eigen::Matrix<double, 5, 5> information = J.transpose() * J;
    covariance = InvertInformation<5>(information).topLeftCorner<3, 3>();
  }
  covariance *= residual_sigma * residual_sigma;
  covariance = 0.5 * (covariance + covariance.transpose()).eval();
  try {
    return MakeCovarianceResult(covariance);
  } catch (const DataError& e) {
    throw NumericalError(std::string("degenerate covariance: ") + e.what());
  }
}

CovarianceResult MakeCovarianceResult(const Eigen::Matrix3d& covariance) {
  CovarianceResult result;
  result.covariance = covariance;
  result.whitener = WhitenerFromCovariance(covariance);
  result.trace = covariance.trace();
  result.fro_norm = (result.whitener * result.whitener.transpose()).norm();
  return result;
}

double ScalarUncertainty(const CovarianceResult& result,
                         UncertaintyScalar kind) {
  switch (kind) {
    case UncertaintyScalar::kTrace:
      return result.trace;
    case UncertaintyScalar::kFroNormInv:
      return result.fro_norm;
  }
  return result.trace;
}

ViewGraph WeighPairs(const std::vector<PairRecord>& pairs,
                     const WeighOptions& options, const ViewGraph* base,
                     WeighReport* report) {
  std::set<EdgeKey> seen;
  for (const PairRecord& pair : pairs) {
    if (!seen.insert(MakeEdgeKey(pair.i, pair.j)).second) {
      std::ostringstream msg;
      msg << "duplicate pair (" << pair.i << ", " << pair.j << ")";
      throw DataError(msg.str());
    }
  }

  std::vector<std::optional<Eigen::Matrix3d>> covariances(pairs.size());
  std::vector<std::exception_ptr> failures(pairs.size());
  internal::ParallelFor(
      pairs.size(), options.num_threads, [&](std::size_t k) {
        try {
          covariances[k] = CovarianceOfRotation(
              pairs[k].geometry, options.residual_sigma, options.mode).covariance;
        } catch (const NumericalError&) {
          covariances[k].reset();
        } catch (...) {
          failures[k] = std::current_exception();
        }
      });
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    if (!failures[k]) continue;
    try {
      std::rethrow_exception(failures[k]);
    } catch (const std::exception& e) {
      std::ostringstream msg;
      msg << "pairs[" << k << "] (" << pairs[k].i << ", " << pairs[k].j
          << "): " << e.what();
      throw DataError(msg.str());
    }
  }

  ViewGraph graph = base != nullptr ? *base : ViewGraph();
  WeighReport local;
  local.num_pairs = static_cast<int>(pairs.size());
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const PairRecord& pair = pairs[k];
    const EdgeKey key = MakeEdgeKey(pair.i, pair.j);
    if (!covariances[k]) local.degenerate.push_back(key);
    const auto found = graph.edges().find(key);
    if (found != graph.edges().end()) {
      EdgeMeasurement& edge = graph.MutableEdge(key);
      edge.inlier_count =
          static_cast<std::int64_t>(pair.geometry.inliers.size());
      if (covariances[k]) {
        // On a reversed stored edge the residual is R d, so C maps to
        // R C R^T.
        const Eigen::Matrix3d cov =
            edge.i == pair.i ? *covariances[k]
                             : Eigen::Matrix3d(pair.geometry.rotation.matrix() *
                                               *covariances[k] *
                                               pair.geometry.rotation.matrix()
                                                   .transpose());
        edge.SetCovariance(cov);
      } else {
        edge.covariance.reset();
        edge.whitener.reset();
      }
      continue;
    }
    for (const ViewId id : {pair.i, pair.j}) {
      if (!graph.HasNode(id)) graph.AddNode({id, std::nullopt});
    }
    EdgeMeasurement edge;
    edge.i = pair.i;
    edge.j = pair.j;
    edge.rotation = pair.geometry.rotation.Inverse();
    edge.inlier_count = static_cast<std::int64_t>(pair.geometry.inliers.size());
    edge.covariance = covariances[k];
    graph.AddEdge(std::move(edge));
  }
  std::sort(local.degenerate.begin(), local.degenerate.end());
  if (report != nullptr) *report = local;
  return graph;
}

}  // namespace rotavg
