#include "rotavg/eval.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "rotavg/errors.h"

namespace rotavg {
namespace {

constexpr double kRadToDeg = 180.0 / M_PI;
constexpr int kMaxAlignIterations = 100;

void CheckErrors(const std::vector<double>& errors) {
  if (errors.empty()) {
    throw DataError("error list is empty");
  }
  for (const double e : errors) {
    if (!std::isfinite(e)) throw InvalidArgumentError("non-finite error value");
  }
}

// Rotation whose quaternion is the dominant eigenvector of sum q q^T.
Rotation ChordalMean(const std::vector<Rotation>& rotations) {
  Eigen::Matrix4d scatter = Eigen::Matrix4d::Zero();
  for (const Rotation& r : rotations) {
    const Eigen::Vector4d q = r.quaternion().coeffs();
    scatter += q * q.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(scatter);
  const Eigen::Vector4d top = eig.eigenvectors().col(3);  // (x, y, z, w)
  return Rotation::FromQuaternion(top(3), top(0), top(1), top(2));
}

}  // namespace

AlignmentResult AlignRotations(const std::map<ViewId, Rotation>& estimate,
                               const std::map<ViewId, Rotation>& ground_truth,
                               const LossSpec& loss) {
  std::vector<ViewId> ids;
  std::vector<Rotation> est_t;
  std::vector<Rotation> gt_t;
  std::vector<Rotation> candidates;  // est_i^T gt_i
  for (const auto& [id, est] : estimate) {
    const auto it = ground_truth.find(id);
    if (it == ground_truth.end()) continue;
    ids.push_back(id);
    est_t.push_back(est.Inverse());
    gt_t.push_back(it->second.Inverse());
    candidates.push_back(est.Inverse() * it->second);
  }
  if (ids.empty()) {
    throw DataError("estimate and ground truth share no view ids");
  }

  Rotation align = ChordalMean(candidates);
  for (int iter = 0; iter < kMaxAlignIterations; ++iter) {
    Eigen::Matrix3d normal = Eigen::Matrix3d::Zero();
    Eigen::Vector3d gradient = Eigen::Vector3d::Zero();
    for (std::size_t n = 0; n < ids.size(); ++n) {
      const Eigen::Vector3d r = RelativeResidual(est_t[n], gt_t[n], align);
      const double w = loss.Evaluate(r.squaredNorm()).weight;
      // A Exp(d) M^T = (A M^T) Exp(M d) with M = est^T gt.
      const Eigen::Matrix3d J =
          RightJacobianInverse(r) * candidates[n].matrix();
      normal += w * J.transpose() * J;
      gradient += w * J.transpose() * r;
    }
    Eigen::LDLT<Eigen::Matrix3d> ldlt(normal);
    if (ldlt.info() != Eigen::Success) break;
    const Eigen::Vector3d step = ldlt.solve(-gradient);
    if (!step.allFinite()) break;
    align = align * ExpSO3(step);
    if (step.norm() < 1e-14) break;
  }

  AlignmentResult result;
  result.r_align = align;
  int under_5 = 0;
  for (std::size_t n = 0; n < ids.size(); ++n) {
    const double error =
        kRadToDeg * GeodesicAngle(estimate.at(ids[n]) * align,
                                  ground_truth.at(ids[n]));
    result.per_view_errors.emplace(ids[n], error);
    if (error < 5.0) ++under_5;
  }
  result.inlier_fraction_under_5deg =
      static_cast<double>(under_5) / static_cast<double>(ids.size());
  return result;
}

double Auc(const std::vector<double>& errors_deg, double threshold_deg) {
  CheckErrors(errors_deg);
  if (!(threshold_deg > 0.0)) {
    throw InvalidArgumentError("AUC threshold must be positive");
  }
  double sum = 0.0;
  for (const double e : errors_deg) {
    sum += std::max(0.0, threshold_deg - e);
  }
  return 100.0 * sum /
         (threshold_deg * static_cast<double>(errors_deg.size()));
}

std::vector<std::pair<double, double>> EmpiricalCdf(
    const std::vector<double>& errors_deg) {
  CheckErrors(errors_deg);
  std::vector<double> sorted = errors_deg;
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  std::vector<std::pair<double, double>> cdf;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    if (k + 1 < sorted.size() && sorted[k + 1] == sorted[k]) continue;
    cdf.emplace_back(sorted[k], static_cast<double>(k + 1) / n);
  }
  return cdf;
}

void ExportCdf(const std::vector<double>& errors_deg, const std::string& path) {
  const auto cdf = EmpiricalCdf(errors_deg);
  std::ofstream out(path);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out << "error_deg,cdf\n" << std::setprecision(17);
  for (const auto& [value, fraction] : cdf) {
    out << value << ',' << fraction << '\n';
  }
  if (!out) throw DataError("failed writing '" + path + "'");
}

std::vector<double> ErrorValues(const std::map<ViewId, double>& errors) {
  std::vector<double> values;
  values.reserve(errors.size());
  for (const auto& [id, e] : errors) values.push_back(e);
  return values;
}

}  // namespace rotavg
