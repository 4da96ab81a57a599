#include "rotavg/so3.h"

#include <cmath>
#include <sstream>

#include "rotavg/errors.h"

namespace rotavg {
namespace {

// Below this angle exp/log switch to their Taylor expansions.
constexpr double kSmallAngle = 1e-8;

Eigen::Quaterniond Canonicalize(const Eigen::Quaterniond& q) {
  bool flip = q.w() < 0.0;
  if (q.w() == 0.0) {
    if (q.x() != 0.0) {
      flip = q.x() < 0.0;
    } else if (q.y() != 0.0) {
      flip = q.y() < 0.0;
    } else {
      flip = q.z() < 0.0;
    }
  }
  if (flip) {
    return Eigen::Quaterniond(-q.w(), -q.x(), -q.y(), -q.z());
  }
  return q;
}

}  // namespace

Rotation::Rotation(const Eigen::Quaterniond& q) {
  const double squared_norm = q.squaredNorm();
  if (!std::isfinite(squared_norm) || squared_norm == 0.0) {
    throw InvalidArgumentError("quaternion must be finite and non-zero");
  }
  // Already-unit inputs are kept bit-exact so that serialization round trips.
  Eigen::Quaterniond unit = q;
  if (std::abs(squared_norm - 1.0) > 4e-15) {
    unit.coeffs() /= std::sqrt(squared_norm);
  }
  q_ = Canonicalize(unit);
}

Rotation Rotation::FromQuaternion(double w, double x, double y, double z) {
  return Rotation(Eigen::Quaterniond(w, x, y, z));
}

Rotation Rotation::FromQuaternion(const Eigen::Quaterniond& q) {
  return Rotation(q);
}

Rotation Rotation::FromMatrix(const Eigen::Matrix3d& matrix) {
  if (!matrix.allFinite()) {
    throw InvalidArgumentError("rotation matrix must be finite");
  }
  const double orthogonality =
      (matrix.transpose() * matrix - Eigen::Matrix3d::Identity()).norm();
  if (orthogonality > 1e-6 || std::abs(matrix.determinant() - 1.0) > 1e-6) {
    std::ostringstream msg;
    msg << "matrix is not a rotation (|R^T R - I| = " << orthogonality
        << ", det = " << matrix.determinant() << ")";
    throw InvalidArgumentError(msg.str());
  }
  // Eigen picks the largest of trace / diagonal entries as the pivot, which
  // keeps the conversion stable at angles close to pi.
  return Rotation(Eigen::Quaterniond(matrix));
}

TangentVector Rotation::AngleAxis() const { return LogSO3(*this); }

Rotation Rotation::Inverse() const { return Rotation(q_.conjugate()); }

Rotation Rotation::operator*(const Rotation& other) const {
  return Rotation(q_ * other.q_);
}

Eigen::Vector3d Rotation::operator*(const Eigen::Vector3d& point) const {
  return q_ * point;
}

Eigen::Matrix3d Hat(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

Rotation ExpSO3(const TangentVector& v) {
  if (!v.allFinite()) {
    throw InvalidArgumentError("ExpSO3: tangent vector must be finite");
  }
  const double theta = v.norm();
  if (theta < kSmallAngle) {
    const Eigen::Vector3d half = 0.5 * v;
    return Rotation::FromQuaternion(
        1.0 - 0.125 * theta * theta, half.x(), half.y(), half.z());
  }
  const double half_theta = 0.5 * theta;
  const Eigen::Vector3d imag = (std::sin(half_theta) / theta) * v;
  return Rotation::FromQuaternion(
      std::cos(half_theta), imag.x(), imag.y(), imag.z());
}

TangentVector LogSO3(const Rotation& rotation) {
  const Eigen::Quaterniond& q = rotation.quaternion();
  const Eigen::Vector3d imag = q.vec();
  const double sin_half = imag.norm();
  const double w = q.w();  // >= 0 by canonicalization
  if (sin_half < kSmallAngle) {
    // 2 atan(n / w) / n = (2 / w) (1 - n^2 / (3 w^2) + ...)
    const double ratio = sin_half / w;
    return (2.0 / w) * (1.0 - ratio * ratio / 3.0) * imag;
  }
  const double theta = 2.0 * std::atan2(sin_half, w);
  return (theta / sin_half) * imag;
}

double GeodesicAngle(const Rotation& ra, const Rotation& rb) {
  return LogSO3(ra * rb.Inverse()).norm();
}

TangentVector RelativeResidual(const Rotation& ri,
                               const Rotation& rj,
                               const Rotation& rij) {
  return LogSO3(rij * rj * ri.Inverse());
}

Eigen::Matrix3d RightJacobian(const TangentVector& phi) {
  const double theta = phi.norm();
  const Eigen::Matrix3d hat = Hat(phi);
  if (theta < 1e-5) {
    return Eigen::Matrix3d::Identity() - 0.5 * hat + (1.0 / 6.0) * hat * hat;
  }
  const double theta2 = theta * theta;
  return Eigen::Matrix3d::Identity() -
         ((1.0 - std::cos(theta)) / theta2) * hat +
         ((theta - std::sin(theta)) / (theta2 * theta)) * hat * hat;
}

Eigen::Matrix3d RightJacobianInverse(const TangentVector& phi) {
  const double theta = phi.norm();
  const Eigen::Matrix3d hat = Hat(phi);
  double coeff;
  if (theta < 1e-5) {
    coeff = 1.0 / 12.0 + theta * theta / 720.0;
  } else {
    // 1/theta^2 - cot(theta/2) / (2 theta); finite at theta = pi.
    const double half = 0.5 * theta;
    coeff = 1.0 / (theta * theta) -
            std::cos(half) / (std::sin(half) * 2.0 * theta);
  }
  return Eigen::Matrix3d::Identity() + 0.5 * hat + coeff * hat * hat;
}

}  // namespace rotavg
