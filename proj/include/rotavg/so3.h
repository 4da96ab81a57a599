#pragma once

#include <array>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace rotavg {

// Axis-angle vector in radians; the tangent space of SO(3).
using TangentVector = Eigen::Vector3d;

// An element of SO(3), stored as a unit quaternion with w >= 0.
//
// q and -q describe the same rotation, so the sign is canonicalized on
// construction (w >= 0, ties at w == 0 broken on the first non-zero
// imaginary component). This makes equality of the stored coefficients
// equivalent to equality of rotations.
class Rotation {
 public:
  Rotation() = default;

  // Normalizes the input. Throws InvalidArgumentError on a non-finite or
  // zero quaternion.
  static Rotation FromQuaternion(double w, double x, double y, double z);
  static Rotation FromQuaternion(const Eigen::Quaterniond& q);
  // Requires an orthonormal matrix with det = +1 (tolerance 1e-6).
  static Rotation FromMatrix(const Eigen::Matrix3d& matrix);
  static Rotation Identity() { return Rotation(); }

  const Eigen::Quaterniond& quaternion() const { return q_; }
  std::array<double, 4> Wxyz() const { return {q_.w(), q_.x(), q_.y(), q_.z()}; }
  Eigen::Matrix3d matrix() const { return q_.toRotationMatrix(); }
  TangentVector AngleAxis() const;

  Rotation Inverse() const;
  Rotation operator*(const Rotation& other) const;
  Eigen::Vector3d operator*(const Eigen::Vector3d& point) const;

  bool operator==(const Rotation& other) const {
    return q_.coeffs() == other.q_.coeffs();
  }

 private:
  explicit Rotation(const Eigen::Quaterniond& q);

  Eigen::Quaterniond q_ = Eigen::Quaterniond::Identity();
};

Eigen::Matrix3d Hat(const Eigen::Vector3d& v);

// Rodrigues map. Throws InvalidArgumentError on non-finite input.
Rotation ExpSO3(const TangentVector& v);

// Inverse of ExpSO3 with the output norm in [0, pi].
TangentVector LogSO3(const Rotation& rotation);

// Angle of ra * rb^T in [0, pi].
double GeodesicAngle(const Rotation& ra, const Rotation& rb);

// Residual of a relative measurement rij against the pair (ri, rj) whose
// implied relative rotation is ri * rj^T:
//
//   Log(rij * (ri * rj^T)^T)
//
// It is invariant under (ri, rj) -> (ri * Q, rj * Q).
TangentVector RelativeResidual(const Rotation& ri,
                               const Rotation& rj,
                               const Rotation& rij);

// Right Jacobian of SO(3) and its inverse:
//   Exp(phi + d) ~= Exp(phi) * Exp(Jr(phi) d)
//   Log(Exp(phi) * Exp(u)) ~= phi + Jr^-1(phi) u
Eigen::Matrix3d RightJacobian(const TangentVector& phi);
Eigen::Matrix3d RightJacobianInverse(const TangentVector& phi);

}  // namespace rotavg
