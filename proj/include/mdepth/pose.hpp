#pragma once

#include <array>

#include <Eigen/Core>

namespace mdepth {

using Vector6d = Eigen::Matrix<double, 6, 1>;

/// Rodrigues map. Below an angle of 1e-6 rad a second-order Taylor expansion
/// is used so the map and its derivative stay smooth through zero.
Eigen::Matrix3d axis_angle_to_matrix(const Eigen::Vector3d& r);

/// Inverse of axis_angle_to_matrix, angle in [0, pi].
Eigen::Vector3d matrix_to_axis_angle(const Eigen::Matrix3d& rotation);

/// Right Jacobian of SO(3): R(r + dr) ~= R(r) * Exp(J_r(r) dr).
Eigen::Matrix3d so3_right_jacobian(const Eigen::Vector3d& r);

/// Skew-symmetric cross-product matrix [w]x.
Eigen::Matrix3d skew(const Eigen::Vector3d& w);

/// Rigid transform from the target camera frame to a support camera frame:
/// X_support = R(rotation) * X_target + translation.
struct PoseSE3 {
  Eigen::Vector3d rotation = Eigen::Vector3d::Zero();     // axis * angle, radians
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();  // scene units

  static PoseSE3 identity() { return {}; }
  /// Parameter order: (rx, ry, rz, tx, ty, tz).
  static PoseSE3 from_params(const Vector6d& params);
  Vector6d params() const;

  Eigen::Matrix3d rotation_matrix() const { return axis_angle_to_matrix(rotation); }
  Eigen::Matrix4d matrix() const;
  Eigen::Vector3d apply(const Eigen::Vector3d& point) const {
    return rotation_matrix() * point + translation;
  }
};

/// a after b: compose(a, b).matrix() == a.matrix() * b.matrix().
PoseSE3 pose_compose(const PoseSE3& a, const PoseSE3& b);
PoseSE3 pose_invert(const PoseSE3& pose);

}  // namespace mdepth
