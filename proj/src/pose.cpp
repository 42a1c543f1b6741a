#include "mdepth/pose.hpp"

#include <cmath>

#include <Eigen/Geometry>

namespace mdepth {
namespace {
constexpr double kSmallAngle = 1e-6;
}

Eigen::Matrix3d skew(const Eigen::Vector3d& w) {
  Eigen::Matrix3d s;
  s << 0.0, -w.z(), w.y(), w.z(), 0.0, -w.x(), -w.y(), w.x(), 0.0;
  return s;
}

Eigen::Matrix3d axis_angle_to_matrix(const Eigen::Vector3d& r) {
  const double theta = r.norm();
  const Eigen::Matrix3d k = skew(r);
  const Eigen::Matrix3d identity = Eigen::Matrix3d::Identity();
  if (theta < kSmallAngle) {
    return identity + k + 0.5 * k * k;
  }
  const double a = std::sin(theta) / theta;
  const double b = (1.0 - std::cos(theta)) / (theta * theta);
  return identity + a * k + b * k * k;
}

Eigen::Vector3d matrix_to_axis_angle(const Eigen::Matrix3d& rotation) {
  const Eigen::AngleAxisd aa(rotation);
  return aa.angle() * aa.axis();
}

Eigen::Matrix3d so3_right_jacobian(const Eigen::Vector3d& r) {
  const double theta = r.norm();
  const Eigen::Matrix3d k = skew(r);
  const Eigen::Matrix3d identity = Eigen::Matrix3d::Identity();
  if (theta < kSmallAngle) {
    return identity - 0.5 * k + (1.0 / 6.0) * k * k;
  }
  const double t2 = theta * theta;
  const double a = (1.0 - std::cos(theta)) / t2;
  const double b = (theta - std::sin(theta)) / (t2 * theta);
  return identity - a * k + b * k * k;
}

PoseSE3 PoseSE3::from_params(const Vector6d& params) {
  PoseSE3 p;
  p.rotation = params.head<3>();
  p.translation = params.tail<3>();
  return p;
}

Vector6d PoseSE3::params() const {
  Vector6d out;
  out << rotation, translation;
  return out;
}

Eigen::Matrix4d PoseSE3::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation_matrix();
  m.topRightCorner<3, 1>() = translation;
  return m;
}

PoseSE3 pose_compose(const PoseSE3& a, const PoseSE3& b) {
  const Eigen::Matrix3d ra = a.rotation_matrix();
  PoseSE3 out;
  out.rotation = matrix_to_axis_angle(ra * b.rotation_matrix());
  out.translation = ra * b.translation + a.translation;
  return out;
}

PoseSE3 pose_invert(const PoseSE3& pose) {
  PoseSE3 out;
  out.rotation = -pose.rotation;
  out.translation = -(pose.rotation_matrix().transpose() * pose.translation);
  return out;
}

}  // namespace mdepth
