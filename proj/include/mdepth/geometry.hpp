#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "mdepth/camera.hpp"
#include "mdepth/grid.hpp"
#include "mdepth/image.hpp"
#include "mdepth/pose.hpp"

namespace mdepth {

/// Points at or below this camera-frame depth are treated as behind the camera.
inline constexpr double kMinProjectionDepth = 1e-6;

struct PointField {
  int height = 0;
  int width = 0;
  std::vector<Eigen::Vector3d> points;  // row-major, target camera frame
  BoolMask valid;
};

/// X = D(p) * K^-1 p for every pixel. Pixels with invalid depth are flagged
/// invalid and their point is left at zero.
PointField backproject(const PixelGrid& grid, const DepthMap& depth, const Intrinsics& k);

/// Pinhole projection of a camera-frame point. Requires z > 0.
Eigen::Vector2d project(const Eigen::Vector3d& point, const Intrinsics& k);

/// Partials of a reprojected pixel (u', v').
struct PixelJacobian {
  Eigen::Vector2d d_depth = Eigen::Vector2d::Zero();
  Eigen::Matrix<double, 2, 6> d_pose = Eigen::Matrix<double, 2, 6>::Zero();  // (r, t)
  Eigen::Matrix<double, 2, 4> d_intrinsics = Eigen::Matrix<double, 2, 4>::Zero();  // (fx, fy, cx, cy)
};

/// Per-pose quantities shared by every pixel of one reprojection.
class Warp {
 public:
  Warp(const PoseSE3& pose, const Intrinsics& k);

  struct Result {
    Eigen::Vector2d pixel;
    double depth;   // z in the support frame
    bool in_front;  // depth > kMinProjectionDepth
  };

  /// Reprojects target pixel (u, v) with depth d into the support view. The
  /// pixel is formed as p + f * (x'/z' - x/z) so an identity pose returns p
  /// bit-exactly; the value is the standard K T D K^-1 p pinhole pipeline.
  Result apply(double u, double v, double depth, PixelJacobian* jacobian = nullptr) const;

  const Intrinsics& intrinsics() const { return k_; }

 private:
  Intrinsics k_;
  Eigen::Matrix3d rotation_;
  Eigen::Vector3d translation_;
  Eigen::Matrix3d right_jacobian_;
};

struct FlowField {
  int height = 0;
  int width = 0;
  Grid<double> u;  // reprojected coordinates, possibly out of bounds
  Grid<double> v;
  BoolMask valid;  // in front of the camera and inside [0,W] x [0,H] of the support
};

struct JacobianBundle {
  int height = 0;
  int width = 0;
  std::vector<PixelJacobian> pixels;  // row-major
};

/// p' = K T D(p) K^-1 p for every target pixel. `support_width/height`
/// default to the depth map extent.
FlowField reproject(const DepthMap& depth, const PoseSE3& pose, const Intrinsics& k,
                    JacobianBundle* jacobians = nullptr, std::optional<int> support_width = {},
                    std::optional<int> support_height = {});

/// Sampling cell for bilinear interpolation at continuous coordinates (u, v)
/// in the pixel-center convention.
struct BilinearCell {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;
  double ax = 0.0;  // weight of column x1
  double ay = 0.0;  // weight of row y1
};

/// Cell containing (u, v), or nullopt when any of the four taps would fall
/// outside a width x height image.
std::optional<BilinearCell> locate_cell(double u, double v, int width, int height);

/// Cell with fixed taps (x0, y0); weights may leave [0,1], in which case the
/// interpolant extends linearly.
BilinearCell cell_with_origin(int x0, int y0, double u, double v, int width, int height);

double bilinear_value(const ImageBuffer& img, const BilinearCell& cell, int channel);

/// (d value / du, d value / dv).
Eigen::Vector2d bilinear_gradient(const ImageBuffer& img, const BilinearCell& cell, int channel);

struct SampledImage {
  ImageBuffer image;  // zero where the mask is false
  BoolMask mask;
  /// Per (pixel, channel) derivatives with respect to the sample coordinates,
  /// zero where masked.
  std::vector<double> d_du;
  std::vector<double> d_dv;
};

/// img<flow>. Samples outside the support are masked and set to zero.
SampledImage bilinear_sample(const ImageBuffer& img, const FlowField& flow, bool with_gradient = false);

/// Support frame synthesized into the target view.
SampledImage synthesize_support(const DepthMap& depth, const ImageBuffer& support,
                                const PoseSE3& pose, const Intrinsics& k);

}  // namespace mdepth
