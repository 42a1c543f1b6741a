#pragma once

#include <vector>

#include <Eigen/Core>

namespace mdepth {

/// Pinhole intrinsics in pixels for an image of `width` x `height`.
///
/// Continuous image coordinates follow the pixel-center convention: pixel
/// (row r, col c) is centered at (c + 0.5, r + 0.5), so the image plane spans
/// [0, width] x [0, height] and the image center is (width/2, height/2).
struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.5;
  double cy = 0.5;
  int width = 1;
  int height = 1;

  /// Throws std::invalid_argument unless fx, fy > 0 and the principal point
  /// lies inside the image plane.
  void validate() const;

  Eigen::Matrix3d matrix() const;
  Eigen::Matrix3d inverse_matrix() const;

  bool operator==(const Intrinsics&) const = default;
};

/// Validated construction.
Intrinsics make_intrinsics(double fx, double fy, double cx, double cy, int width, int height);

/// Homogeneous pixel-center coordinates (u, v, 1) for every pixel.
class PixelGrid {
 public:
  PixelGrid(int height, int width);

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return static_cast<std::size_t>(height_) * width_; }

  /// Coordinates of pixel (row, col): (col + 0.5, row + 0.5, 1).
  Eigen::Vector3d at(int row, int col) const { return {u_[col], v_[row], 1.0}; }
  double u(int col) const { return u_[col]; }
  double v(int row) const { return v_[row]; }

 private:
  int height_;
  int width_;
  std::vector<double> u_;
  std::vector<double> v_;
};

PixelGrid make_pixel_grid(int height, int width);

}  // namespace mdepth
