#include "mdepth/camera.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace mdepth {

void Intrinsics::validate() const {
  std::ostringstream err;
  if (width < 1 || height < 1) {
    err << "intrinsics: image size must be >= 1, got " << width << "x" << height;
  } else if (!(std::isfinite(fx) && fx > 0.0) || !(std::isfinite(fy) && fy > 0.0)) {
    err << "intrinsics: focal lengths must be positive, got fx=" << fx << " fy=" << fy;
  } else if (!(cx >= 0.0 && cx <= width) || !(cy >= 0.0 && cy <= height)) {
    err << "intrinsics: principal point (" << cx << ", " << cy << ") outside image plane "
        << width << "x" << height;
  } else {
    return;
  }
  throw std::invalid_argument(err.str());
}

Eigen::Matrix3d Intrinsics::matrix() const {
  Eigen::Matrix3d k;
  k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return k;
}

Eigen::Matrix3d Intrinsics::inverse_matrix() const {
  Eigen::Matrix3d k;
  k << 1.0 / fx, 0.0, -cx / fx, 0.0, 1.0 / fy, -cy / fy, 0.0, 0.0, 1.0;
  return k;
}

Intrinsics make_intrinsics(double fx, double fy, double cx, double cy, int width, int height) {
  Intrinsics k{fx, fy, cx, cy, width, height};
  k.validate();
  return k;
}

PixelGrid::PixelGrid(int height, int width) : height_(height), width_(width) {
  if (height < 1 || width < 1) {
    throw std::invalid_argument("pixel grid: dimensions must be >= 1");
  }
  u_.resize(static_cast<std::size_t>(width));
  v_.resize(static_cast<std::size_t>(height));
  for (int c = 0; c < width; ++c) u_[c] = c + 0.5;
  for (int r = 0; r < height; ++r) v_[r] = r + 0.5;
}

PixelGrid make_pixel_grid(int height, int width) { return PixelGrid(height, width); }

}  // namespace mdepth
