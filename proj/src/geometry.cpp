#include "mdepth/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mdepth {

PointField backproject(const PixelGrid& grid, const DepthMap& depth, const Intrinsics& k) {
  if (grid.height() != depth.height() || grid.width() != depth.width()) {
    throw std::invalid_argument("backproject: grid and depth shapes differ");
  }
  k.validate();
  PointField out;
  out.height = grid.height();
  out.width = grid.width();
  out.points.assign(grid.size(), Eigen::Vector3d::Zero());
  out.valid = depth.valid();
  for (int r = 0; r < grid.height(); ++r) {
    for (int c = 0; c < grid.width(); ++c) {
      if (!depth.valid(r, c)) continue;
      const double d = depth(r, c);
      const Eigen::Vector3d n((grid.u(c) - k.cx) / k.fx, (grid.v(r) - k.cy) / k.fy, 1.0);
      out.points[static_cast<std::size_t>(r) * grid.width() + c] = d * n;
    }
  }
  return out;
}

Eigen::Vector2d project(const Eigen::Vector3d& point, const Intrinsics& k) {
  if (!(point.z() > 0.0)) throw std::invalid_argument("project: point behind camera");
  return {k.fx * point.x() / point.z() + k.cx, k.fy * point.y() / point.z() + k.cy};
}

Warp::Warp(const PoseSE3& pose, const Intrinsics& k)
    : k_(k),
      rotation_(pose.rotation_matrix()),
      translation_(pose.translation),
      right_jacobian_(so3_right_jacobian(pose.rotation)) {}

Warp::Result Warp::apply(double u, double v, double depth, PixelJacobian* jacobian) const {
  const Eigen::Vector3d n((u - k_.cx) / k_.fx, (v - k_.cy) / k_.fy, 1.0);
  const Eigen::Vector3d p = depth * n;
  const Eigen::Vector3d q = rotation_ * p + translation_;

  Result res;
  res.depth = q.z();
  res.in_front = q.z() > kMinProjectionDepth;
  if (!res.in_front) {
    res.pixel = Eigen::Vector2d::Constant(std::numeric_limits<double>::quiet_NaN());
    return res;
  }
  const double xq = q.x() / q.z();
  const double yq = q.y() / q.z();
  res.pixel = {u + k_.fx * (xq - p.x() / p.z()), v + k_.fy * (yq - p.y() / p.z())};

  if (jacobian != nullptr) {
    const double inv_z = 1.0 / q.z();
    Eigen::Matrix<double, 2, 3> jproj;
    jproj << k_.fx * inv_z, 0.0, -k_.fx * xq * inv_z,  //
        0.0, k_.fy * inv_z, -k_.fy * yq * inv_z;
    const Eigen::Matrix<double, 2, 3> jr = jproj * rotation_;

    jacobian->d_depth = jr * n;
    jacobian->d_pose.leftCols<3>() = -jr * skew(p) * right_jacobian_;
    jacobian->d_pose.rightCols<3>() = jproj;

    // Intrinsics enter through K^-1 (backprojection) and K (projection).
    const double inv_fx = 1.0 / k_.fx;
    const double inv_fy = 1.0 / k_.fy;
    jacobian->d_intrinsics.col(0) = Eigen::Vector2d(xq, 0.0) - depth * n.x() * inv_fx * jr.col(0);
    jacobian->d_intrinsics.col(1) = Eigen::Vector2d(0.0, yq) - depth * n.y() * inv_fy * jr.col(1);
    jacobian->d_intrinsics.col(2) = Eigen::Vector2d(1.0, 0.0) - depth * inv_fx * jr.col(0);
    jacobian->d_intrinsics.col(3) = Eigen::Vector2d(0.0, 1.0) - depth * inv_fy * jr.col(1);
  }
  return res;
}

FlowField reproject(const DepthMap& depth, const PoseSE3& pose, const Intrinsics& k,
                    JacobianBundle* jacobians, std::optional<int> support_width,
                    std::optional<int> support_height) {
  k.validate();
  const int h = depth.height();
  const int w = depth.width();
  const double sw = support_width.value_or(w);
  const double sh = support_height.value_or(h);

  FlowField flow;
  flow.height = h;
  flow.width = w;
  flow.u = Grid<double>(h, w, 0.0);
  flow.v = Grid<double>(h, w, 0.0);
  flow.valid = BoolMask(h, w, 0);
  if (jacobians != nullptr) {
    jacobians->height = h;
    jacobians->width = w;
    jacobians->pixels.assign(static_cast<std::size_t>(h) * w, PixelJacobian{});
  }

  const Warp warp(pose, k);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * w + c;
      if (!depth.valid(r, c)) {
        flow.u[i] = flow.v[i] = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      PixelJacobian* jac = jacobians != nullptr ? &jacobians->pixels[i] : nullptr;
      const auto res = warp.apply(c + 0.5, r + 0.5, depth(r, c), jac);
      flow.u[i] = res.pixel.x();
      flow.v[i] = res.pixel.y();
      const bool inside = res.in_front && res.pixel.x() >= 0.0 && res.pixel.x() <= sw &&
                          res.pixel.y() >= 0.0 && res.pixel.y() <= sh;
      flow.valid[i] = inside ? 1 : 0;
    }
  }
  return flow;
}

namespace {

// Tap and weight along one axis for continuous index x in [0, n-1].
inline void axis_taps(double x, int n, int& i0, int& i1, double& a) {
  i0 = std::clamp(static_cast<int>(std::floor(x)), 0, std::max(n - 2, 0));
  i1 = std::min(i0 + 1, n - 1);
  a = x - i0;
}

}  // namespace

std::optional<BilinearCell> locate_cell(double u, double v, int width, int height) {
  const double x = u - 0.5;
  const double y = v - 0.5;
  if (!(x >= 0.0 && x <= width - 1 && y >= 0.0 && y <= height - 1)) return std::nullopt;
  BilinearCell cell;
  axis_taps(x, width, cell.x0, cell.x1, cell.ax);
  axis_taps(y, height, cell.y0, cell.y1, cell.ay);
  return cell;
}

BilinearCell cell_with_origin(int x0, int y0, double u, double v, int width, int height) {
  BilinearCell cell;
  cell.x0 = x0;
  cell.y0 = y0;
  cell.x1 = std::min(x0 + 1, width - 1);
  cell.y1 = std::min(y0 + 1, height - 1);
  cell.ax = (u - 0.5) - x0;
  cell.ay = (v - 0.5) - y0;
  return cell;
}

double bilinear_value(const ImageBuffer& img, const BilinearCell& cell, int channel) {
  const double i00 = img.at(cell.y0, cell.x0, channel);
  const double i10 = img.at(cell.y0, cell.x1, channel);
  const double i01 = img.at(cell.y1, cell.x0, channel);
  const double i11 = img.at(cell.y1, cell.x1, channel);
  const double top = i00 + cell.ax * (i10 - i00);
  const double bottom = i01 + cell.ax * (i11 - i01);
  return top + cell.ay * (bottom - top);
}

Eigen::Vector2d bilinear_gradient(const ImageBuffer& img, const BilinearCell& cell, int channel) {
  const double i00 = img.at(cell.y0, cell.x0, channel);
  const double i10 = img.at(cell.y0, cell.x1, channel);
  const double i01 = img.at(cell.y1, cell.x0, channel);
  const double i11 = img.at(cell.y1, cell.x1, channel);
  // Degenerate axes (single row/column) have zero extent and zero derivative.
  const double du = cell.x1 == cell.x0
                        ? 0.0
                        : (1.0 - cell.ay) * (i10 - i00) + cell.ay * (i11 - i01);
  const double dv = cell.y1 == cell.y0
                        ? 0.0
                        : (1.0 - cell.ax) * (i01 - i00) + cell.ax * (i11 - i10);
  return {du, dv};
}

SampledImage bilinear_sample(const ImageBuffer& img, const FlowField& flow, bool with_gradient) {
  if (flow.u.height() != flow.height || flow.u.width() != flow.width ||
      !flow.valid.same_shape(flow.u)) {
    throw std::invalid_argument("bilinear_sample: malformed flow field");
  }
  const int h = flow.height;
  const int w = flow.width;
  const int ch = img.channels();
  std::vector<double> out(static_cast<std::size_t>(h) * w * ch, 0.0);
  SampledImage res;
  res.mask = BoolMask(h, w, 0);
  if (with_gradient) {
    res.d_du.assign(out.size(), 0.0);
    res.d_dv.assign(out.size(), 0.0);
  }
  for (std::size_t i = 0; i < static_cast<std::size_t>(h) * w; ++i) {
    if (!flow.valid[i]) continue;
    const auto cell = locate_cell(flow.u[i], flow.v[i], img.width(), img.height());
    if (!cell) continue;
    res.mask[i] = 1;
    for (int c = 0; c < ch; ++c) {
      // Rounding can push a convex combination a few ulps outside [0,1].
      out[i * ch + c] = std::clamp(bilinear_value(img, *cell, c), 0.0, 1.0);
      if (with_gradient) {
        const auto g = bilinear_gradient(img, *cell, c);
        res.d_du[i * ch + c] = g.x();
        res.d_dv[i * ch + c] = g.y();
      }
    }
  }
  res.image = ImageBuffer(h, w, ch, std::move(out));
  return res;
}

SampledImage synthesize_support(const DepthMap& depth, const ImageBuffer& support,
                                const PoseSE3& pose, const Intrinsics& k) {
  if (!support.same_extent(depth.depth())) {
    throw std::invalid_argument("synthesize_support: support and depth shapes differ");
  }
  const FlowField flow = reproject(depth, pose, k, nullptr, support.width(), support.height());
  return bilinear_sample(support, flow);
}

}  // namespace mdepth
