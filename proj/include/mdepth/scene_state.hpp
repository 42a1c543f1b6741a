#pragma once

#include <array>
#include <vector>

#include "mdepth/camera.hpp"
#include "mdepth/grid.hpp"
#include "mdepth/image.hpp"
#include "mdepth/pose.hpp"

namespace mdepth {

/// Depth interval spanned by sigmoid disparity: d -> 0 gives `far`, d -> 1
/// gives `near`.
struct DepthRange {
  double near = 0.1;
  double far = 100.0;

  void validate() const;
  /// depth = 1 / (a d + b)
  double a() const { return 1.0 / near - 1.0 / far; }
  double b() const { return 1.0 / far; }
};

double disparity_to_depth(double disparity, const DepthRange& range);
/// d depth / d disparity (always negative).
double disparity_to_depth_derivative(double disparity, const DepthRange& range);
/// Inverse of disparity_to_depth for depth inside the range.
double depth_to_disparity(double depth, const DepthRange& range);

double sigmoid(double x);
double logit(double p);
double softplus(double x);
double inverse_softplus(double y);

/// Raw, unconstrained intrinsics (fx_raw, fy_raw, cx_raw, cy_raw):
/// fx = softplus(fx_raw) W, fy = softplus(fy_raw) H, cx = sigmoid(cx_raw) W,
/// cy = sigmoid(cy_raw) H.
using RawIntrinsics = std::array<double, 4>;

Intrinsics intrinsics_from_raw(const RawIntrinsics& raw, int width, int height);
/// d(fx, fy, cx, cy) / d raw; the map is diagonal.
std::array<double, 4> intrinsics_from_raw_derivative(const RawIntrinsics& raw, int width, int height);
RawIntrinsics intrinsics_to_raw(const Intrinsics& k);

/// Everything the direct optimizer solves for.
struct SceneState {
  Grid<double> logits;            // sigmoid(logit) = disparity
  std::vector<int> offsets;       // support frame offset k per pose
  std::vector<PoseSE3> poses;     // target -> support, one per offset
  RawIntrinsics intrinsics_raw{};
  DepthRange range;

  int height() const { return logits.height(); }
  int width() const { return logits.width(); }

  DisparityField disparity() const;
  Grid<double> depth_values() const;
  DepthMap depth() const { return DepthMap(depth_values()); }
  Intrinsics intrinsics() const { return intrinsics_from_raw(intrinsics_raw, width(), height()); }

  /// Scales every depth and translation by s (rotation and logits fixed).
  /// The photometric loss is invariant under this gauge.
  SceneState gauge_scaled(double s) const;

  /// Constant disparity 0.3, identity poses, fx = W, fy = H, centered principal point.
  static SceneState initial(int height, int width, std::vector<int> offsets,
                            const DepthRange& range = {});
};

/// Logits are kept inside this band so sigmoid never rounds to 0 or 1.
inline constexpr double kLogitLimit = 30.0;

}  // namespace mdepth
