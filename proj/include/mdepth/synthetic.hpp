#pragma once

#include <cstdint>
#include <vector>

#include "mdepth/camera.hpp"
#include "mdepth/grid.hpp"
#include "mdepth/image.hpp"
#include "mdepth/pose.hpp"
#include "mdepth/scene_state.hpp"

namespace mdepth {

enum class SurfaceKind { fronto_parallel, slanted, step };
enum class MotionKind { lateral, forward, backward };

struct SyntheticSpec {
  SurfaceKind surface = SurfaceKind::fronto_parallel;
  MotionKind motion = MotionKind::lateral;
  int height = 32;
  int width = 48;
  int channels = 3;
  double focal = 100.0;  // fx = fy; principal point at the image center
  double depth = 5.0;    // plane depth; background depth of the step
  double near_depth = 2.5;  // step foreground
  int step_column = -1;     // first background column of the step; -1 = width / 2
  double depth_top = 5.0;   // slanted plane depth at the first row center
  double depth_bottom = 2.5;  // ... and at the last row center
  double baseline = 0.1;      // camera travel per frame offset
  std::vector<int> offsets{-1, 1};
  double min_period = 6.0;  // texture wavelengths in pixels
  double max_period = 16.0;
  /// Reject configurations whose frames are not exact bilinear warps of the
  /// target under the true geometry.
  bool strict = false;

  void validate() const;
};

struct SyntheticScene {
  SyntheticSpec spec;
  ImageBuffer target;
  std::vector<ImageBuffer> supports;  // one per offset
  std::vector<PoseSE3> poses;         // target -> support
  Intrinsics intrinsics;
  Grid<double> depth;  // true target depth
  /// Every support pixel sees the texture on the target's interpolation
  /// lattice, so warping with the true geometry reproduces the target up to
  /// rounding.
  bool exact = false;

  /// State holding the true geometry. Depths must lie inside `range`.
  SceneState ground_truth(const DepthRange& range = {}) const;
};

/// Renders a textured surface seen by a camera translating along x (lateral)
/// or z. Texture values are taken where each surface point projects in the
/// target view, interpolated linearly between lattice knots, so lateral
/// scenes whose per-row flows share a fractional part are exact.
SyntheticScene make_synthetic_scene(const SyntheticSpec& spec, std::uint64_t seed);

}  // namespace mdepth
