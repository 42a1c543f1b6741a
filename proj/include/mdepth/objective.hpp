#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "mdepth/camera.hpp"
#include "mdepth/grid.hpp"
#include "mdepth/image.hpp"
#include "mdepth/losses.hpp"
#include "mdepth/pose.hpp"
#include "mdepth/scene_state.hpp"

namespace mdepth {

struct LossConfig {
  double ssim_weight = kDefaultSsimWeight;
  double smoothness_weight = 1e-3;
  bool automask = true;
};

struct LossReport {
  double total = 0.0;
  double reconstruction = 0.0;
  double smoothness = 0.0;
  double smoothness_weight = 0.0;
  double automask_coverage = 0.0;  // kept pixels / all pixels
  std::size_t kept_pixels = 0;
  std::vector<std::size_t> argmin_histogram;  // kept pixels won by each support
  bool all_masked = false;                    // no pixel contributed to reconstruction
  std::size_t nonfinite_gradients = 0;        // gradient entries zeroed by the NaN guard
};

struct SceneGradients {
  Grid<double> logits;
  std::vector<Vector6d> poses;
  std::array<double, 4> intrinsics_raw{};
};

/// The discrete choices the loss makes at one parameter point: sample
/// validity and bilinear cells, per-pixel loss validity, automask, argmin
/// support, and the signs of every absolute value. Evaluating with a frozen
/// set makes the loss smooth in the parameters, which is what the analytic
/// gradient differentiates; gradient checks compare against it.
struct ActiveSet {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<BoolMask> sample_valid;              // per support
  std::vector<std::vector<std::int32_t>> cell_x0;  // per support, per pixel
  std::vector<std::vector<std::int32_t>> cell_y0;
  std::vector<BoolMask> loss_valid;  // per support
  BoolMask kept;
  Grid<int> argmin;
  std::vector<std::int8_t> l1_signs;  // per pixel and channel, for the argmin support
  std::vector<std::int8_t> smooth_x_signs;
  std::vector<std::int8_t> smooth_y_signs;
};

/// Explicit geometry: per-pixel depth, one pose per support, intrinsics.
struct GeometryGradients {
  Grid<double> depth;
  std::vector<Vector6d> poses;
  Eigen::Vector4d intrinsics = Eigen::Vector4d::Zero();  // (fx, fy, cx, cy)
};

/// Minimum reconstruction loss with automasking for explicit geometry (no
/// smoothness term). Used for gauge checks and synthetic-scene consistency.
LossReport reconstruction_loss(const Grid<double>& depth, std::span<const PoseSE3> poses,
                               const Intrinsics& k, const ImageBuffer& target,
                               std::span<const ImageBuffer> supports, const LossConfig& config = {},
                               GeometryGradients* grads = nullptr);

/// Reconstruction + smoothness_weight * smoothness for a SceneState, with
/// gradients for logits, every pose parameter and the raw intrinsics.
///
/// Reconstruction averages min-over-supports photometric loss over pixels
/// that are kept by the automask and valid in at least one support. When no
/// pixel survives, the term is 0 and `all_masked` is set.
LossReport total_loss(const SceneState& state, const ImageBuffer& target,
                      std::span<const ImageBuffer> supports, const LossConfig& config = {},
                      SceneGradients* grads = nullptr, const ActiveSet* frozen = nullptr,
                      ActiveSet* capture = nullptr);

}  // namespace mdepth
