#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mdepth/image.hpp"
#include "mdepth/objective.hpp"
#include "mdepth/rng.hpp"
#include "mdepth/scene_state.hpp"

namespace mdepth {

/// A loss term or parameter update went non-finite.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class IntrinsicsMode { fixed, learned };
enum class OffsetMode { fixed, randomized };

struct LearningRates {
  double disparity = 1e-2;
  double pose = 1e-3;
  double intrinsics = 1e-3;
};

struct OptimizerConfig {
  int iterations = 2000;
  LearningRates learning_rates;
  int pyramid_levels = 1;
  std::vector<int> offsets{-1, 1};
  LossConfig loss;
  IntrinsicsMode intrinsics_mode = IntrinsicsMode::fixed;
  bool forward_motion_constraint = false;
  bool optimize_depth = true;
  bool optimize_pose = true;
  double warmup_fraction = 0.05;
  double decay_fraction = 1.0 / 3.0;  // final share of iterations run at decay_factor * lr
  double decay_factor = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Gradient entries smaller than this are rounding noise and count as zero.
  double gradient_floor = 1e-12;
  /// Reject a step whose loss exceeds every loss of the preceding `window`
  /// iterations: restore the last accepted parameters and moments and retry at
  /// half the step, recovering 2x per accepted step. 0 disables.
  int window = 50;
  DepthRange range;
  std::uint64_t seed = 0;

  void validate() const;
};

struct OptimizeResult {
  SceneState state;
  /// One report per iteration, taken before its update. A rejected iteration
  /// repeats the last accepted report.
  std::vector<LossReport> trace;
};

/// Fixed mode returns {-1, +1}. Randomized mode draws one negative and one
/// positive offset uniformly from [lo, hi] (magnitudes, 1 <= lo <= hi).
std::vector<int> sample_support_offsets(Rng& rng, OffsetMode mode, int lo = 1, int hi = 3);

/// Adam on the total loss. `init` defaults to SceneState::initial; in fixed
/// intrinsics mode its raw intrinsics are never touched.
OptimizeResult optimize(const ImageBuffer& target, const std::vector<ImageBuffer>& supports,
                        const OptimizerConfig& config,
                        const std::optional<SceneState>& init = std::nullopt);

/// Runs `optimize` on a 2x box pyramid from coarsest to finest level, carrying
/// poses and realized intrinsics and upsampling logits bilinearly. Iterations
/// are split evenly, the remainder going to the finest level. The trace
/// concatenates all levels.
OptimizeResult coarse_to_fine(const ImageBuffer& target, const std::vector<ImageBuffer>& supports,
                              const OptimizerConfig& config,
                              const std::optional<SceneState>& init = std::nullopt);

/// 2x2 box average; an odd trailing row or column is dropped.
ImageBuffer downsample2(const ImageBuffer& img);
/// Intrinsics for downsample2 of an image with these intrinsics.
Intrinsics downsample2(const Intrinsics& k);
/// Bilinear resampling of a per-pixel field to a new extent (pixel centers aligned).
Grid<double> resize_bilinear(const Grid<double>& field, int height, int width);

}  // namespace mdepth
