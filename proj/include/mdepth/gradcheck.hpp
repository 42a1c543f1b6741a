#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "mdepth/image.hpp"
#include "mdepth/rng.hpp"
#include "mdepth/scene_state.hpp"

namespace mdepth {

inline constexpr std::array<const char*, 8> kGradcheckGroups = {
    "geometry.depth", "geometry.pose", "geometry.intrinsics", "bilinear",
    "loss.logits",    "loss.pose",     "loss.intrinsics",     "intrinsics_from_raw"};

struct GradcheckOptions {
  int scenes = 20;             // random loss scenes
  int geometry_configs = 100;  // random reprojection configurations
  int height = 16;
  int width = 24;
  int channels = 3;
  int supports = 2;
  double step = 1e-5;
  double loss_tolerance = 1e-3;
  double geometry_tolerance = 1e-4;
  double intrinsics_tolerance = 1e-5;
  std::uint64_t seed = 0;
  /// Test hook: scales the analytic gradient of the named group by 1.01.
  std::string corrupt;

  /// Throws std::invalid_argument on non-positive sizes or an unknown corrupt group.
  void validate() const;
};

/// Worst entry of one parameter group.
struct GroupResult {
  std::string group;
  double worst_relative_error = 0.0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::string where;
  std::size_t entries = 0;
  double tolerance = 0.0;
  bool passed() const { return worst_relative_error < tolerance; }
};

struct GradcheckReport {
  std::vector<GroupResult> groups;
  bool passed() const;
};

/// |a - n| / max(|a|, |n|, floor)
double relative_error(double analytic, double numeric, double floor);

/// Runs every finite-difference suite: reprojection Jacobians, bilinear
/// sampling, total-loss gradients for logits/poses/intrinsics, and the raw
/// intrinsics map. Central differences; the loss is evaluated on the active
/// set captured at the base point.
GradcheckReport run_gradcheck(const GradcheckOptions& options);

/// Worst total-loss relative error (all groups) for each step size, on the
/// same scenes.
std::vector<double> gradcheck_step_sweep(const GradcheckOptions& options,
                                         const std::vector<double>& steps);

/// Smooth random test image in [0.1, 0.9].
ImageBuffer random_smooth_image(Rng& rng, int height, int width, int channels);

/// Random but well-conditioned scene state for gradient checks.
SceneState random_scene_state(Rng& rng, int height, int width, int supports);

}  // namespace mdepth
