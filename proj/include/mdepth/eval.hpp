#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mdepth/camera.hpp"
#include "mdepth/grid.hpp"
#include "mdepth/image.hpp"

namespace mdepth {

/// Aligned disparities are clamped to at least this before inversion.
inline constexpr double kAlignEpsilon = 1e-6;

struct AlignmentResult {
  double scale = 1.0;
  double shift = 0.0;
  /// RMS of s * pred + t - 1 / gt over the fitted pixels.
  double residual = 0.0;
  /// Predictions or ground truth had no spread; scale is
  /// median(gt_disp) / median(pred), shift 0.
  bool median_fallback = false;
  std::size_t count = 0;
};

/// Least-squares scale and shift mapping predicted disparity onto 1 / gt
/// depth over pixels that are valid in `gt` and set in `mask`.
AlignmentResult align_lstsq(const Grid<double>& pred_disp, const DepthMap& gt,
                            const std::optional<BoolMask>& mask = std::nullopt);

struct AlignedDepth {
  DepthMap depth;
  std::size_t clamped = 0;  // pixels whose aligned disparity hit kAlignEpsilon
};

/// depth = 1 / max(s * pred + t, eps)
AlignedDepth aligned_depth(const Grid<double>& pred_disp, const AlignmentResult& alignment);

/// Scales `pred` by median(gt) / median(pred) over the common valid pixels.
DepthMap median_scale(const DepthMap& pred, const DepthMap& gt,
                      const std::optional<BoolMask>& mask = std::nullopt);

/// Mean |gt - pred| / gt in percent over pixels valid in both maps and the mask.
double abs_rel(const DepthMap& pred, const DepthMap& gt,
               const std::optional<BoolMask>& mask = std::nullopt);

/// Percentage of pixels with max(pred / gt, gt / pred) < threshold.
double delta_acc(const DepthMap& pred, const DepthMap& gt,
                 const std::optional<BoolMask>& mask = std::nullopt, double threshold = 1.25);

enum class NeighborSearch { automatic, brute_force, grid };
/// automatic switches from brute force to the voxel grid at this cloud size.
inline constexpr std::size_t kBruteForceLimit = 20000;

struct FScore {
  double precision = 0.0;  // percentages
  double recall = 0.0;
  double fscore = 0.0;
};

/// A point matches when some point of the other cloud is closer than `threshold`.
FScore fscore_clouds(const std::vector<Eigen::Vector3d>& pred, const std::vector<Eigen::Vector3d>& gt,
                     double threshold = 0.10, NeighborSearch search = NeighborSearch::automatic);

/// Backprojects both maps through `k` and scores the clouds.
FScore fscore(const DepthMap& pred, const DepthMap& gt, const Intrinsics& k, double threshold = 0.10,
              const std::optional<BoolMask>& mask = std::nullopt,
              NeighborSearch search = NeighborSearch::automatic);

enum class AlignMode { lstsq, median, none };

/// Per-dataset evaluation settings.
struct EvalConfig {
  AlignMode align = AlignMode::lstsq;
  double min_depth = 0.0;  // gt outside [min_depth, max_depth] is ignored
  double max_depth = std::numeric_limits<double>::infinity();
  double delta_threshold = 1.25;
  double fscore_threshold = 0.10;
  bool compute_fscore = true;

  void validate() const;
};

struct ImageMetrics {
  double abs_rel = 0.0;
  double delta = 0.0;
  std::optional<double> fscore;
  std::optional<AlignmentResult> alignment;
  std::size_t clamped = 0;
};

/// Aligns a predicted depth map to `gt` (in disparity space for lstsq) and
/// computes every metric. `k` is needed for the F-score.
ImageMetrics evaluate_depth(const DepthMap& pred, const DepthMap& gt, const EvalConfig& config,
                            const std::optional<Intrinsics>& k = std::nullopt);

struct MetricColumn {
  std::string dataset;
  std::string metric;
  bool lower_is_better = false;
  bool operator==(const MetricColumn&) const = default;
};

/// values[method][column]; NaN marks a missing entry.
struct MetricTable {
  std::vector<std::string> methods;
  std::vector<MetricColumn> columns;
  std::vector<std::vector<double>> values;

  void validate() const;
};

/// Direction for the metrics this library reports (abs_rel, delta, fscore).
bool metric_lower_is_better(const std::string& metric);

/// Per-method mean over columns of its 1-based rank; ties share the average rank.
std::vector<double> rank(const MetricTable& table);

struct Improvement {
  std::vector<double> per_method;  // percent
  /// Columns left out because the baseline value is zero.
  std::vector<std::size_t> skipped_columns;
};

/// Per-method mean over columns of the signed relative change against the
/// baseline row, in percent; improvements are positive in either direction.
/// Throws when every column has a zero baseline.
Improvement improvement(const MetricTable& table, std::size_t baseline);

}  // namespace mdepth
