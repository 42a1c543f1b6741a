#pragma once

#include <span>
#include <vector>

#include "mdepth/grid.hpp"
#include "mdepth/image.hpp"

namespace mdepth {

/// SSIM/L1 balance of the photometric loss.
inline constexpr double kDefaultSsimWeight = 0.85;
/// SSIM stabilizers on the [0,1] intensity range.
inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;

/// Per-pixel non-negative loss with a validity mask.
struct LossMap {
  Grid<double> values;
  BoolMask valid;
};

/// Per-pixel SSIM over a 3x3 box window with reflection padding, averaged
/// over channels. Values lie in [-1, 1].
Grid<double> ssim(const ImageBuffer& x, const ImageBuffer& y);

/// lambda * (1 - SSIM) / 2 + (1 - lambda) * |target - synth| per pixel.
///
/// A pixel is valid only when every synthesized sample in its SSIM window is
/// valid in `mask`, so masked zeros never leak into the structure term.
LossMap photometric_loss(const ImageBuffer& target, const ImageBuffer& synth, const BoolMask& mask,
                         double ssim_weight = kDefaultSsimWeight);

struct MinReconstruction {
  LossMap loss;
  Grid<int> argmin;  // -1 where no frame is valid
};

/// Per-pixel minimum over the valid entries of each support frame's loss.
MinReconstruction min_reconstruction(std::span<const LossMap> loss_maps);

/// Static-pixel mask: a pixel is kept iff its best warped loss is strictly
/// lower than its best un-warped (identity) loss. Pixels with no valid warped
/// loss are dropped.
BoolMask automask(std::span<const LossMap> synth_losses, std::span<const LossMap> identity_losses);

/// Edge-aware smoothness of mean-normalized disparity against `img`:
/// mean_x |dx d| exp(-|dx I|) + mean_y |dy d| exp(-|dy I|).
double smoothness(const DisparityField& disparity, const ImageBuffer& img);

}  // namespace mdepth
