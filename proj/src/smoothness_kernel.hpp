#pragma once

#include <cstdint>
#include <vector>

#include "mdepth/grid.hpp"
#include "mdepth/image.hpp"

namespace mdepth::detail {

/// exp(-|dI|) along x (H x (W-1)) and y ((H-1) x W), |dI| averaged over channels.
struct EdgeWeights {
  int height = 0;
  int width = 0;
  std::vector<double> x;
  std::vector<double> y;
};

EdgeWeights edge_weights(const ImageBuffer& img);

struct SmoothnessSigns {
  std::vector<std::int8_t> x;
  std::vector<std::int8_t> y;
};

/// Smoothness of mean-normalized `disparity`. When `grad` is set it receives
/// d value / d disparity. `frozen` fixes the sign of every |.| term and
/// `capture` records the signs at this point.
double smoothness_eval(const Grid<double>& disparity, const EdgeWeights& weights,
                       Grid<double>* grad = nullptr, const SmoothnessSigns* frozen = nullptr,
                       SmoothnessSigns* capture = nullptr);

}  // namespace mdepth::detail
