#pragma once

// Per-pixel SSIM + L1 kernel shared by the public loss functions and the
// objective. Works on raw interleaved arrays so the objective can feed it
// synthesized values that are not valid ImageBuffers (masked zeros,
// linearly extended samples).

#include <cmath>
#include <cstdint>

#include "mdepth/grid.hpp"

namespace mdepth::detail {

inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;

struct ImageView {
  const double* data;
  int height;
  int width;
  int channels;
  double operator()(int r, int c, int k) const {
    return data[(static_cast<std::size_t>(r) * width + c) * channels + k];
  }
};

/// Reflection padding (edge pixel not repeated); single-pixel axes clamp.
inline int reflect_index(int i, int n) {
  if (n == 1) return 0;
  if (i < 0) return -i;
  if (i >= n) return 2 * n - 2 - i;
  return i;
}

struct SsimStats {
  double mux = 0.0;
  double muy = 0.0;
  double exx = 0.0;
  double eyy = 0.0;
  double exy = 0.0;
};

/// 3x3 box statistics around (r, c) in channel k.
inline SsimStats window_stats(const ImageView& x, const ImageView& y, int r, int c, int k) {
  SsimStats s;
  for (int dr = -1; dr <= 1; ++dr) {
    const int rr = reflect_index(r + dr, x.height);
    for (int dc = -1; dc <= 1; ++dc) {
      const int cc = reflect_index(c + dc, x.width);
      const double a = x(rr, cc, k);
      const double b = y(rr, cc, k);
      s.mux += a;
      s.muy += b;
      s.exx += a * a;
      s.eyy += b * b;
      s.exy += a * b;
    }
  }
  s.mux /= 9.0;
  s.muy /= 9.0;
  s.exx /= 9.0;
  s.eyy /= 9.0;
  s.exy /= 9.0;
  return s;
}

struct SsimPartials {
  double d_muy = 0.0;
  double d_eyy = 0.0;
  double d_exy = 0.0;
};

/// SSIM from window statistics. Written so that x == y gives exactly 1 and
/// swapping x and y gives a bit-identical value.
inline double ssim_value(const SsimStats& s, SsimPartials* partials = nullptr) {
  const double a = 2.0 * s.mux * s.muy + kSsimC1;
  const double b = 2.0 * (s.exy - s.mux * s.muy) + kSsimC2;
  const double cc = s.mux * s.mux + s.muy * s.muy + kSsimC1;
  const double d = (s.exx - s.mux * s.mux) + (s.eyy - s.muy * s.muy) + kSsimC2;
  const double value = (a * b) / (cc * d);
  if (partials != nullptr) {
    const double denom = cc * d;
    partials->d_muy = (2.0 * s.mux * b - 2.0 * s.mux * a) / denom -
                      value * (2.0 * s.muy / cc - 2.0 * s.muy / d);
    partials->d_eyy = -value / d;
    partials->d_exy = 2.0 * a / denom;
  }
  return value;
}

/// Channel-averaged SSIM at (r, c).
inline double ssim_pixel(const ImageView& x, const ImageView& y, int r, int c) {
  double sum = 0.0;
  for (int k = 0; k < x.channels; ++k) sum += ssim_value(window_stats(x, y, r, c, k));
  return sum / x.channels;
}

/// True when every tap of the reflected 3x3 window around (r, c) is set.
inline bool window_valid(const BoolMask& mask, int r, int c) {
  for (int dr = -1; dr <= 1; ++dr) {
    const int rr = reflect_index(r + dr, mask.height());
    for (int dc = -1; dc <= 1; ++dc) {
      if (!mask(rr, reflect_index(c + dc, mask.width()))) return false;
    }
  }
  return true;
}

// Residuals below the finest 16-bit quantization step carry no sign; |.| has a
// kink at an exact solution and Adam would otherwise dither around it.
inline constexpr double kL1DeadZone = 1e-6;

inline std::int8_t l1_sign(double diff) {
  return static_cast<std::int8_t>((diff > kL1DeadZone) - (diff < -kL1DeadZone));
}

inline double abs_or_frozen(double diff, const std::int8_t* sign, int k) {
  return sign != nullptr ? sign[k] * diff : std::abs(diff);
}

/// lambda * (1 - SSIM) / 2 + (1 - lambda) * mean_c |x - y| at (r, c).
/// `frozen_sign` (one entry per channel) replaces |.| by a fixed sign.
inline double photometric_pixel(const ImageView& x, const ImageView& y, int r, int c, double lambda,
                                const std::int8_t* frozen_sign = nullptr) {
  double ssim_sum = 0.0;
  double l1_sum = 0.0;
  for (int k = 0; k < x.channels; ++k) {
    ssim_sum += ssim_value(window_stats(x, y, r, c, k));
    l1_sum += abs_or_frozen(y(r, c, k) - x(r, c, k), frozen_sign, k);
  }
  const double n = x.channels;
  return lambda * (1.0 - ssim_sum / n) / 2.0 + (1.0 - lambda) * (l1_sum / n);
}

/// Adds weight * d photometric_pixel / d y into `adjoint` (interleaved like y).
inline void photometric_pixel_backward(const ImageView& x, const ImageView& y, int r, int c,
                                       double lambda, double weight, double* adjoint,
                                       const std::int8_t* frozen_sign = nullptr) {
  const double n = x.channels;
  const double d_ssim = -lambda / (2.0 * n) * weight;
  const double d_l1 = (1.0 - lambda) / n * weight;
  for (int k = 0; k < x.channels; ++k) {
    SsimPartials p;
    ssim_value(window_stats(x, y, r, c, k), &p);
    for (int dr = -1; dr <= 1; ++dr) {
      const int rr = reflect_index(r + dr, x.height);
      for (int dc = -1; dc <= 1; ++dc) {
        const int cc = reflect_index(c + dc, x.width);
        const double g = (p.d_muy + 2.0 * y(rr, cc, k) * p.d_eyy + x(rr, cc, k) * p.d_exy) / 9.0;
        adjoint[(static_cast<std::size_t>(rr) * x.width + cc) * x.channels + k] += d_ssim * g;
      }
    }
    const double diff = y(r, c, k) - x(r, c, k);
    const double sign = frozen_sign != nullptr ? frozen_sign[k] : l1_sign(diff);
    adjoint[(static_cast<std::size_t>(r) * x.width + c) * x.channels + k] += d_l1 * sign;
  }
}

}  // namespace mdepth::detail
