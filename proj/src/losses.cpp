#include "mdepth/losses.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "photometric_kernel.hpp"
#include "smoothness_kernel.hpp"

namespace mdepth {

static_assert(kSsimC1 == detail::kSsimC1 && kSsimC2 == detail::kSsimC2);

namespace {

detail::ImageView view(const ImageBuffer& img) {
  return {img.data().data(), img.height(), img.width(), img.channels()};
}

void require_same_shape(const ImageBuffer& a, const ImageBuffer& b, const char* what) {
  if (!a.same_shape(b)) throw std::invalid_argument(std::string(what) + ": image shapes differ");
}

}  // namespace

Grid<double> ssim(const ImageBuffer& x, const ImageBuffer& y) {
  require_same_shape(x, y, "ssim");
  Grid<double> out(x.height(), x.width(), 0.0);
  const auto vx = view(x);
  const auto vy = view(y);
  for (int r = 0; r < x.height(); ++r) {
    for (int c = 0; c < x.width(); ++c) out(r, c) = detail::ssim_pixel(vx, vy, r, c);
  }
  return out;
}

LossMap photometric_loss(const ImageBuffer& target, const ImageBuffer& synth, const BoolMask& mask,
                         double ssim_weight) {
  require_same_shape(target, synth, "photometric_loss");
  if (!target.same_extent(mask)) {
    throw std::invalid_argument("photometric_loss: mask shape differs from image");
  }
  if (!(ssim_weight >= 0.0 && ssim_weight <= 1.0)) {
    throw std::invalid_argument("photometric_loss: ssim weight outside [0,1]");
  }
  LossMap out{Grid<double>(target.height(), target.width(), 0.0),
              BoolMask(target.height(), target.width(), 0)};
  const auto vx = view(target);
  const auto vy = view(synth);
  for (int r = 0; r < target.height(); ++r) {
    for (int c = 0; c < target.width(); ++c) {
      if (!detail::window_valid(mask, r, c)) continue;
      out.valid(r, c) = 1;
      out.values(r, c) = detail::photometric_pixel(vx, vy, r, c, ssim_weight);
    }
  }
  return out;
}

MinReconstruction min_reconstruction(std::span<const LossMap> loss_maps) {
  if (loss_maps.empty()) throw std::invalid_argument("min_reconstruction: no loss maps");
  const int h = loss_maps[0].values.height();
  const int w = loss_maps[0].values.width();
  for (const auto& m : loss_maps) {
    if (m.values.height() != h || m.values.width() != w || !m.valid.same_shape(m.values)) {
      throw std::invalid_argument("min_reconstruction: loss map shapes differ");
    }
  }
  MinReconstruction out{{Grid<double>(h, w, 0.0), BoolMask(h, w, 0)}, Grid<int>(h, w, -1)};
  for (std::size_t i = 0; i < out.argmin.size(); ++i) {
    for (std::size_t k = 0; k < loss_maps.size(); ++k) {
      if (!loss_maps[k].valid[i]) continue;
      const double v = loss_maps[k].values[i];
      if (out.argmin[i] < 0 || v < out.loss.values[i]) {
        out.loss.values[i] = v;
        out.argmin[i] = static_cast<int>(k);
        out.loss.valid[i] = 1;
      }
    }
  }
  return out;
}

BoolMask automask(std::span<const LossMap> synth_losses, std::span<const LossMap> identity_losses) {
  if (synth_losses.size() != identity_losses.size()) {
    throw std::invalid_argument("automask: synth and identity lists differ in length");
  }
  const auto best_synth = min_reconstruction(synth_losses);
  const auto best_identity = min_reconstruction(identity_losses);
  if (!best_synth.argmin.same_shape(best_identity.argmin)) {
    throw std::invalid_argument("automask: shapes differ");
  }
  BoolMask keep(best_synth.argmin.height(), best_synth.argmin.width(), 0);
  for (std::size_t i = 0; i < keep.size(); ++i) {
    if (!best_synth.loss.valid[i]) continue;
    const double identity = best_identity.loss.valid[i] ? best_identity.loss.values[i]
                                                        : std::numeric_limits<double>::infinity();
    keep[i] = best_synth.loss.values[i] < identity ? 1 : 0;
  }
  return keep;
}

double smoothness(const DisparityField& disparity, const ImageBuffer& img) {
  if (!img.same_extent(disparity.values())) {
    throw std::invalid_argument("smoothness: disparity and image shapes differ");
  }
  return detail::smoothness_eval(disparity.values(), detail::edge_weights(img));
}

namespace detail {

EdgeWeights edge_weights(const ImageBuffer& img) {
  EdgeWeights w;
  w.height = img.height();
  w.width = img.width();
  const int h = img.height();
  const int wd = img.width();
  const int ch = img.channels();
  auto grad = [&](int r0, int c0, int r1, int c1) {
    double s = 0.0;
    for (int k = 0; k < ch; ++k) s += std::abs(img.at(r1, c1, k) - img.at(r0, c0, k));
    return std::exp(-s / ch);
  };
  w.x.reserve(static_cast<std::size_t>(h) * (wd - 1));
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c + 1 < wd; ++c) w.x.push_back(grad(r, c, r, c + 1));
  }
  w.y.reserve(static_cast<std::size_t>(h - 1) * wd);
  for (int r = 0; r + 1 < h; ++r) {
    for (int c = 0; c < wd; ++c) w.y.push_back(grad(r, c, r + 1, c));
  }
  return w;
}

double smoothness_eval(const Grid<double>& disparity, const EdgeWeights& weights,
                       Grid<double>* grad, const SmoothnessSigns* frozen, SmoothnessSigns* capture) {
  const int h = disparity.height();
  const int w = disparity.width();
  if (h != weights.height || w != weights.width) {
    throw std::invalid_argument("smoothness: edge weights do not match disparity");
  }
  const double n = static_cast<double>(disparity.size());
  double mean = 0.0;
  for (double d : disparity.values()) mean += d;
  mean /= n;

  // Gradient with respect to the normalized disparity, mapped back below.
  std::vector<double> g_norm;
  if (grad != nullptr) g_norm.assign(disparity.size(), 0.0);
  if (capture != nullptr) {
    capture->x.assign(weights.x.size(), 0);
    capture->y.assign(weights.y.size(), 0);
  }

  auto accumulate = [&](std::size_t i0, std::size_t i1, double weight, double scale,
                        std::size_t term, bool along_x) {
    const double diff = disparity[i1] / mean - disparity[i0] / mean;
    const std::int8_t sign = frozen != nullptr
                                 ? (along_x ? frozen->x[term] : frozen->y[term])
                                 : static_cast<std::int8_t>((diff > 0.0) - (diff < 0.0));
    if (capture != nullptr) (along_x ? capture->x[term] : capture->y[term]) = sign;
    if (grad != nullptr) {
      g_norm[i1] += scale * weight * sign;
      g_norm[i0] -= scale * weight * sign;
    }
    return weight * (frozen != nullptr ? sign * diff : std::abs(diff));
  };

  double sx = 0.0;
  double sy = 0.0;
  if (w > 1) {
    const double scale = 1.0 / static_cast<double>(weights.x.size());
    std::size_t term = 0;
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c + 1 < w; ++c, ++term) {
        const std::size_t i = static_cast<std::size_t>(r) * w + c;
        sx += accumulate(i, i + 1, weights.x[term], scale, term, true);
      }
    }
    sx *= scale;
  }
  if (h > 1) {
    const double scale = 1.0 / static_cast<double>(weights.y.size());
    std::size_t term = 0;
    for (int r = 0; r + 1 < h; ++r) {
      for (int c = 0; c < w; ++c, ++term) {
        const std::size_t i = static_cast<std::size_t>(r) * w + c;
        sy += accumulate(i, i + w, weights.y[term], scale, term, false);
      }
    }
    sy *= scale;
  }

  if (grad != nullptr) {
    // d(d_i / m) / d d_k = delta_ik / m - d_i / (m^2 n)
    double coupling = 0.0;
    for (std::size_t i = 0; i < g_norm.size(); ++i) coupling += g_norm[i] * disparity[i];
    coupling /= mean * mean * n;
    *grad = Grid<double>(h, w, 0.0);
    for (std::size_t i = 0; i < g_norm.size(); ++i) (*grad)[i] = g_norm[i] / mean - coupling;
  }
  return sx + sy;
}

}  // namespace detail
}  // namespace mdepth
