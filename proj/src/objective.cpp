#include "mdepth/objective.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mdepth/geometry.hpp"
#include "photometric_kernel.hpp"
#include "smoothness_kernel.hpp"

namespace mdepth {
namespace {

detail::ImageView view(const ImageBuffer& img) {
  return {img.data().data(), img.height(), img.width(), img.channels()};
}

detail::ImageView view(const std::vector<double>& data, const ImageBuffer& like) {
  return {data.data(), like.height(), like.width(), like.channels()};
}

struct SupportWarp {
  std::vector<double> synth;  // interleaved like the target
  BoolMask sample_valid;
  std::vector<BilinearCell> cells;
  std::vector<PixelJacobian> jacobians;
  BoolMask loss_valid;
};

void check_inputs(const Grid<double>& depth, std::size_t n_poses, const ImageBuffer& target,
                  std::span<const ImageBuffer> supports) {
  if (supports.empty()) throw std::invalid_argument("loss: at least one support frame required");
  if (n_poses != supports.size()) {
    throw std::invalid_argument("loss: one pose per support frame required");
  }
  if (!target.same_extent(depth)) throw std::invalid_argument("loss: depth and target shapes differ");
  for (const auto& s : supports) {
    if (!s.same_shape(target)) throw std::invalid_argument("loss: support and target shapes differ");
  }
}

SupportWarp warp_support(const Grid<double>& depth, const PoseSE3& pose, const Intrinsics& k,
                         const ImageBuffer& support, bool need_jacobians, const ActiveSet* frozen,
                         std::size_t index) {
  const int h = depth.height();
  const int w = depth.width();
  const int ch = support.channels();
  const std::size_t n = depth.size();
  SupportWarp out;
  out.synth.assign(n * ch, 0.0);
  out.sample_valid = BoolMask(h, w, 0);
  out.cells.assign(n, BilinearCell{});
  if (need_jacobians) out.jacobians.assign(n, PixelJacobian{});

  const Warp warp(pose, k);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * w + c;
      if (frozen != nullptr && !frozen->sample_valid[index][i]) continue;
      const auto res = warp.apply(c + 0.5, r + 0.5, depth[i],
                                  need_jacobians ? &out.jacobians[i] : nullptr);
      BilinearCell cell;
      if (frozen != nullptr) {
        cell = cell_with_origin(frozen->cell_x0[index][i], frozen->cell_y0[index][i], res.pixel.x(),
                                res.pixel.y(), support.width(), support.height());
      } else {
        if (!res.in_front) continue;
        const auto located = locate_cell(res.pixel.x(), res.pixel.y(), support.width(), support.height());
        if (!located) continue;
        cell = *located;
      }
      out.sample_valid[i] = 1;
      out.cells[i] = cell;
      for (int kk = 0; kk < ch; ++kk) out.synth[i * ch + kk] = bilinear_value(support, cell, kk);
    }
  }

  out.loss_valid = BoolMask(h, w, 0);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      out.loss_valid(r, c) = frozen != nullptr ? frozen->loss_valid[index](r, c)
                                               : detail::window_valid(out.sample_valid, r, c);
    }
  }
  return out;
}

struct ReconstructionResult {
  LossReport report;
  Grid<double> d_depth;
  std::vector<Vector6d> d_poses;
  Eigen::Vector4d d_intrinsics = Eigen::Vector4d::Zero();
};

ReconstructionResult reconstruct(const Grid<double>& depth, std::span<const PoseSE3> poses,
                                 const Intrinsics& k, const ImageBuffer& target,
                                 std::span<const ImageBuffer> supports, const LossConfig& config,
                                 bool need_grad, const ActiveSet* frozen, ActiveSet* capture) {
  check_inputs(depth, poses.size(), target, supports);
  k.validate();
  const int h = target.height();
  const int w = target.width();
  const int ch = target.channels();
  const std::size_t n = target.pixel_count();
  const std::size_t n_sup = supports.size();
  const double lambda = config.ssim_weight;
  if (frozen != nullptr &&
      (frozen->height != h || frozen->width != w || frozen->sample_valid.size() != n_sup)) {
    throw std::invalid_argument("loss: frozen active set does not match inputs");
  }

  std::vector<SupportWarp> warps;
  warps.reserve(n_sup);
  for (std::size_t s = 0; s < n_sup; ++s) {
    warps.push_back(warp_support(depth, poses[s], k, supports[s], need_grad, frozen, s));
  }

  const auto tv = view(target);
  BoolMask kept(h, w, 0);
  Grid<int> argmin(h, w, -1);
  std::vector<double> kept_loss(n, 0.0);
  std::vector<std::int8_t> l1_signs(n * ch, 0);

  if (frozen != nullptr) {
    kept = frozen->kept;
    argmin = frozen->argmin;
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        const std::size_t i = static_cast<std::size_t>(r) * w + c;
        if (!kept[i]) continue;
        const auto& wp = warps[argmin[i]];
        kept_loss[i] = detail::photometric_pixel(tv, view(wp.synth, target), r, c, lambda,
                                                 &frozen->l1_signs[i * ch]);
      }
    }
  } else {
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        const std::size_t i = static_cast<std::size_t>(r) * w + c;
        double best = std::numeric_limits<double>::infinity();
        int best_k = -1;
        for (std::size_t s = 0; s < n_sup; ++s) {
          if (!warps[s].loss_valid[i]) continue;
          const double v = detail::photometric_pixel(tv, view(warps[s].synth, target), r, c, lambda);
          if (best_k < 0 || v < best) {
            best = v;
            best_k = static_cast<int>(s);
          }
        }
        if (best_k < 0) continue;
        argmin[i] = best_k;
        bool keep = true;
        if (config.automask) {
          double identity = std::numeric_limits<double>::infinity();
          for (std::size_t s = 0; s < n_sup; ++s) {
            identity = std::min(identity, detail::photometric_pixel(tv, view(supports[s]), r, c, lambda));
          }
          keep = best < identity;
        }
        if (!keep) continue;
        kept[i] = 1;
        kept_loss[i] = best;
        const auto& synth = warps[best_k].synth;
        for (int kk = 0; kk < ch; ++kk) {
          const double diff = synth[i * ch + kk] - target.data()[i * ch + kk];
          l1_signs[i * ch + kk] = detail::l1_sign(diff);
        }
      }
    }
  }

  ReconstructionResult res;
  res.report.argmin_histogram.assign(n_sup, 0);
  double sum = 0.0;
  std::size_t n_kept = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!kept[i]) continue;
    sum += kept_loss[i];
    ++n_kept;
    ++res.report.argmin_histogram[argmin[i]];
  }
  res.report.kept_pixels = n_kept;
  res.report.automask_coverage = static_cast<double>(n_kept) / static_cast<double>(n);
  res.report.all_masked = n_kept == 0;
  res.report.reconstruction = n_kept > 0 ? sum / static_cast<double>(n_kept) : 0.0;

  if (capture != nullptr) {
    capture->height = h;
    capture->width = w;
    capture->channels = ch;
    capture->sample_valid.clear();
    capture->loss_valid.clear();
    capture->cell_x0.assign(n_sup, std::vector<std::int32_t>(n, 0));
    capture->cell_y0.assign(n_sup, std::vector<std::int32_t>(n, 0));
    for (std::size_t s = 0; s < n_sup; ++s) {
      capture->sample_valid.push_back(warps[s].sample_valid);
      capture->loss_valid.push_back(warps[s].loss_valid);
      for (std::size_t i = 0; i < n; ++i) {
        capture->cell_x0[s][i] = warps[s].cells[i].x0;
        capture->cell_y0[s][i] = warps[s].cells[i].y0;
      }
    }
    capture->kept = kept;
    capture->argmin = argmin;
    capture->l1_signs = frozen != nullptr ? frozen->l1_signs : l1_signs;
  }

  if (!need_grad) return res;

  res.d_depth = Grid<double>(h, w, 0.0);
  res.d_poses.assign(n_sup, Vector6d::Zero());
  if (n_kept == 0) return res;

  const double weight = 1.0 / static_cast<double>(n_kept);
  const auto& signs = frozen != nullptr ? frozen->l1_signs : l1_signs;
  std::vector<std::vector<double>> adjoint(n_sup);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * w + c;
      if (!kept[i]) continue;
      const int s = argmin[i];
      if (adjoint[s].empty()) adjoint[s].assign(n * ch, 0.0);
      detail::photometric_pixel_backward(tv, view(warps[s].synth, target), r, c, lambda, weight,
                                         adjoint[s].data(), &signs[i * ch]);
    }
  }

  for (std::size_t s = 0; s < n_sup; ++s) {
    if (adjoint[s].empty()) continue;
    const auto& wp = warps[s];
    for (std::size_t i = 0; i < n; ++i) {
      if (!wp.sample_valid[i]) continue;
      Eigen::Vector2d g_pix = Eigen::Vector2d::Zero();
      bool touched = false;
      for (int kk = 0; kk < ch; ++kk) {
        const double a = adjoint[s][i * ch + kk];
        if (a == 0.0) continue;
        touched = true;
        g_pix += a * bilinear_gradient(supports[s], wp.cells[i], kk);
      }
      if (!touched) continue;
      const auto& jac = wp.jacobians[i];
      res.d_depth[i] += g_pix.dot(jac.d_depth);
      res.d_poses[s] += jac.d_pose.transpose() * g_pix;
      res.d_intrinsics += jac.d_intrinsics.transpose() * g_pix;
    }
  }
  return res;
}

std::size_t zero_nonfinite(double& v) {
  if (std::isfinite(v)) return 0;
  v = 0.0;
  return 1;
}

}  // namespace

LossReport reconstruction_loss(const Grid<double>& depth, std::span<const PoseSE3> poses,
                               const Intrinsics& k, const ImageBuffer& target,
                               std::span<const ImageBuffer> supports, const LossConfig& config,
                               GeometryGradients* grads) {
  auto res = reconstruct(depth, poses, k, target, supports, config, grads != nullptr, nullptr, nullptr);
  res.report.total = res.report.reconstruction;
  if (grads != nullptr) {
    grads->depth = std::move(res.d_depth);
    grads->poses = std::move(res.d_poses);
    grads->intrinsics = res.d_intrinsics;
  }
  return res.report;
}

LossReport total_loss(const SceneState& state, const ImageBuffer& target,
                      std::span<const ImageBuffer> supports, const LossConfig& config,
                      SceneGradients* grads, const ActiveSet* frozen, ActiveSet* capture) {
  if (state.poses.size() != state.offsets.size()) {
    throw std::invalid_argument("total_loss: scene state has mismatched offsets and poses");
  }
  const Grid<double> depth = state.depth_values();
  const Intrinsics k = state.intrinsics();
  const bool need_grad = grads != nullptr;
  auto res = reconstruct(depth, state.poses, k, target, supports, config, need_grad, frozen, capture);

  const Grid<double> disparity = state.disparity().values();
  const auto weights = detail::edge_weights(target);
  detail::SmoothnessSigns frozen_signs;
  if (frozen != nullptr) {
    frozen_signs.x = frozen->smooth_x_signs;
    frozen_signs.y = frozen->smooth_y_signs;
  }
  detail::SmoothnessSigns captured_signs;
  Grid<double> d_disp;
  const double smooth =
      detail::smoothness_eval(disparity, weights, need_grad ? &d_disp : nullptr,
                              frozen != nullptr ? &frozen_signs : nullptr,
                              capture != nullptr ? &captured_signs : nullptr);
  if (capture != nullptr) {
    capture->smooth_x_signs = std::move(captured_signs.x);
    capture->smooth_y_signs = std::move(captured_signs.y);
  }

  LossReport report = res.report;
  report.smoothness = smooth;
  report.smoothness_weight = config.smoothness_weight;
  report.total = report.reconstruction + config.smoothness_weight * smooth;
  if (!need_grad) return report;

  const double a = state.range.a();
  grads->logits = Grid<double>(state.height(), state.width(), 0.0);
  for (std::size_t i = 0; i < disparity.size(); ++i) {
    const double d = disparity[i];
    const double dd_dlogit = d * (1.0 - d);
    const double ddepth_dd = -a * depth[i] * depth[i];
    double g = (res.d_depth[i] * ddepth_dd + config.smoothness_weight * d_disp[i]) * dd_dlogit;
    report.nonfinite_gradients += zero_nonfinite(g);
    grads->logits[i] = g;
  }
  grads->poses = std::move(res.d_poses);
  for (auto& p : grads->poses) {
    for (int j = 0; j < 6; ++j) report.nonfinite_gradients += zero_nonfinite(p[j]);
  }
  const auto dk = intrinsics_from_raw_derivative(state.intrinsics_raw, state.width(), state.height());
  for (int j = 0; j < 4; ++j) {
    grads->intrinsics_raw[j] = res.d_intrinsics[j] * dk[j];
    report.nonfinite_gradients += zero_nonfinite(grads->intrinsics_raw[j]);
  }
  return report;
}

}  // namespace mdepth
