#include "mdepth/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mdepth {
namespace {

// Adam moments for every parameter, in a fixed layout: logits, then six
// entries per pose, then the four raw intrinsics.
class Adam {
 public:
  Adam(const OptimizerConfig& c, std::size_t n)
      : beta1_(c.beta1), beta2_(c.beta2), eps_(c.epsilon), floor_(c.gradient_floor), m_(n, 0.0), v_(n, 0.0) {}

  void begin_step() {
    ++t_;
    bias1_ = 1.0 - std::pow(beta1_, t_);
    bias2_ = 1.0 - std::pow(beta2_, t_);
  }

  double step(std::size_t i, double grad, double lr) {
    if (std::abs(grad) < floor_) grad = 0.0;
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad * grad;
    const double mhat = m_[i] / bias1_;
    const double vhat = v_[i] / bias2_;
    return lr * mhat / (std::sqrt(vhat) + eps_);
  }

 private:
  double beta1_;
  double beta2_;
  double eps_;
  double floor_;
  std::vector<double> m_;
  std::vector<double> v_;
  int t_ = 0;
  double bias1_ = 1.0;
  double bias2_ = 1.0;
};

void update(const OptimizerConfig& config, double scale, const SceneGradients& grads, Adam& adam,
            SceneState& state) {
  adam.begin_step();
  const std::size_t n_pix = state.logits.size();
  if (config.optimize_depth) {
    const double lr = scale * config.learning_rates.disparity;
    for (std::size_t i = 0; i < n_pix; ++i) {
      double& l = state.logits[i];
      l = std::clamp(l - adam.step(i, grads.logits[i], lr), -kLogitLimit, kLogitLimit);
    }
  }
  if (config.optimize_pose) {
    const double lr = scale * config.learning_rates.pose;
    for (std::size_t s = 0; s < state.poses.size(); ++s) {
      Vector6d p = state.poses[s].params();
      for (int j = 0; j < 6; ++j) p[j] -= adam.step(n_pix + 6 * s + j, grads.poses[s][j], lr);
      if (config.forward_motion_constraint) {
        // Camera moves forward in time: support frames after the target see
        // the scene closer, those before see it farther.
        const int k = state.offsets[s];
        if (k * p[5] > 0.0) p[5] = 0.0;
      }
      state.poses[s] = PoseSE3::from_params(p);
    }
  }
  if (config.intrinsics_mode == IntrinsicsMode::learned) {
    const double lr = scale * config.learning_rates.intrinsics;
    const std::size_t base = n_pix + 6 * state.poses.size();
    for (int j = 0; j < 4; ++j) {
      state.intrinsics_raw[j] -= adam.step(base + j, grads.intrinsics_raw[j], lr);
    }
  }
}

void check_parameters(const SceneState& state, int iteration) {
  const auto fail = [&](const char* group) {
    throw NumericalError(std::string("non-finite ") + group + " update at iteration " +
                         std::to_string(iteration));
  };
  for (double l : state.logits.values()) {
    if (!std::isfinite(l)) fail("disparity");
  }
  for (const PoseSE3& p : state.poses) {
    if (!p.params().allFinite()) fail("pose");
  }
  for (double r : state.intrinsics_raw) {
    if (!std::isfinite(r)) fail("intrinsics");
  }
  const Intrinsics k = state.intrinsics();
  if (!(std::isfinite(k.fx) && std::isfinite(k.fy))) fail("intrinsics");
}

void check_finite(const LossReport& r, int iteration) {
  const auto fail = [&](const char* term) {
    throw NumericalError(std::string("non-finite ") + term + " term at iteration " +
                         std::to_string(iteration));
  };
  if (!std::isfinite(r.reconstruction)) fail("reconstruction");
  if (!std::isfinite(r.smoothness)) fail("smoothness");
  if (!std::isfinite(r.total)) fail("total");
}

void check_inputs(const ImageBuffer& target, const std::vector<ImageBuffer>& supports,
                  const SceneState& state) {
  if (target.empty()) throw std::invalid_argument("optimize: empty target image");
  if (supports.empty()) throw std::invalid_argument("optimize: no support frames");
  for (const auto& s : supports) {
    if (!s.same_shape(target)) throw std::invalid_argument("optimize: support shape differs from target");
  }
  if (!target.same_extent(state.logits)) {
    throw std::invalid_argument("optimize: state extent differs from target");
  }
  if (state.poses.size() != supports.size()) {
    throw std::invalid_argument("optimize: need one pose per support frame");
  }
}

}  // namespace

void OptimizerConfig::validate() const {
  if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
  if (pyramid_levels < 1) throw std::invalid_argument("pyramid_levels must be >= 1");
  if (offsets.empty()) throw std::invalid_argument("at least one support offset is required");
  for (int k : offsets) {
    if (k == 0) throw std::invalid_argument("support offset 0 is the target frame");
  }
  if (!(learning_rates.disparity >= 0 && learning_rates.pose >= 0 && learning_rates.intrinsics >= 0)) {
    throw std::invalid_argument("learning rates must be non-negative");
  }
  if (!(warmup_fraction >= 0.0 && warmup_fraction <= 1.0)) {
    throw std::invalid_argument("warmup_fraction must lie in [0, 1]");
  }
  if (window < 0) throw std::invalid_argument("window must be >= 0");
  if (!(gradient_floor >= 0.0)) throw std::invalid_argument("gradient_floor must be >= 0");
  if (!(decay_fraction >= 0.0 && decay_fraction <= 1.0)) {
    throw std::invalid_argument("decay_fraction must lie in [0, 1]");
  }
  if (!(decay_factor > 0.0 && decay_factor <= 1.0)) {
    throw std::invalid_argument("decay_factor must lie in (0, 1]");
  }
  if (!(loss.ssim_weight >= 0.0 && loss.ssim_weight <= 1.0)) {
    throw std::invalid_argument("ssim_weight must lie in [0, 1]");
  }
  if (!(loss.smoothness_weight >= 0.0)) throw std::invalid_argument("smoothness_weight must be >= 0");
  range.validate();
}

std::vector<int> sample_support_offsets(Rng& rng, OffsetMode mode, int lo, int hi) {
  if (lo < 1 || hi < lo) {
    throw std::invalid_argument("support offset range must satisfy 1 <= lo <= hi");
  }
  if (mode == OffsetMode::fixed) return {-1, 1};
  const int back = rng.uniform_int(lo, hi);
  const int fwd = rng.uniform_int(lo, hi);
  return {-back, fwd};
}

OptimizeResult optimize(const ImageBuffer& target, const std::vector<ImageBuffer>& supports,
                        const OptimizerConfig& config, const std::optional<SceneState>& init) {
  config.validate();
  OptimizeResult out;
  out.state = init ? *init : SceneState::initial(target.height(), target.width(), config.offsets,
                                                 config.range);
  SceneState& state = out.state;
  check_inputs(target, supports, state);

  Adam adam(config, state.logits.size() + 6 * state.poses.size() + 4);
  const int warmup = std::max(1, static_cast<int>(std::lround(config.warmup_fraction * config.iterations)));
  const int decay_start =
      config.iterations - static_cast<int>(std::lround(config.decay_fraction * config.iterations));
  out.trace.reserve(config.iterations);

  struct Checkpoint {
    SceneState state;
    Adam adam;
    SceneGradients grads;
    LossReport report;
  };
  std::optional<Checkpoint> accepted;
  double backoff = 1.0;
  const auto window_max = [&] {
    const std::size_t n = out.trace.size();
    const std::size_t from = n > static_cast<std::size_t>(config.window) ? n - config.window : 0;
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t i = from; i < n; ++i) m = std::max(m, out.trace[i].total);
    return m;
  };

  SceneGradients grads;
  for (int it = 0; it < config.iterations; ++it) {
    LossReport report = total_loss(state, target, supports, config.loss, &grads);
    check_finite(report, it);
    if (config.window > 0 && it >= config.window && report.total > window_max()) {
      // Retry the last accepted step at half the size.
      backoff *= 0.5;
      state = accepted->state;
      adam = accepted->adam;
      grads = accepted->grads;
      report = accepted->report;
    } else {
      backoff = std::min(1.0, 2.0 * backoff);
      if (config.window > 0) accepted = Checkpoint{state, adam, grads, report};
    }
    out.trace.push_back(report);

    const double scale = std::min(1.0, static_cast<double>(it + 1) / warmup) *
                         (it >= decay_start ? config.decay_factor : 1.0) * backoff;
    update(config, scale, grads, adam, state);
    check_parameters(state, it);
  }
  if (config.window > 0) {
    const LossReport last = total_loss(state, target, supports, config.loss);
    check_finite(last, config.iterations);
    if (last.total > window_max()) state = accepted->state;
  }
  return out;
}

ImageBuffer downsample2(const ImageBuffer& img) {
  const int h = img.height() / 2;
  const int w = img.width() / 2;
  if (h < 1 || w < 1) throw std::invalid_argument("downsample2: image too small");
  const int ch = img.channels();
  std::vector<double> data(static_cast<std::size_t>(h) * w * ch);
  std::size_t i = 0;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      for (int k = 0; k < ch; ++k) {
        data[i++] = 0.25 * (img.at(2 * r, 2 * c, k) + img.at(2 * r, 2 * c + 1, k) +
                            img.at(2 * r + 1, 2 * c, k) + img.at(2 * r + 1, 2 * c + 1, k));
      }
    }
  }
  return ImageBuffer(h, w, ch, std::move(data));
}

Intrinsics downsample2(const Intrinsics& k) {
  const int w = k.width / 2;
  const int h = k.height / 2;
  // Cropping the odd trailing row/column keeps the principal point inside
  // except in degenerate cases.
  return make_intrinsics(0.5 * k.fx, 0.5 * k.fy, std::min(0.5 * k.cx, static_cast<double>(w)),
                         std::min(0.5 * k.cy, static_cast<double>(h)), w, h);
}

Grid<double> resize_bilinear(const Grid<double>& field, int height, int width) {
  Grid<double> out(height, width, 0.0);
  const double sy = static_cast<double>(field.height()) / height;
  const double sx = static_cast<double>(field.width()) / width;
  for (int r = 0; r < height; ++r) {
    const double y = std::clamp((r + 0.5) * sy - 0.5, 0.0, field.height() - 1.0);
    const int y0 = std::min(static_cast<int>(y), std::max(field.height() - 2, 0));
    const int y1 = std::min(y0 + 1, field.height() - 1);
    const double ay = y - y0;
    for (int c = 0; c < width; ++c) {
      const double x = std::clamp((c + 0.5) * sx - 0.5, 0.0, field.width() - 1.0);
      const int x0 = std::min(static_cast<int>(x), std::max(field.width() - 2, 0));
      const int x1 = std::min(x0 + 1, field.width() - 1);
      const double ax = x - x0;
      const double top = (1 - ax) * field(y0, x0) + ax * field(y0, x1);
      const double bot = (1 - ax) * field(y1, x0) + ax * field(y1, x1);
      out(r, c) = (1 - ay) * top + ay * bot;
    }
  }
  return out;
}

OptimizeResult coarse_to_fine(const ImageBuffer& target, const std::vector<ImageBuffer>& supports,
                              const OptimizerConfig& config, const std::optional<SceneState>& init) {
  config.validate();
  const int levels = config.pyramid_levels;
  if (levels == 1) return optimize(target, supports, config, init);

  const int factor = 1 << (levels - 1);
  if (target.height() < factor || target.width() < factor) {
    throw std::invalid_argument("coarse_to_fine: image smaller than 2^(levels-1)");
  }
  if (config.iterations < levels) {
    throw std::invalid_argument("coarse_to_fine: fewer iterations than pyramid levels");
  }

  std::vector<ImageBuffer> targets{target};
  std::vector<std::vector<ImageBuffer>> support_levels{supports};
  for (int l = 1; l < levels; ++l) {
    targets.push_back(downsample2(targets.back()));
    std::vector<ImageBuffer> next;
    for (const auto& s : support_levels.back()) next.push_back(downsample2(s));
    support_levels.push_back(std::move(next));
  }

  SceneState fine = init ? *init : SceneState::initial(target.height(), target.width(),
                                                       config.offsets, config.range);
  std::vector<Intrinsics> ks{fine.intrinsics()};
  for (int l = 1; l < levels; ++l) ks.push_back(downsample2(ks.back()));

  SceneState state = fine;
  const int coarse = levels - 1;
  state.logits = resize_bilinear(fine.logits, targets[coarse].height(), targets[coarse].width());
  state.intrinsics_raw = intrinsics_to_raw(ks[coarse]);

  const int per_level = config.iterations / levels;
  OptimizeResult out;
  for (int l = coarse; l >= 0; --l) {
    OptimizerConfig level_config = config;
    level_config.pyramid_levels = 1;
    level_config.iterations = l == 0 ? config.iterations - per_level * (levels - 1) : per_level;
    OptimizeResult r = optimize(targets[l], support_levels[l], level_config, state);
    out.trace.insert(out.trace.end(), r.trace.begin(), r.trace.end());
    state = std::move(r.state);
    if (l > 0) {
      const ImageBuffer& up = targets[l - 1];
      const Intrinsics k = state.intrinsics();
      // Undo one halving of the realized intrinsics at the finer extent.
      Intrinsics finer = config.intrinsics_mode == IntrinsicsMode::learned
                             ? make_intrinsics(2.0 * k.fx, 2.0 * k.fy,
                                               std::min(2.0 * k.cx, static_cast<double>(up.width())),
                                               std::min(2.0 * k.cy, static_cast<double>(up.height())),
                                               up.width(), up.height())
                             : ks[l - 1];
      state.logits = resize_bilinear(state.logits, up.height(), up.width());
      state.intrinsics_raw = intrinsics_to_raw(finer);
    }
  }
  if (config.intrinsics_mode == IntrinsicsMode::fixed) state.intrinsics_raw = fine.intrinsics_raw;
  out.state = std::move(state);
  return out;
}

}  // namespace mdepth
