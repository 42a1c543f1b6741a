#include "mdepth/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

#include "mdepth/rng.hpp"

namespace mdepth {
namespace {

constexpr int kWaves = 4;
constexpr double kWaveAmplitude = 0.1;
constexpr double kLatticeTolerance = 1e-9;

struct Wave {
  double kx;
  double ky;
  double phase;
};

// Sum of sinusoids, sampled on a lattice and linearly interpolated between
// knots. Knot columns of row i sit at j + 0.5 + row_phase[i].
class Texture {
 public:
  Texture(Rng& rng, int channels, double min_period, double max_period) : channels_(channels) {
    for (int c = 0; c < channels; ++c) {
      for (int w = 0; w < kWaves; ++w) {
        const double period = rng.uniform(min_period, max_period);
        const double angle = rng.uniform(0.0, M_PI);
        const double k = 2.0 * M_PI / period;
        waves_.push_back({k * std::cos(angle), k * std::sin(angle), rng.uniform(0.0, 2.0 * M_PI)});
      }
    }
  }

  void set_row_phases(std::vector<double> phases) { row_phase_ = std::move(phases); }

  double operator()(double xi, double eta, int channel) const {
    const double y = eta - 0.5;
    const double y0 = std::floor(y);
    const double ay = y - y0;
    const int i0 = static_cast<int>(y0);
    const double top = row_value(i0, xi, channel);
    if (ay < kLatticeTolerance) return top;
    return (1.0 - ay) * top + ay * row_value(i0 + 1, xi, channel);
  }

 private:
  double knot(double x, int row, int channel) const {
    double v = 0.5;
    for (int w = 0; w < kWaves; ++w) {
      const Wave& wave = waves_[channel * kWaves + w];
      v += kWaveAmplitude * std::sin(wave.kx * x + wave.ky * (row + 0.5) + wave.phase);
    }
    return v;
  }

  double row_value(int row, double xi, int channel) const {
    const double phase =
        row >= 0 && row < static_cast<int>(row_phase_.size()) ? row_phase_[row] : 0.0;
    const double x = xi - 0.5 - phase;
    const double x0 = std::floor(x);
    const double ax = x - x0;
    const double left = knot(x0 + 0.5 + phase, row, channel);
    if (ax < kLatticeTolerance) return left;
    return (1.0 - ax) * left + ax * knot(x0 + 1.5 + phase, row, channel);
  }

  int channels_;
  std::vector<Wave> waves_;
  std::vector<double> row_phase_;
};

struct Plane {
  Eigen::Vector3d n;  // n . X = 1 in the target frame
  std::optional<double> max_x_over_z;  // half-plane bound (step foreground)
};

struct Hit {
  double xi;
  double eta;
  double depth;  // along the casting camera's z axis
};

std::vector<Plane> surfaces(const SyntheticSpec& s, const Intrinsics& k) {
  switch (s.surface) {
    case SurfaceKind::fronto_parallel:
      return {{Eigen::Vector3d(0, 0, 1.0 / s.depth), std::nullopt}};
    case SurfaceKind::step: {
      const int edge = s.step_column < 0 ? s.width / 2 : s.step_column;
      return {{Eigen::Vector3d(0, 0, 1.0 / s.near_depth), (edge - k.cx) / k.fx},
              {Eigen::Vector3d(0, 0, 1.0 / s.depth), std::nullopt}};
    }
    case SurfaceKind::slanted: {
      // 1/Z is linear in the row coordinate v: 1/Z = alpha + gamma v.
      const double gamma = (1.0 / s.depth_bottom - 1.0 / s.depth_top) / (s.height - 1);
      const double alpha = 1.0 / s.depth_top - 0.5 * gamma;
      return {{Eigen::Vector3d(0, gamma * k.fy, alpha + gamma * k.cy), std::nullopt}};
    }
  }
  throw std::invalid_argument("unknown surface kind");
}

std::optional<Hit> cast(const std::vector<Plane>& planes, const PoseSE3& pose, const Intrinsics& k,
                        double u, double v) {
  const Eigen::Matrix3d rt = pose.rotation_matrix().transpose();
  const Eigen::Vector3d origin = -rt * pose.translation;
  const Eigen::Vector3d dir = rt * Eigen::Vector3d((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
  std::optional<double> best;
  Eigen::Vector3d point = Eigen::Vector3d::Zero();
  for (const Plane& p : planes) {
    const double denom = p.n.dot(dir);
    if (denom == 0.0) continue;
    const double lambda = (1.0 - p.n.dot(origin)) / denom;
    if (!(lambda > 0.0)) continue;
    const Eigen::Vector3d x = origin + lambda * dir;
    if (x.z() <= 0.0) continue;
    if (p.max_x_over_z && !(x.x() / x.z() < *p.max_x_over_z)) continue;
    if (!best || lambda < *best) {
      best = lambda;
      point = x;
    }
  }
  if (!best) return std::nullopt;
  return Hit{k.fx * point.x() / point.z() + k.cx, k.fy * point.y() / point.z() + k.cy, *best};
}

double frac(double x) {
  const double f = x - std::floor(x);
  return f > 1.0 - kLatticeTolerance ? 0.0 : f;
}

bool congruent(double a, double b) {
  const double d = a - b;
  return std::abs(d - std::round(d)) < kLatticeTolerance;
}

}  // namespace

void SyntheticSpec::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("synthetic scene: " + what); };
  if (height < 4 || width < 4) fail("image must be at least 4x4");
  if (channels != 1 && channels != 3) fail("channels must be 1 or 3");
  if (!(focal > 0.0)) fail("focal must be positive");
  if (!(depth > 0.0) || !(near_depth > 0.0) || !(depth_top > 0.0) || !(depth_bottom > 0.0)) {
    fail("depths must be positive");
  }
  if (surface == SurfaceKind::step) {
    if (!(near_depth < depth)) fail("step foreground must be nearer than the background");
    const int edge = step_column < 0 ? width / 2 : step_column;
    if (edge < 1 || edge >= width) fail("step column must split the image");
  }
  if (!(baseline >= 0.0) || !std::isfinite(baseline)) fail("baseline must be non-negative");
  if (offsets.empty()) fail("need at least one support offset");
  for (int k : offsets) {
    if (k == 0) fail("support offset 0 is the target frame");
  }
  if (!(min_period >= 2.0 && max_period >= min_period)) fail("texture periods must satisfy 2 <= min <= max");
}

SyntheticScene make_synthetic_scene(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  SyntheticScene scene;
  scene.spec = spec;
  const int h = spec.height;
  const int w = spec.width;
  scene.intrinsics = make_intrinsics(spec.focal, spec.focal, 0.5 * w, 0.5 * h, w, h);
  const Intrinsics& k = scene.intrinsics;
  const auto planes = surfaces(spec, k);

  for (int off : spec.offsets) {
    PoseSE3 pose = PoseSE3::identity();
    const double travel = off * spec.baseline;
    switch (spec.motion) {
      case MotionKind::lateral: pose.translation = Eigen::Vector3d(-travel, 0, 0); break;
      case MotionKind::forward: pose.translation = Eigen::Vector3d(0, 0, -travel); break;
      case MotionKind::backward: pose.translation = Eigen::Vector3d(0, 0, travel); break;
    }
    scene.poses.push_back(pose);
  }

  scene.depth = Grid<double>(h, w, 0.0);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const auto hit = cast(planes, PoseSE3::identity(), k, c + 0.5, r + 0.5);
      if (!hit) throw std::invalid_argument("synthetic scene: surface not visible from the target");
      scene.depth(r, c) = hit->depth;
    }
  }

  std::vector<std::vector<Hit>> hits(spec.offsets.size());
  for (std::size_t s = 0; s < spec.offsets.size(); ++s) {
    hits[s].reserve(static_cast<std::size_t>(h) * w);
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        const auto hit = cast(planes, scene.poses[s], k, c + 0.5, r + 0.5);
        if (!hit) throw std::invalid_argument("synthetic scene: surface not visible from a support frame");
        hits[s].push_back(*hit);
      }
    }
  }

  // Exact when every support row sees the target row at one shared
  // fractional column offset.
  std::vector<double> phases(h, 0.0);
  bool exact = true;
  for (int r = 0; r < h && exact; ++r) {
    std::optional<double> shift;
    for (std::size_t s = 0; s < hits.size() && exact; ++s) {
      for (int c = 0; c < w; ++c) {
        const Hit& hit = hits[s][static_cast<std::size_t>(r) * w + c];
        const double d = hit.xi - (c + 0.5);
        if (std::abs(hit.eta - (r + 0.5)) > kLatticeTolerance || (shift && !congruent(d, *shift))) {
          exact = false;
          break;
        }
        if (!shift) shift = d;
      }
    }
    if (shift) phases[r] = frac(*shift);
  }
  if (!exact) {
    if (spec.strict) {
      throw std::invalid_argument(
          "synthetic scene: frames are not exact warps (strict mode needs lateral motion with "
          "per-row flows sharing a fractional part)");
    }
    std::fill(phases.begin(), phases.end(), 0.0);
  }
  scene.exact = exact;

  Rng rng(seed);
  Texture texture(rng, spec.channels, spec.min_period, spec.max_period);
  texture.set_row_phases(std::move(phases));

  const int ch = spec.channels;
  std::vector<double> data(static_cast<std::size_t>(h) * w * ch);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      for (int q = 0; q < ch; ++q) {
        data[(static_cast<std::size_t>(r) * w + c) * ch + q] = texture(c + 0.5, r + 0.5, q);
      }
    }
  }
  scene.target = ImageBuffer(h, w, ch, std::move(data));

  for (const auto& support_hits : hits) {
    std::vector<double> pix(static_cast<std::size_t>(h) * w * ch);
    for (std::size_t i = 0; i < support_hits.size(); ++i) {
      for (int q = 0; q < ch; ++q) pix[i * ch + q] = texture(support_hits[i].xi, support_hits[i].eta, q);
    }
    scene.supports.emplace_back(h, w, ch, std::move(pix));
  }
  return scene;
}

SceneState SyntheticScene::ground_truth(const DepthRange& range) const {
  SceneState s = SceneState::initial(depth.height(), depth.width(), spec.offsets, range);
  for (std::size_t i = 0; i < depth.size(); ++i) {
    if (!(depth[i] >= range.near && depth[i] <= range.far)) {
      throw std::invalid_argument("ground truth depth outside the depth range");
    }
    s.logits[i] = std::clamp(logit(depth_to_disparity(depth[i], range)), -kLogitLimit, kLogitLimit);
  }
  s.poses = poses;
  s.intrinsics_raw = intrinsics_to_raw(intrinsics);
  return s;
}

}  // namespace mdepth
