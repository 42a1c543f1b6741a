#include "mdepth/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <limits>
#include <sstream>

#include "mdepth/geometry.hpp"
#include "mdepth/objective.hpp"

namespace mdepth {
namespace {

// Absolute floors below which differences are treated as roundoff.
constexpr double kGeometryFloor = 1e-5;
constexpr double kLossFloor = 1e-7;
constexpr double kIntrinsicsFloor = 1e-8;

class GroupAccumulator {
 public:
  GroupAccumulator(std::string name, double tolerance, double floor, bool corrupt)
      : floor_(floor), scale_(corrupt ? 1.01 : 1.0) {
    result_.group = std::move(name);
    result_.tolerance = tolerance;
  }

  void add(double analytic, double numeric, const std::function<std::string()>& where) {
    analytic *= scale_;
    const double err = relative_error(analytic, numeric, floor_);
    ++result_.entries;
    if (err > result_.worst_relative_error || !std::isfinite(err)) {
      result_.worst_relative_error = std::isfinite(err) ? err : std::numeric_limits<double>::infinity();
      result_.analytic = analytic;
      result_.numeric = numeric;
      result_.where = where();
    }
  }

  const GroupResult& result() const { return result_; }

 private:
  double floor_;
  double scale_;
  GroupResult result_;
};

Intrinsics random_intrinsics(Rng& rng, int width, int height) {
  return make_intrinsics(rng.uniform(0.6, 1.6) * width, rng.uniform(0.6, 1.6) * height,
                         rng.uniform(0.3, 0.7) * width, rng.uniform(0.3, 0.7) * height, width,
                         height);
}

void check_geometry(const GradcheckOptions& opt, Rng& rng, GroupAccumulator& g_depth,
                    GroupAccumulator& g_pose, GroupAccumulator& g_intr) {
  const double h = opt.step;
  int done = 0;
  while (done < opt.geometry_configs) {
    const Intrinsics k = random_intrinsics(rng, opt.width, opt.height);
    PoseSE3 pose;
    for (int j = 0; j < 3; ++j) {
      pose.rotation[j] = 0.2 * rng.normal();
      pose.translation[j] = 0.3 * rng.normal();
    }
    const double u = rng.uniform(0.0, opt.width);
    const double v = rng.uniform(0.0, opt.height);
    const double depth = rng.uniform(1.0, 10.0);
    PixelJacobian jac;
    const auto base = Warp(pose, k).apply(u, v, depth, &jac);
    if (!base.in_front || base.depth < 0.1) continue;
    ++done;
    auto where = [&](const char* p) {
      return [done, p] {
        std::ostringstream s;
        s << "config " << done << " " << p;
        return s.str();
      };
    };

    const auto plus = Warp(pose, k).apply(u, v, depth + h).pixel;
    const auto minus = Warp(pose, k).apply(u, v, depth - h).pixel;
    const Eigen::Vector2d fd_depth = (plus - minus) / (2.0 * h);
    for (int r = 0; r < 2; ++r) g_depth.add(jac.d_depth[r], fd_depth[r], where("depth"));

    for (int j = 0; j < 6; ++j) {
      Vector6d pp = pose.params();
      Vector6d pm = pp;
      pp[j] += h;
      pm[j] -= h;
      const Eigen::Vector2d fd = (Warp(PoseSE3::from_params(pp), k).apply(u, v, depth).pixel -
                                  Warp(PoseSE3::from_params(pm), k).apply(u, v, depth).pixel) /
                                 (2.0 * h);
      for (int r = 0; r < 2; ++r) g_pose.add(jac.d_pose(r, j), fd[r], where("pose"));
    }

    for (int j = 0; j < 4; ++j) {
      Intrinsics kp = k;
      Intrinsics km = k;
      double* fields_p[] = {&kp.fx, &kp.fy, &kp.cx, &kp.cy};
      double* fields_m[] = {&km.fx, &km.fy, &km.cx, &km.cy};
      *fields_p[j] += h;
      *fields_m[j] -= h;
      const Eigen::Vector2d fd =
          (Warp(pose, kp).apply(u, v, depth).pixel - Warp(pose, km).apply(u, v, depth).pixel) /
          (2.0 * h);
      for (int r = 0; r < 2; ++r) g_intr.add(jac.d_intrinsics(r, j), fd[r], where("intrinsics"));
    }
  }
}

void check_bilinear(const GradcheckOptions& opt, Rng& rng, GroupAccumulator& acc) {
  const double h = opt.step;
  const ImageBuffer img = random_smooth_image(rng, opt.height, opt.width, opt.channels);
  for (int n = 0; n < opt.geometry_configs; ++n) {
    // Stay away from cell boundaries so +-h never changes the taps.
    const double x = rng.uniform_int(0, opt.width - 2) + rng.uniform(0.01, 0.99);
    const double y = rng.uniform_int(0, opt.height - 2) + rng.uniform(0.01, 0.99);
    const double u = x + 0.5;
    const double v = y + 0.5;
    const auto cell = *locate_cell(u, v, img.width(), img.height());
    for (int c = 0; c < img.channels(); ++c) {
      const Eigen::Vector2d g = bilinear_gradient(img, cell, c);
      const double fu = (bilinear_value(img, *locate_cell(u + h, v, img.width(), img.height()), c) -
                         bilinear_value(img, *locate_cell(u - h, v, img.width(), img.height()), c)) /
                        (2.0 * h);
      const double fv = (bilinear_value(img, *locate_cell(u, v + h, img.width(), img.height()), c) -
                         bilinear_value(img, *locate_cell(u, v - h, img.width(), img.height()), c)) /
                        (2.0 * h);
      auto where = [n] { return "sample " + std::to_string(n); };
      acc.add(g.x(), fu, where);
      acc.add(g.y(), fv, where);
    }
  }
}

struct LossScene {
  ImageBuffer target;
  std::vector<ImageBuffer> supports;
  SceneState state;
};

LossScene random_loss_scene(const GradcheckOptions& opt, Rng& rng) {
  LossScene s;
  s.target = random_smooth_image(rng, opt.height, opt.width, opt.channels);
  for (int i = 0; i < opt.supports; ++i) {
    s.supports.push_back(random_smooth_image(rng, opt.height, opt.width, opt.channels));
  }
  s.state = random_scene_state(rng, opt.height, opt.width, opt.supports);
  return s;
}

void check_loss_scene(const LossScene& scene, int index, double h, GroupAccumulator& g_logits,
                      GroupAccumulator& g_pose, GroupAccumulator& g_intr) {
  const LossConfig config;
  SceneGradients grads;
  ActiveSet active;
  total_loss(scene.state, scene.target, scene.supports, config, &grads, nullptr, &active);
  auto eval = [&](const SceneState& st) {
    return total_loss(st, scene.target, scene.supports, config, nullptr, &active).total;
  };

  for (std::size_t i = 0; i < scene.state.logits.size(); ++i) {
    SceneState p = scene.state;
    SceneState m = scene.state;
    p.logits[i] += h;
    m.logits[i] -= h;
    const double fd = (eval(p) - eval(m)) / (2.0 * h);
    g_logits.add(grads.logits[i], fd,
                 [&] { return "scene " + std::to_string(index) + " pixel " + std::to_string(i); });
  }
  for (std::size_t s = 0; s < scene.state.poses.size(); ++s) {
    for (int j = 0; j < 6; ++j) {
      SceneState p = scene.state;
      SceneState m = scene.state;
      Vector6d pp = p.poses[s].params();
      Vector6d pm = pp;
      pp[j] += h;
      pm[j] -= h;
      p.poses[s] = PoseSE3::from_params(pp);
      m.poses[s] = PoseSE3::from_params(pm);
      const double fd = (eval(p) - eval(m)) / (2.0 * h);
      g_pose.add(grads.poses[s][j], fd, [&] {
        return "scene " + std::to_string(index) + " support " + std::to_string(s) + " param " +
               std::to_string(j);
      });
    }
  }
  for (int j = 0; j < 4; ++j) {
    SceneState p = scene.state;
    SceneState m = scene.state;
    p.intrinsics_raw[j] += h;
    m.intrinsics_raw[j] -= h;
    const double fd = (eval(p) - eval(m)) / (2.0 * h);
    g_intr.add(grads.intrinsics_raw[j], fd,
               [&] { return "scene " + std::to_string(index) + " raw " + std::to_string(j); });
  }
}

void check_intrinsics_map(const GradcheckOptions& opt, Rng& rng, GroupAccumulator& acc) {
  const double h = opt.step;
  for (int n = 0; n < opt.geometry_configs; ++n) {
    RawIntrinsics raw;
    for (auto& r : raw) r = rng.uniform(-3.0, 3.0);
    const auto d = intrinsics_from_raw_derivative(raw, opt.width, opt.height);
    for (int j = 0; j < 4; ++j) {
      RawIntrinsics p = raw;
      RawIntrinsics m = raw;
      p[j] += h;
      m[j] -= h;
      const auto kp = intrinsics_from_raw(p, opt.width, opt.height);
      const auto km = intrinsics_from_raw(m, opt.width, opt.height);
      const double vp[] = {kp.fx, kp.fy, kp.cx, kp.cy};
      const double vm[] = {km.fx, km.fy, km.cx, km.cy};
      acc.add(d[j], (vp[j] - vm[j]) / (2.0 * h),
              [n, j] { return "sample " + std::to_string(n) + " raw " + std::to_string(j); });
    }
  }
}

}  // namespace

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

bool GradcheckReport::passed() const {
  return std::all_of(groups.begin(), groups.end(), [](const GroupResult& g) { return g.passed(); });
}

ImageBuffer random_smooth_image(Rng& rng, int height, int width, int channels) {
  std::vector<double> data(static_cast<std::size_t>(height) * width * channels, 0.5);
  for (int k = 0; k < channels; ++k) {
    for (int wave = 0; wave < 3; ++wave) {
      const double period = rng.uniform(3.0, 10.0);
      const double angle = rng.uniform(0.0, M_PI);
      const double phase = rng.uniform(0.0, 2.0 * M_PI);
      const double wx = 2.0 * M_PI / period * std::cos(angle);
      const double wy = 2.0 * M_PI / period * std::sin(angle);
      for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
          data[(static_cast<std::size_t>(r) * width + c) * channels + k] +=
              0.13 * std::sin(wx * (c + 0.5) + wy * (r + 0.5) + phase);
        }
      }
    }
  }
  return ImageBuffer(height, width, channels, std::move(data));
}

SceneState random_scene_state(Rng& rng, int height, int width, int supports) {
  std::vector<int> offsets;
  for (int i = 0; i < supports; ++i) offsets.push_back(i % 2 == 0 ? -(i / 2 + 1) : i / 2 + 1);
  SceneState s = SceneState::initial(height, width, offsets);
  for (auto& l : s.logits.values()) l = logit(0.25) + 0.3 * rng.normal();
  for (auto& p : s.poses) {
    for (int j = 0; j < 3; ++j) {
      p.rotation[j] = 0.02 * rng.normal();
      p.translation[j] = 0.03 * rng.normal();
    }
  }
  s.intrinsics_raw[0] += 0.1 * rng.normal();
  s.intrinsics_raw[1] += 0.1 * rng.normal();
  s.intrinsics_raw[2] = 0.2 * rng.normal();
  s.intrinsics_raw[3] = 0.2 * rng.normal();
  return s;
}

void GradcheckOptions::validate() const {
  if (scenes < 0 || geometry_configs < 0 || height < 4 || width < 4 || supports < 1 || !(step > 0.0)) {
    throw std::invalid_argument("gradcheck: invalid sizes or step");
  }
  if (channels != 1 && channels != 3) throw std::invalid_argument("gradcheck: channels must be 1 or 3");
  if (!corrupt.empty() &&
      std::none_of(kGradcheckGroups.begin(), kGradcheckGroups.end(), [&](const char* g) { return corrupt == g; })) {
    throw std::invalid_argument("gradcheck: unknown group '" + corrupt + "'");
  }
}

GradcheckReport run_gradcheck(const GradcheckOptions& opt) {
  opt.validate();
  Rng rng(opt.seed);
  auto make = [&](const char* name, double tol, double floor) {
    return GroupAccumulator(name, tol, floor, opt.corrupt == name);
  };
  GroupAccumulator geo_depth = make("geometry.depth", opt.geometry_tolerance, kGeometryFloor);
  GroupAccumulator geo_pose = make("geometry.pose", opt.geometry_tolerance, kGeometryFloor);
  GroupAccumulator geo_intr = make("geometry.intrinsics", opt.geometry_tolerance, kGeometryFloor);
  GroupAccumulator bilinear = make("bilinear", opt.geometry_tolerance, kGeometryFloor);
  GroupAccumulator loss_logits = make("loss.logits", opt.loss_tolerance, kLossFloor);
  GroupAccumulator loss_pose = make("loss.pose", opt.loss_tolerance, kLossFloor);
  GroupAccumulator loss_intr = make("loss.intrinsics", opt.loss_tolerance, kLossFloor);
  GroupAccumulator raw_map = make("intrinsics_from_raw", opt.intrinsics_tolerance, kIntrinsicsFloor);

  check_geometry(opt, rng, geo_depth, geo_pose, geo_intr);
  check_bilinear(opt, rng, bilinear);
  for (int s = 0; s < opt.scenes; ++s) {
    const LossScene scene = random_loss_scene(opt, rng);
    check_loss_scene(scene, s, opt.step, loss_logits, loss_pose, loss_intr);
  }
  check_intrinsics_map(opt, rng, raw_map);

  GradcheckReport report;
  for (const auto* g : {&geo_depth, &geo_pose, &geo_intr, &bilinear, &loss_logits, &loss_pose,
                        &loss_intr, &raw_map}) {
    report.groups.push_back(g->result());
  }
  return report;
}

std::vector<double> gradcheck_step_sweep(const GradcheckOptions& opt,
                                         const std::vector<double>& steps) {
  std::vector<double> worst;
  for (double h : steps) {
    Rng rng(opt.seed);
    GroupAccumulator logits("loss.logits", opt.loss_tolerance, kLossFloor, false);
    GroupAccumulator pose("loss.pose", opt.loss_tolerance, kLossFloor, false);
    GroupAccumulator intr("loss.intrinsics", opt.loss_tolerance, kLossFloor, false);
    for (int s = 0; s < opt.scenes; ++s) {
      const LossScene scene = random_loss_scene(opt, rng);
      check_loss_scene(scene, s, h, logits, pose, intr);
    }
    worst.push_back(std::max({logits.result().worst_relative_error,
                              pose.result().worst_relative_error,
                              intr.result().worst_relative_error}));
  }
  return worst;
}

}  // namespace mdepth
