#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "mdepth/eval.hpp"
#include "mdepth/objective.hpp"
#include "mdepth/optimizer.hpp"
#include "test_util.hpp"

namespace mdepth {
namespace {

double median_scaled_abs_rel(const SceneState& state, const Grid<double>& gt) {
  const DepthMap truth(gt);
  return abs_rel(median_scale(state.depth(), truth), truth);
}

TEST(DepthRange, Endpoints) {
  const DepthRange r{0.1, 100.0};
  EXPECT_NEAR(disparity_to_depth(1.0 - 1e-12, r), 0.1, 1e-9);
  EXPECT_NEAR(disparity_to_depth(1e-12, r), 100.0, 1e-6);
}

TEST(DepthRange, MidpointExample) {
  const DepthRange r{0.1, 100.0};
  const double oracle = 1.0 / (0.5 * (1.0 / 0.1 - 1.0 / 100.0) + 1.0 / 100.0);
  EXPECT_NEAR(disparity_to_depth(0.5, r), oracle, 1e-15);
  EXPECT_NEAR(disparity_to_depth(0.5, r), 0.1998, 1e-4);
}

TEST(DepthRange, StrictlyDecreasingWithNegativeDerivative) {
  const DepthRange r{0.5, 40.0};
  double prev = std::numeric_limits<double>::infinity();
  for (int i = 1; i < 1000; ++i) {
    const double d = i / 1000.0;
    const double z = disparity_to_depth(d, r);
    EXPECT_LT(z, prev);
    EXPECT_LT(disparity_to_depth_derivative(d, r), 0.0);
    EXPECT_NEAR(depth_to_disparity(z, r), d, 1e-12);
    prev = z;
  }
}

TEST(DepthRange, RejectsInvertedRange) {
  EXPECT_THROW(disparity_to_depth(0.5, DepthRange{10.0, 1.0}), std::invalid_argument);
  EXPECT_THROW(disparity_to_depth(0.5, DepthRange{1.0, 1.0}), std::invalid_argument);
}

TEST(RawIntrinsics, CenteredPrincipalPoint) {
  const Intrinsics k = intrinsics_from_raw({0.3, 0.3, 0.0, 0.0}, 640, 480);
  EXPECT_EQ(k.cx, 320.0);
  EXPECT_EQ(k.cy, 240.0);
}

TEST(RawIntrinsics, UnitSoftplusGivesWidth) {
  const double raw = std::log(std::exp(1.0) - 1.0);
  EXPECT_NEAR(raw, 0.5413, 1e-4);
  const Intrinsics k = intrinsics_from_raw({raw, raw, 0.0, 0.0}, 640, 480);
  EXPECT_NEAR(k.fx, 640.0, 1e-9);
  EXPECT_NEAR(k.fy, 480.0, 1e-9);
}

TEST(RawIntrinsics, AlwaysValid) {
  const Intrinsics k = intrinsics_from_raw({-20.0, -20.0, 25.0, -25.0}, 64, 48);
  EXPECT_GT(k.fx, 0.0);
  EXPECT_GT(k.fy, 0.0);
  EXPECT_NO_THROW(k.validate());
}

TEST(RawIntrinsics, RoundTrip) {
  const Intrinsics k = make_intrinsics(123.0, 77.0, 30.0, 20.0, 64, 48);
  const Intrinsics back = intrinsics_from_raw(intrinsics_to_raw(k), 64, 48);
  EXPECT_NEAR(back.fx, k.fx, 1e-9);
  EXPECT_NEAR(back.fy, k.fy, 1e-9);
  EXPECT_NEAR(back.cx, k.cx, 1e-9);
  EXPECT_NEAR(back.cy, k.cy, 1e-9);
}

TEST(RawIntrinsics, DerivativeMatchesCentralDifferences) {
  Rng rng(1);
  const double h = 1e-5;
  for (int i = 0; i < 100; ++i) {
    RawIntrinsics raw{rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3)};
    const auto d = intrinsics_from_raw_derivative(raw, 48, 32);
    for (int q = 0; q < 4; ++q) {
      RawIntrinsics p = raw, m = raw;
      p[q] += h;
      m[q] -= h;
      const Intrinsics kp = intrinsics_from_raw(p, 48, 32), km = intrinsics_from_raw(m, 48, 32);
      const double vp[] = {kp.fx, kp.fy, kp.cx, kp.cy}, vm[] = {km.fx, km.fy, km.cx, km.cy};
      const double n = (vp[q] - vm[q]) / (2 * h);
      EXPECT_LT(std::abs(d[q] - n) / std::max({std::abs(d[q]), std::abs(n), 1e-8}), 1e-5) << q;
    }
  }
}

TEST(SceneStateInit, Defaults) {
  const SceneState s = SceneState::initial(4, 6, {-1, 1});
  const DisparityField d = s.disparity();
  for (double v : d.values().values()) EXPECT_NEAR(v, 0.3, 1e-15);
  EXPECT_EQ(s.poses.size(), 2u);
  EXPECT_EQ(s.poses[0].params(), Vector6d::Zero());
  const Intrinsics k = s.intrinsics();
  EXPECT_NEAR(k.fx, 6.0, 1e-12);
  EXPECT_NEAR(k.fy, 4.0, 1e-12);
  EXPECT_EQ(k.cx, 3.0);
  EXPECT_EQ(k.cy, 2.0);
}

TEST(SupportOffsets, FixedMode) {
  Rng rng(0);
  EXPECT_EQ(sample_support_offsets(rng, OffsetMode::fixed), (std::vector<int>{-1, 1}));
}

TEST(SupportOffsets, DegenerateRange) {
  Rng rng(4);
  for (int i = 0; i < 50; ++i) {
    EXPECT_EQ(sample_support_offsets(rng, OffsetMode::randomized, 1, 1), (std::vector<int>{-1, 1}));
  }
}

TEST(SupportOffsets, SeededAndCoversRange) {
  Rng a(42), b(42);
  EXPECT_EQ(sample_support_offsets(a, OffsetMode::randomized, 1, 3),
            sample_support_offsets(b, OffsetMode::randomized, 1, 3));
  std::set<int> seen;
  Rng rng(9);
  for (int i = 0; i < 500; ++i) {
    const std::vector<int> o = sample_support_offsets(rng, OffsetMode::randomized, 1, 3);
    ASSERT_EQ(o.size(), 2u);
    EXPECT_LE(-3, o[0]);
    EXPECT_LE(o[0], -1);
    EXPECT_LE(1, o[1]);
    EXPECT_LE(o[1], 3);
    seen.insert(o[0]);
    seen.insert(o[1]);
  }
  EXPECT_EQ(seen, (std::set<int>{-3, -2, -1, 1, 2, 3}));
}

TEST(SupportOffsets, RejectsBadRange) {
  Rng rng(0);
  EXPECT_THROW(sample_support_offsets(rng, OffsetMode::randomized, 3, 1), std::invalid_argument);
  EXPECT_THROW(sample_support_offsets(rng, OffsetMode::randomized, 0, 2), std::invalid_argument);
}

TEST(OptimizerConfig, Validation) {
  OptimizerConfig c;
  EXPECT_NO_THROW(c.validate());
  c.iterations = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.pyramid_levels = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.offsets = {0, 1};
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  EXPECT_EQ(c.loss.ssim_weight, 0.85);
  EXPECT_EQ(c.learning_rates.disparity, 1e-2);
  EXPECT_EQ(c.learning_rates.pose, 1e-3);
  EXPECT_EQ(c.learning_rates.intrinsics, 1e-3);
  EXPECT_FALSE(c.forward_motion_constraint);
}

TEST(Optimize, GroundTruthIsAFixedPoint) {
  const SyntheticScene scene = test::plane_scene();
  const SceneState gt = scene.ground_truth(test::kSceneRange);
  OptimizerConfig c;
  c.iterations = 300;
  c.range = test::kSceneRange;
  const OptimizeResult r = optimize(scene.target, scene.supports, c, gt);
  for (const LossReport& l : r.trace) EXPECT_LT(l.total, 1e-6);
  double moved = 0.0;
  for (std::size_t j = 0; j < gt.logits.size(); ++j) moved = std::max(moved, std::abs(r.state.logits[j] - gt.logits[j]));
  for (std::size_t k = 0; k < gt.poses.size(); ++k) {
    moved = std::max(moved, (r.state.poses[k].params() - gt.poses[k].params()).cwiseAbs().maxCoeff());
  }
  EXPECT_LT(moved, 1e-3);
}

TEST(Optimize, RecoversPlaneDepthWithKnownPose) {
  const SyntheticScene scene = test::plane_scene();
  const OptimizeResult r =
      optimize(scene.target, scene.supports, test::depth_only_config(), test::known_geometry_init(scene));
  EXPECT_LT(median_scaled_abs_rel(r.state, scene.depth), 5.0);
}

TEST(Optimize, RecoversFocalLength) {
  const SyntheticScene scene = test::plane_scene();
  SceneState init = scene.ground_truth(test::kSceneRange);
  Intrinsics k = scene.intrinsics;
  k.fx *= 1.2;
  init.intrinsics_raw = intrinsics_to_raw(k);
  OptimizerConfig c;
  c.iterations = 2000;
  c.range = test::kSceneRange;
  c.optimize_depth = false;
  c.optimize_pose = false;
  c.intrinsics_mode = IntrinsicsMode::learned;
  const OptimizeResult r = optimize(scene.target, scene.supports, c, init);
  EXPECT_LT(std::abs(r.state.intrinsics().fx - scene.intrinsics.fx) / scene.intrinsics.fx, 0.05);
}

TEST(Optimize, FixedIntrinsicsNeverChange) {
  const SyntheticScene scene = test::plane_scene();
  const SceneState init = test::known_geometry_init(scene);
  OptimizerConfig c = test::depth_only_config(100);
  c.optimize_pose = true;
  const OptimizeResult r = optimize(scene.target, scene.supports, c, init);
  EXPECT_EQ(r.state.intrinsics_raw, init.intrinsics_raw);
}

TEST(Optimize, LossIsWindowNonIncreasing) {
  for (SurfaceKind surface : {SurfaceKind::fronto_parallel, SurfaceKind::slanted, SurfaceKind::step}) {
    SyntheticSpec spec;
    spec.surface = surface;
    const SyntheticScene scene = make_synthetic_scene(spec, 3);
    const OptimizeResult r =
        optimize(scene.target, scene.supports, test::depth_only_config(600), test::known_geometry_init(scene));
    ASSERT_EQ(r.trace.size(), 600u);
    for (std::size_t i = 50; i < r.trace.size(); ++i) {
      double worst = 0.0;
      for (std::size_t j = i - 50; j < i; ++j) worst = std::max(worst, r.trace[j].total);
      ASSERT_LE(r.trace[i].total, worst) << "iteration " << i;
    }
  }
}

TEST(Optimize, DeterministicTraces) {
  const SyntheticScene scene = test::plane_scene(11);
  OptimizerConfig c = test::depth_only_config(200);
  c.optimize_pose = true;
  const OptimizeResult a = optimize(scene.target, scene.supports, c);
  const OptimizeResult b = optimize(scene.target, scene.supports, c);
  ASSERT_EQ(a.trace.size(), b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) EXPECT_EQ(a.trace[i].total, b.trace[i].total);
  EXPECT_EQ(a.state.logits, b.state.logits);
}

TEST(Optimize, ScaleGaugeAtConvergence) {
  const SyntheticScene scene = test::plane_scene();
  const OptimizeResult r =
      optimize(scene.target, scene.supports, test::depth_only_config(), test::known_geometry_init(scene));
  const Grid<double> depth = r.state.depth_values();
  const Intrinsics k = r.state.intrinsics();
  const double base = reconstruction_loss(depth, r.state.poses, k, scene.target, scene.supports).total;
  for (double s : {0.01, 0.37, 2.5, 100.0}) {
    Grid<double> scaled = depth;
    for (std::size_t j = 0; j < scaled.size(); ++j) scaled[j] *= s;
    std::vector<PoseSE3> poses = r.state.poses;
    for (PoseSE3& p : poses) p.translation *= s;
    EXPECT_LT(std::abs(reconstruction_loss(scaled, poses, k, scene.target, scene.supports).total - base), 1e-9);
  }
}

TEST(Optimize, BackwardMotionMatchesForwardMirror) {
  const SyntheticScene fwd = test::plane_scene(5, MotionKind::forward);
  const SyntheticScene bwd = test::plane_scene(5, MotionKind::backward);
  OptimizerConfig c = test::depth_only_config(1000);
  c.optimize_pose = true;
  const OptimizeResult a = optimize(fwd.target, fwd.supports, c, test::known_geometry_init(fwd));
  const OptimizeResult b = optimize(bwd.target, bwd.supports, c, test::known_geometry_init(bwd));
  const double la = a.trace.back().reconstruction, lb = b.trace.back().reconstruction;
  EXPECT_LT(std::abs(la - lb), 0.1 * std::max(la, lb)) << la << " " << lb;
}

TEST(Optimize, ForwardConstraintBlocksBackwardMotion) {
  const SyntheticScene bwd = test::plane_scene(5, MotionKind::backward);
  OptimizerConfig c = test::depth_only_config(1000);
  c.optimize_pose = true;
  const OptimizeResult free = optimize(bwd.target, bwd.supports, c, test::known_geometry_init(bwd));
  c.forward_motion_constraint = true;
  const OptimizeResult constrained = optimize(bwd.target, bwd.supports, c, test::known_geometry_init(bwd));
  EXPECT_GT(constrained.trace.back().reconstruction, free.trace.back().reconstruction);
}

TEST(Optimize, NonFiniteLossAborts) {
  const SyntheticScene scene = test::plane_scene();
  OptimizerConfig c = test::depth_only_config(50);
  c.intrinsics_mode = IntrinsicsMode::learned;
  c.learning_rates.intrinsics = 1e308;
  try {
    optimize(scene.target, scene.supports, c, test::known_geometry_init(scene));
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_FALSE(std::string(e.what()).empty());
  }
}

TEST(Optimize, RejectsMismatchedSupports) {
  const SyntheticScene scene = test::plane_scene();
  const std::vector<ImageBuffer> one{scene.supports[0]};
  EXPECT_THROW(optimize(scene.target, one, test::depth_only_config(10)), std::invalid_argument);
  const std::vector<ImageBuffer> wrong{scene.supports[0], ImageBuffer::filled(8, 8, 3, 0.5)};
  EXPECT_THROW(optimize(scene.target, wrong, test::depth_only_config(10)), std::invalid_argument);
}

TEST(CoarseToFine, SingleLevelMatchesOptimize) {
  const SyntheticScene scene = test::plane_scene();
  OptimizerConfig c = test::depth_only_config(200);
  const SceneState init = test::known_geometry_init(scene);
  const OptimizeResult a = optimize(scene.target, scene.supports, c, init);
  const OptimizeResult b = coarse_to_fine(scene.target, scene.supports, c, init);
  ASSERT_EQ(a.trace.size(), b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) EXPECT_EQ(a.trace[i].total, b.trace[i].total);
  EXPECT_EQ(a.state.logits, b.state.logits);
}

TEST(CoarseToFine, PyramidHelpsOnSlantedPlane) {
  SyntheticSpec spec;
  spec.surface = SurfaceKind::slanted;
  const SyntheticScene scene = make_synthetic_scene(spec, 7);
  OptimizerConfig c = test::depth_only_config(1500);
  const SceneState init = test::known_geometry_init(scene);
  const OptimizeResult single = coarse_to_fine(scene.target, scene.supports, c, init);
  c.pyramid_levels = 3;
  const OptimizeResult pyramid = coarse_to_fine(scene.target, scene.supports, c, init);
  EXPECT_EQ(pyramid.trace.size(), single.trace.size());
  EXPECT_LE(pyramid.trace.back().total, single.trace.back().total);
}

TEST(CoarseToFine, RejectsTooSmallImage) {
  const ImageBuffer t = ImageBuffer::filled(3, 8, 1, 0.5);
  OptimizerConfig c;
  c.iterations = 10;
  c.pyramid_levels = 3;
  EXPECT_THROW(coarse_to_fine(t, {t, t}, c), std::invalid_argument);
}

TEST(Pyramid, BoxDownsample) {
  const ImageBuffer img(2, 3, 1, {0.0, 0.4, 0.9, 0.2, 0.6, 0.9});
  const ImageBuffer d = downsample2(img);
  EXPECT_EQ(d.height(), 1);
  EXPECT_EQ(d.width(), 1);
  EXPECT_NEAR(d.at(0, 0), 0.3, 1e-15);
  const Intrinsics k = downsample2(make_intrinsics(100, 80, 32, 24, 64, 48));
  EXPECT_EQ(k.fx, 50.0);
  EXPECT_EQ(k.cx, 16.0);
  EXPECT_EQ(k.width, 32);
}

}  // namespace
}  // namespace mdepth
