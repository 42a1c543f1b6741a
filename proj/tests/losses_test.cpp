#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "mdepth/gradcheck.hpp"
#include "mdepth/losses.hpp"
#include "mdepth/objective.hpp"
#include "test_util.hpp"

namespace mdepth {
namespace {

BoolMask all_true(int h, int w) { return BoolMask(h, w, 1); }

LossMap loss_map(int h, int w, std::vector<double> values) {
  return LossMap{Grid<double>(h, w, std::move(values)), all_true(h, w)};
}

TEST(Ssim, IdenticalIsOne) {
  Rng rng(1);
  const ImageBuffer x = test::random_image(rng, 9, 7, 3);
  const Grid<double> s = ssim(x, x);
  for (double v : s.values()) EXPECT_NEAR(v, 1.0, 1e-12);
}

TEST(Ssim, ConstantZeroVersusOne) {
  const Grid<double> s = ssim(ImageBuffer::filled(5, 5, 1, 0.0), ImageBuffer::filled(5, 5, 1, 1.0));
  const double expected = kSsimC1 / (1.0 + kSsimC1);
  for (double v : s.values()) EXPECT_NEAR(v, expected, 1e-15);
  EXPECT_NEAR(expected, 9.999e-5, 1e-8);
}

TEST(Ssim, SymmetricAndBounded) {
  Rng rng(2);
  for (int i = 0; i < 20; ++i) {
    const ImageBuffer x = test::random_image(rng, 8, 11, 3);
    const ImageBuffer y = test::random_image(rng, 8, 11, 3);
    const Grid<double> a = ssim(x, y), b = ssim(y, x);
    for (std::size_t j = 0; j < a.size(); ++j) {
      EXPECT_NEAR(a[j], b[j], 1e-12);
      EXPECT_GE(a[j], -1.0);
      EXPECT_LE(a[j], 1.0);
    }
  }
}

TEST(Ssim, ShapeMismatchRejected) {
  EXPECT_THROW(ssim(ImageBuffer::filled(3, 3, 1, 0.5), ImageBuffer::filled(3, 4, 1, 0.5)), std::invalid_argument);
}

TEST(Photometric, DefaultWeight) { EXPECT_EQ(kDefaultSsimWeight, 0.85); }

TEST(Photometric, IdenticalIsExactlyZero) {
  Rng rng(3);
  const ImageBuffer x = test::random_image(rng, 6, 6, 3);
  const LossMap l = photometric_loss(x, x, all_true(6, 6));
  for (double v : l.values.values()) EXPECT_EQ(v, 0.0);
}

TEST(Photometric, ConstantZeroVersusOne) {
  const LossMap l =
      photometric_loss(ImageBuffer::filled(4, 4, 1, 0.0), ImageBuffer::filled(4, 4, 1, 1.0), all_true(4, 4));
  const double oracle = 0.85 * (1.0 - kSsimC1 / (1.0 + kSsimC1)) / 2.0 + 0.15;
  for (double v : l.values.values()) EXPECT_NEAR(v, oracle, 1e-15);
  EXPECT_NEAR(oracle, 0.57496, 1e-5);
}

TEST(Photometric, MaskedSampleInvalidatesItsWindow) {
  Rng rng(4);
  const ImageBuffer x = test::random_image(rng, 7, 7, 1);
  BoolMask mask = all_true(7, 7);
  mask(3, 3) = 0;
  const LossMap l = photometric_loss(x, x, mask);
  for (int r = 0; r < 7; ++r) {
    for (int c = 0; c < 7; ++c) {
      const bool near = std::abs(r - 3) <= 1 && std::abs(c - 3) <= 1;
      EXPECT_EQ(l.valid(r, c) != 0, !near);
    }
  }
}

TEST(MinReconstruction, SingleFrameIsIdentity) {
  const std::vector<LossMap> maps{loss_map(1, 3, {0.1, 0.5, 0.3})};
  const MinReconstruction m = min_reconstruction(maps);
  EXPECT_EQ(m.loss.values, maps[0].values);
}

TEST(MinReconstruction, TwoFrameExample) {
  const std::vector<LossMap> maps{loss_map(1, 2, {2, 5}), loss_map(1, 2, {3, 1})};
  const MinReconstruction m = min_reconstruction(maps);
  EXPECT_EQ(m.loss.values[0], 2.0);
  EXPECT_EQ(m.loss.values[1], 1.0);
  EXPECT_EQ(m.argmin[0], 0);
  EXPECT_EQ(m.argmin[1], 1);
}

TEST(MinReconstruction, EmptyRejected) {
  EXPECT_THROW(min_reconstruction(std::vector<LossMap>{}), std::invalid_argument);
}

TEST(MinReconstruction, MatchesBruteForce) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<LossMap> maps;
    for (int k = 0; k < 3; ++k) {
      LossMap m{test::random_grid(rng, 6, 5, 0, 1), BoolMask(6, 5, 0)};
      for (std::size_t j = 0; j < m.valid.size(); ++j) m.valid[j] = rng.bernoulli(0.6);
      maps.push_back(m);
    }
    const MinReconstruction out = min_reconstruction(maps);
    for (std::size_t j = 0; j < 30; ++j) {
      double best = std::numeric_limits<double>::infinity();
      int arg = -1;
      for (int k = 0; k < 3; ++k) {
        if (maps[k].valid[j] && maps[k].values[j] < best) {
          best = maps[k].values[j];
          arg = k;
        }
      }
      EXPECT_EQ(out.loss.valid[j] != 0, arg >= 0);
      EXPECT_EQ(out.argmin[j], arg);
      if (arg >= 0) {
        EXPECT_EQ(out.loss.values[j], best);
        for (int k = 0; k < 3; ++k) {
          if (maps[k].valid[j]) {
            EXPECT_LE(out.loss.values[j], maps[k].values[j]);
          }
        }
      }
    }
  }
}

TEST(Automask, StaticFrameMasksEverything) {
  const std::vector<LossMap> synth{loss_map(1, 3, {0.2, 0.0, 0.1})};
  const std::vector<LossMap> ident{loss_map(1, 3, {0.0, 0.0, 0.0})};
  EXPECT_EQ(count_true(automask(synth, ident)), 0u);
}

TEST(Automask, StrictlyBetterKeepsEverything) {
  const std::vector<LossMap> synth{loss_map(1, 3, {0.1, 0.1, 0.1})};
  const std::vector<LossMap> ident{loss_map(1, 3, {0.2, 0.3, 0.4})};
  EXPECT_EQ(count_true(automask(synth, ident)), 3u);
}

TEST(Automask, MatchesBruteForceAndIsScaleConsistent) {
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<LossMap> synth, ident;
    for (int k = 0; k < 2; ++k) {
      synth.push_back(LossMap{test::random_grid(rng, 5, 5, 0, 1), all_true(5, 5)});
      ident.push_back(LossMap{test::random_grid(rng, 5, 5, 0, 1), all_true(5, 5)});
    }
    // exact ties must be dropped
    synth[0].values[0] = 0.0;
    synth[1].values[0] = 0.5;
    ident[0].values[0] = 0.0;
    const BoolMask m = automask(synth, ident);
    for (std::size_t j = 0; j < 25; ++j) {
      const double s = std::min(synth[0].values[j], synth[1].values[j]);
      const double i = std::min(ident[0].values[j], ident[1].values[j]);
      EXPECT_EQ(m[j] != 0, s < i);
    }
    const double c = rng.uniform(0.01, 100);
    for (auto* list : {&synth, &ident}) {
      for (auto& l : *list) {
        for (std::size_t j = 0; j < 25; ++j) l.values[j] *= c;
      }
    }
    EXPECT_EQ(automask(synth, ident), m);
  }
}

TEST(Smoothness, ConstantDisparityIsZero) {
  Rng rng(7);
  EXPECT_EQ(smoothness(DisparityField(Grid<double>(6, 6, 0.4)), test::random_image(rng, 6, 6, 3)), 0.0);
}

/// Mean normalized horizontal ramp d = (c + 1) / (W + 1) over a constant image.
double ramp_oracle(int w) {
  const double mean = (w + 1) / 2.0;
  return 1.0 / mean;  // every |dx| is 1 / mean, every |dy| is 0
}

Grid<double> ramp(int h, int w) {
  Grid<double> g(h, w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) g(r, c) = (c + 1.0) / (w + 1.0);
  }
  return g;
}

TEST(Smoothness, RampOverConstantImage) {
  const double s = smoothness(DisparityField(ramp(4, 5)), ImageBuffer::filled(4, 5, 1, 0.3));
  EXPECT_NEAR(s, ramp_oracle(5), 1e-12);
  EXPECT_NEAR(s, 1.0 / 3.0, 1e-12);
}

TEST(Smoothness, ImageEdgeLowersPenalty) {
  std::vector<double> img(4 * 5);
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 5; ++c) img[r * 5 + c] = c * 0.25;
  }
  const double edged = smoothness(DisparityField(ramp(4, 5)), ImageBuffer(4, 5, 1, img));
  EXPECT_LT(edged, smoothness(DisparityField(ramp(4, 5)), ImageBuffer::filled(4, 5, 1, 0.3)));
  EXPECT_GE(edged, 0.0);
}

TEST(TotalLoss, GroundTruthReconstructsTarget) {
  const SyntheticScene scene = test::plane_scene();
  ASSERT_TRUE(scene.exact);
  const LossReport r = total_loss(scene.ground_truth(test::kSceneRange), scene.target, scene.supports);
  EXPECT_LT(r.reconstruction, 1e-6);
  EXPECT_EQ(r.total, r.reconstruction + r.smoothness_weight * r.smoothness);
}

TEST(TotalLoss, StaticPairIsFullyMasked) {
  Rng rng(8);
  const ImageBuffer frame = test::random_image(rng, 12, 16, 3);
  SceneState s = SceneState::initial(12, 16, {-1, 1});
  s.poses[0].translation = Eigen::Vector3d(0.05, 0, 0);
  s.poses[1].translation = Eigen::Vector3d(-0.05, 0, 0);
  const std::vector<ImageBuffer> supports{frame, frame};
  const LossReport r = total_loss(s, frame, supports);
  EXPECT_EQ(r.automask_coverage, 0.0);
  EXPECT_EQ(r.reconstruction, 0.0);
  EXPECT_TRUE(r.all_masked);
}

TEST(TotalLoss, ReportIsConsistent) {
  Rng rng(9);
  for (int i = 0; i < 5; ++i) {
    const SceneState s = random_scene_state(rng, 16, 24, 2);
    const ImageBuffer target = random_smooth_image(rng, 16, 24, 3);
    const std::vector<ImageBuffer> supports{random_smooth_image(rng, 16, 24, 3), random_smooth_image(rng, 16, 24, 3)};
    const LossReport r = total_loss(s, target, supports);
    EXPECT_DOUBLE_EQ(r.total, r.reconstruction + r.smoothness_weight * r.smoothness);
    EXPECT_GE(r.automask_coverage, 0.0);
    EXPECT_LE(r.automask_coverage, 1.0);
    std::size_t won = 0;
    for (auto n : r.argmin_histogram) won += n;
    EXPECT_EQ(won, r.kept_pixels);
  }
}

TEST(Gradcheck, AllGroupsWithinTolerance) {
  const GradcheckReport report = run_gradcheck(GradcheckOptions{});
  for (const GroupResult& g : report.groups) {
    EXPECT_TRUE(g.passed()) << g.group << " worst " << g.worst_relative_error << " at " << g.where;
  }
  EXPECT_TRUE(report.passed());
}

TEST(Gradcheck, DetectsCorruptedGradient) {
  GradcheckOptions o;
  o.scenes = 3;
  o.geometry_configs = 10;
  o.corrupt = "loss.pose";
  EXPECT_FALSE(run_gradcheck(o).passed());
}

}  // namespace
}  // namespace mdepth
