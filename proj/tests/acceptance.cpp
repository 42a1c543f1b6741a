// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>
#include <string>

#include "mdepth/augment.hpp"
#include "mdepth/eval.hpp"
#include "mdepth/geometry.hpp"
#include "mdepth/gradcheck.hpp"
#include "mdepth/io.hpp"
#include "mdepth/losses.hpp"
#include "mdepth/objective.hpp"
#include "test_util.hpp"

namespace mdepth {
namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void check(bool ok, const std::string& what) {
    if (!ok && pass) detail << "first failure: " << what << "; ";
    pass = pass && ok;
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Criterion 5 and 6 share the converged plane solution.
struct Converged {
  SyntheticScene scene;
  OptimizeResult result;
};

const Converged& converged_plane() {
  static const Converged c = [] {
    Converged out{test::plane_scene(), {}};
    out.result = optimize(out.scene.target, out.scene.supports, test::depth_only_config(2000),
                          test::known_geometry_init(out.scene));
    return out;
  }();
  return c;
}

void geometry_oracle(Outcome& o) {
  Rng rng(101);
  const int h = 16, w = 24;
  double worst = 0.0;
  int configs = 0;
  for (; configs < 100; ++configs) {
    const Grid<double> depth = test::random_grid(rng, h, w, 1.0, 30.0);
    const PoseSE3 pose = test::random_pose(rng, 0.05, 0.3);
    const Intrinsics k =
        make_intrinsics(rng.uniform(15, 40), rng.uniform(15, 40), rng.uniform(8, 16), rng.uniform(5, 11), w, h);
    const FlowField f = reproject(DepthMap(depth), pose, k);
    const PixelGrid g = make_pixel_grid(h, w);
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        const Eigen::Vector2d q = test::reproject_oracle(g.u(c), g.v(r), depth(r, c), pose, k);
        worst = std::max({worst, std::abs(f.u(r, c) - q.x()), std::abs(f.v(r, c) - q.y())});
      }
    }
    const FlowField id = reproject(DepthMap(depth), PoseSE3::identity(), k);
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        o.check(id.u(r, c) == g.u(c) && id.v(r, c) == g.v(r) && id.valid(r, c), "identity pose moved a pixel");
      }
    }
  }
  o.check(worst < 1e-9, "oracle mismatch");
  o.detail << configs << " configs at 16x24, max |dp| " << worst << " px (tol 1e-9), identity exact";
}

void gradient_suite(Outcome& o) {
  const auto t0 = Clock::now();
  GradcheckOptions opt;
  opt.scenes = 20;
  opt.step = 1e-5;
  opt.loss_tolerance = 1e-3;
  const GradcheckReport report = run_gradcheck(opt);
  const double elapsed = seconds_since(t0);
  double worst = 0.0;
  for (const GroupResult& g : report.groups) {
    if (g.group.rfind("loss.", 0) == 0) {
      worst = std::max(worst, g.worst_relative_error);
      o.check(g.passed(), g.group);
      o.check(g.entries > 0, g.group + " has no entries");
    }
  }
  o.check(report.passed(), "a helper group failed");
  o.check(elapsed < 60.0, "runtime");
  o.detail << opt.scenes << " scenes, worst rel err " << worst << " (tol 1e-3), " << elapsed << " s (limit 60)";
}

void loss_constants(Outcome& o) {
  Rng rng(103);
  o.check(kDefaultSsimWeight == 0.85, "lambda");
  o.check(LossConfig{}.ssim_weight == 0.85, "loss config lambda");
  double worst_photo = 0.0, worst_ssim = 0.0;
  for (int i = 0; i < 10; ++i) {
    const ImageBuffer x = test::random_image(rng, 12, 17, 3);
    const LossMap l = photometric_loss(x, x, BoolMask(12, 17, 1), kDefaultSsimWeight);
    for (std::size_t j = 0; j < l.values.size(); ++j) worst_photo = std::max(worst_photo, std::abs(l.values[j]));
    const Grid<double> s = ssim(x, x);
    for (std::size_t j = 0; j < s.size(); ++j) worst_ssim = std::max(worst_ssim, std::abs(s[j] - 1.0));
  }
  o.check(worst_photo == 0.0, "photometric(x,x) != 0");
  o.check(worst_ssim == 0.0, "SSIM(x,x) != 1");
  int mismatches = 0;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<LossMap> maps;
    for (int k = 0; k < 4; ++k) {
      LossMap m{test::random_grid(rng, 7, 9, 0, 1), BoolMask(7, 9, 0)};
      for (std::size_t j = 0; j < m.valid.size(); ++j) m.valid[j] = rng.bernoulli(0.7);
      maps.push_back(m);
    }
    const MinReconstruction out = min_reconstruction(maps);
    for (std::size_t j = 0; j < maps[0].values.size(); ++j) {
      double best = std::numeric_limits<double>::infinity();
      for (const LossMap& m : maps) {
        if (m.valid[j]) best = std::min(best, m.values[j]);
      }
      const bool any = std::isfinite(best);
      if ((out.loss.valid[j] != 0) != any || (any && out.loss.values[j] != best)) ++mismatches;
    }
  }
  o.check(mismatches == 0, "min reconstruction");
  o.detail << "lambda 0.85, photometric(x,x) max " << worst_photo << ", |SSIM(x,x)-1| max " << worst_ssim
           << ", min-reconstruction mismatches " << mismatches << " / 50 trials";
}

void automask_contract(Outcome& o) {
  Rng rng(104);
  double worst_cov = 0.0, worst_rec = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const ImageBuffer frame = test::random_image(rng, 16, 24, 3);
    SceneState s = SceneState::initial(16, 24, {-1, 1});
    for (std::size_t j = 0; j < s.logits.size(); ++j) s.logits[j] = rng.normal();
    s.poses[0] = test::random_pose(rng, 0.01, 0.1);
    s.poses[1] = test::random_pose(rng, 0.01, 0.1);
    const LossReport r = total_loss(s, frame, std::vector<ImageBuffer>{frame, frame});
    worst_cov = std::max(worst_cov, r.automask_coverage);
    worst_rec = std::max(worst_rec, std::abs(r.reconstruction));
  }
  o.check(worst_cov == 0.0, "coverage");
  o.check(worst_rec == 0.0, "reconstruction");
  o.detail << "10 static pairs with random depth, max coverage " << worst_cov << ", max reconstruction "
           << worst_rec;
}

void synthetic_recovery(Outcome& o) {
  const auto t0 = Clock::now();
  const Converged& c = converged_plane();
  const DepthMap truth(c.scene.depth);
  const double rel = abs_rel(median_scale(c.result.state.depth(), truth), truth);
  o.check(rel < 5.0, "depth AbsRel");

  SceneState init = c.scene.ground_truth(test::kSceneRange);
  Intrinsics k = c.scene.intrinsics;
  k.fx *= 1.2;
  init.intrinsics_raw = intrinsics_to_raw(k);
  OptimizerConfig cfg;
  cfg.iterations = 2000;
  cfg.range = test::kSceneRange;
  cfg.optimize_depth = false;
  cfg.optimize_pose = false;
  cfg.intrinsics_mode = IntrinsicsMode::learned;
  const OptimizeResult r = optimize(c.scene.target, c.scene.supports, cfg, init);
  const double fx_err = std::abs(r.state.intrinsics().fx - c.scene.intrinsics.fx) / c.scene.intrinsics.fx;
  o.check(fx_err < 0.05, "fx");
  const double elapsed = seconds_since(t0);
  o.check(elapsed < 120.0, "runtime");
  o.detail << "median-scaled AbsRel " << rel << "% (tol 5), fx from +20% to " << 100.0 * fx_err
           << "% error (tol 5), " << elapsed << " s (limit 120)";
}

void scale_gauge(Outcome& o) {
  const Converged& c = converged_plane();
  const Grid<double> depth = c.result.state.depth_values();
  const Intrinsics k = c.result.state.intrinsics();
  const double base = reconstruction_loss(depth, c.result.state.poses, k, c.scene.target, c.scene.supports).total;
  double worst = 0.0;
  for (double s : {0.1, 10.0}) {
    Grid<double> scaled = depth;
    for (std::size_t j = 0; j < scaled.size(); ++j) scaled[j] *= s;
    std::vector<PoseSE3> poses = c.result.state.poses;
    for (PoseSE3& p : poses) p.translation *= s;
    const double l = reconstruction_loss(scaled, poses, k, c.scene.target, c.scene.supports).total;
    worst = std::max(worst, std::abs(l - base));
  }
  o.check(worst < 1e-9, "loss changed");
  o.detail << "s in {0.1, 10}, max |dL| " << worst << " (tol 1e-9)";
}

double sse(const Grid<double>& pred, const DepthMap& gt, double s, double t) {
  double e = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double r = s * pred[i] + t - 1.0 / gt.depth()[i];
    e += r * r;
  }
  return e;
}

std::pair<double, double> grid_search(const Grid<double>& pred, const DepthMap& gt) {
  double cs = 0.0, ct = 0.0, span = 10.0;
  for (int level = 0; level < 40; ++level, span *= 0.3) {
    double best = std::numeric_limits<double>::infinity(), bs = cs, bt = ct;
    for (int i = -10; i <= 10; ++i) {
      for (int j = -10; j <= 10; ++j) {
        const double s = cs + span * i / 10.0, t = ct + span * j / 10.0;
        const double e = sse(pred, gt, s, t);
        if (e < best) {
          best = e;
          bs = s;
          bt = t;
        }
      }
    }
    cs = bs;
    ct = bt;
  }
  return {cs, ct};
}

void alignment_metrics(Outcome& o) {
  Rng rng(107);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    Grid<double> gt_disp = test::random_grid(rng, 8, 8, 0.1, 1.0);
    Grid<double> pred = gt_disp;
    for (std::size_t i = 0; i < pred.size(); ++i) pred[i] = 0.7 * gt_disp[i] + 0.05 + 0.02 * rng.normal();
    for (std::size_t i = 0; i < gt_disp.size(); ++i) gt_disp[i] = 1.0 / gt_disp[i];
    const DepthMap gt(gt_disp);
    const AlignmentResult a = align_lstsq(pred, gt);
    const auto [s, t] = grid_search(pred, gt);
    worst = std::max({worst, std::abs(a.scale - s), std::abs(a.shift - t)});
  }
  o.check(worst < 1e-3, "lstsq vs grid search");

  const DepthMap gt2(Grid<double>(1, 2, std::vector<double>{2, 4}));
  const double ar = abs_rel(DepthMap(Grid<double>(1, 2, std::vector<double>{1, 5})), gt2);
  o.check(std::abs(ar - 37.5) < 1e-12, "AbsRel example");
  const DepthMap ones(Grid<double>(1, 3, 1.0));
  const double d = delta_acc(DepthMap(Grid<double>(1, 3, std::vector<double>{1.2, 1.26, 0.81})), ones);
  o.check(std::abs(d - 200.0 / 3.0) < 1e-12, "delta example");
  const std::vector<Eigen::Vector3d> pc{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
  const std::vector<Eigen::Vector3d> gc{{0, 0, 0.05}, {5, 0, 0}, {6, 0, 0}};
  const FScore f = fscore_clouds(pc, gc);
  o.check(std::abs(f.fscore - 100.0 / 3.0) < 1e-12, "F-score example");
  const EvalConfig ec;
  o.check(ec.delta_threshold == 1.25, "delta threshold");
  o.check(ec.fscore_threshold == 0.10, "F-score threshold");
  o.detail << "lstsq vs grid max diff " << worst << " (tol 1e-3), AbsRel " << ar << ", delta " << d << ", F "
           << f.fscore << ", thresholds " << ec.delta_threshold << " / " << ec.fscore_threshold;
}

void augmentation_invariants(Outcome& o) {
  Rng rng(108);
  const int h = 192, w = 640;
  std::set<std::pair<int, int>> table, seen_ratios;
  for (const AspectRatio& r : aspect_ratio_table()) table.insert({r.w, r.h});
  o.check(table.size() == 16, "ratio table size");
  const Intrinsics k = make_intrinsics(400, 380, 320, 96, w, h);
  double worst_px = 0.0, worst_count = 0.0, min_scale = 1.0, max_scale = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const CropSpec spec = sample_ar_crop(rng, h, w);
    seen_ratios.insert({spec.ratio.w, spec.ratio.h});
    min_scale = std::min(min_scale, spec.scale);
    max_scale = std::max(max_scale, spec.scale);
    const double n = static_cast<double>(spec.out_height) * spec.out_width;
    worst_count = std::max(worst_count, std::abs(n - h * w) / (h * w));
    const Intrinsics kc = crop_intrinsics(k, spec);
    const Eigen::Vector3d x(rng.uniform(-3, 3), rng.uniform(-1, 1), rng.uniform(2, 30));
    const Eigen::Vector2d p = project(x, k);
    const Eigen::Vector2d expected((p.x() - spec.col) * spec.scale_x(), (p.y() - spec.row) * spec.scale_y());
    worst_px = std::max(worst_px, (project(x, kc) - expected).norm());
  }
  bool subset = true;
  for (const auto& r : seen_ratios) subset = subset && table.count(r);
  o.check(subset, "ratio outside table");
  o.check(min_scale >= 0.5 && max_scale <= 1.0, "scale range");
  o.check(worst_count <= 0.05, "pixel count");
  o.check(worst_px <= 0.5, "intrinsics consistency");

  std::set<FillMode> fills;
  for (int i = 0; i < 1000; ++i) fills.insert(sample_cutout(rng, 48, 64).fill);
  o.check(fills.size() == static_cast<std::size_t>(kFillModeCount) && kFillModeCount == 5, "fill modes");

  std::set<PhotoOp> ops;
  bool three = true;
  for (int i = 0; i < 1000; ++i) {
    const RandAugmentParams p = sample_randaugment(rng);
    three = three && p.ops.size() == 3;
    for (const RandAugmentOp& op : p.ops) ops.insert(op.op);
  }
  o.check(three, "op count");
  o.check(ops.size() == 7 && kPhotoOpCount == 7, "op set");
  o.detail << "1000 draws: " << seen_ratios.size() << "/16 ratios, scale [" << min_scale << ", " << max_scale
           << "], max pixel-count drift " << 100.0 * worst_count << "%, max K' error " << worst_px << " px, "
           << fills.size() << " fill modes, 3 of " << ops.size() << " ops";
}

void policy_probabilities(Outcome& o) {
  const AugmentPolicy p;
  o.check(p.randaugment == 0.30 && p.cutout == 0.30 && p.ar_aug == 0.70, "defaults");
  Rng rng(109);
  const int n = 10000;
  int ra = 0, co = 0, ar = 0;
  for (int i = 0; i < n; ++i) {
    const AugmentRecord r = sample_policy(rng, p, 192, 640);
    ra += r.randaugment.has_value();
    co += r.cutout.has_value();
    ar += r.ar_aug.has_value();
  }
  const double fra = static_cast<double>(ra) / n, fco = static_cast<double>(co) / n, far = static_cast<double>(ar) / n;
  o.check(std::abs(fra - 0.30) <= 0.02, "RandAugment rate");
  o.check(std::abs(fco - 0.30) <= 0.02, "CutOut rate");
  o.check(std::abs(far - 0.70) <= 0.02, "AR-Aug rate");
  o.detail << "10k trials: RandAugment " << fra << ", CutOut " << fco << ", AR-Aug " << far << " (tol 0.02)";
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int run_cli(const fs::path& dir, const std::string& args) {
  const std::string cmd = "cd '" + dir.string() + "' && '" MDEPTH_CLI "' " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void determinism(Outcome& o) {
  const fs::path dir = fs::temp_directory_path() / "mdepth_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "c.json") << R"({"optimizer": {"iterations": 200, "intrinsics_mode": "learned",
                                        "depth_range": {"near": 1, "far": 100}}})";
  o.check(run_cli(dir, "--seed 11 --out scene make-scene") == 0, "make-scene");
  for (const char* out : {"run1", "run2"}) {
    o.check(run_cli(dir, std::string("--config c.json --seed 11 --out ") + out +
                             " optimize --manifest scene/manifest.json --init-poses scene/poses_gt.json") == 0,
            "optimize");
  }
  int files = 0, differing = 0;
  if (fs::is_directory(dir / "run1")) {
    for (const auto& e : fs::directory_iterator(dir / "run1")) {
      ++files;
      const fs::path other = dir / "run2" / e.path().filename();
      if (!fs::exists(other) || slurp(e.path()) != slurp(other)) ++differing;
    }
  }
  o.check(files > 0 && fs::exists(dir / "run1/loss_trace.csv"), "no outputs");
  o.check(differing == 0, "outputs differ");
  o.detail << "two optimize runs, " << files << " output files incl. loss_trace.csv, " << differing
           << " differing";
  if (o.pass) fs::remove_all(dir);
}

}  // namespace
}  // namespace mdepth

int main() {
  using namespace mdepth;
  const std::pair<const char*, std::function<void(Outcome&)>> criteria[] = {
      {"geometry oracle", geometry_oracle},
      {"gradient suite", gradient_suite},
      {"loss constants", loss_constants},
      {"automask contract", automask_contract},
      {"synthetic recovery", synthetic_recovery},
      {"scale gauge", scale_gauge},
      {"alignment and metrics", alignment_metrics},
      {"augmentation invariants", augmentation_invariants},
      {"policy probabilities", policy_probabilities},
      {"determinism", determinism},
  };
  int failed = 0;
  int index = 1;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      fn(o);
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", index++, name, o.detail.str().c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d/10 criteria passed\n", 10 - failed);
  return failed == 0 ? 0 : 1;
}
