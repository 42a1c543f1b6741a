// mdepth: direct monocular depth/pose/intrinsics optimization toolkit.
//
// Exit codes: 0 ok, 1 check failure, 2 input or configuration error,
// 3 numerical abort.

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <iostream>
#include <map>
#include <mutex>
#include <thread>

#include "mdepth/augment.hpp"
#include "mdepth/config.hpp"
#include "mdepth/eval.hpp"
#include "mdepth/geometry.hpp"
#include "mdepth/gradcheck.hpp"
#include "mdepth/io.hpp"
#include "mdepth/losses.hpp"
#include "mdepth/optimizer.hpp"
#include "mdepth/synthetic.hpp"

using namespace mdepth;

namespace {

enum Exit { kOk = 0, kCheckFailed = 1, kInputError = 2, kNumerical = 3 };

struct CheckFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> jobs;
};

AppConfig resolve_config(const Globals& g) {
  AppConfig c = g.config_path.empty() ? parse_config(Json::object()) : load_config(g.config_path);
  if (g.seed) {
    c.seed = *g.seed;
    c.optimizer.seed = c.seed;
    c.gradcheck.seed = c.seed;
  }
  if (g.jobs) c.jobs = *g.jobs;
  c.validate();
  return c;
}

fs::path out_dir(const Globals& g) {
  if (g.out.empty()) throw InputError("--out is required for this command");
  fs::create_directories(g.out);
  return g.out;
}

std::string frame_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%03zu.png", i);
  return buf;
}

template <typename F>
void parallel_for(std::size_t n, int jobs, F f) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        f(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min<std::size_t>(std::max(1, jobs), n);
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

struct Sequence {
  SequenceManifest manifest;
  std::vector<ImageBuffer> frames;
};

Sequence load_sequence(const fs::path& manifest_path) {
  Sequence s;
  s.manifest = read_manifest(manifest_path);
  for (const auto& f : s.manifest.frames) {
    s.frames.push_back(read_image(f));
    if (!s.frames.back().same_shape(s.frames.front())) {
      throw InputError("frame " + f.string() + " does not match the shape of the first frame");
    }
  }
  return s;
}

std::vector<ImageBuffer> supports_for(const Sequence& s, const std::vector<int>& offsets) {
  const int t = s.manifest.target_index();
  std::vector<ImageBuffer> out;
  for (int k : offsets) {
    const int i = t + k;
    if (i < 0 || i >= static_cast<int>(s.frames.size())) {
      throw InputError("support offset " + std::to_string(k) + " falls outside the sequence");
    }
    out.push_back(s.frames[i]);
  }
  return out;
}

Json poses_json(const std::vector<PoseSE3>& poses, const std::vector<int>& offsets) {
  Json j = Json::array();
  for (std::size_t i = 0; i < poses.size(); ++i) {
    Json p = to_json(poses[i]);
    p["offset"] = offsets[i];
    j.push_back(p);
  }
  return j;
}

std::vector<PoseSE3> read_poses(const fs::path& path, std::size_t expected) {
  const Json j = read_json(path);
  if (!j.is_array() || j.size() != expected) {
    throw InputError("poses file " + path.string() + " must hold one pose per support offset");
  }
  std::vector<PoseSE3> out;
  for (Json p : j) {
    p.erase("offset");
    out.push_back(pose_from_json(p));
  }
  return out;
}

// ---------------------------------------------------------------------------

int cmd_make_scene(const Globals& g) {
  const AppConfig c = resolve_config(g);
  const fs::path out = out_dir(g);
  SyntheticSpec spec = c.synthetic;
  const int lo = std::min(0, *std::min_element(spec.offsets.begin(), spec.offsets.end()));
  const int hi = std::max(0, *std::max_element(spec.offsets.begin(), spec.offsets.end()));
  // Render every frame between the extreme offsets so frame index differences
  // equal offsets.
  spec.offsets.clear();
  for (int k = lo; k <= hi; ++k) {
    if (k != 0) spec.offsets.push_back(k);
  }
  const SyntheticScene scene = make_synthetic_scene(spec, c.seed);

  SequenceManifest m;
  std::size_t s = 0;
  for (int k = lo; k <= hi; ++k) {
    const fs::path f = out / frame_name(m.frames.size());
    write_png(f, k == 0 ? scene.target : scene.supports[s++], 16);
    m.frames.push_back(f);
  }
  m.target = -lo;
  m.intrinsics = out / "intrinsics.json";
  m.target_depth = out / "target_depth.fmap";
  m.scene_id = "synthetic-" + std::to_string(c.seed);
  write_json(*m.intrinsics, to_json(scene.intrinsics));
  write_float_map(*m.target_depth, scene.depth);
  write_json(out / "poses_gt.json", poses_json(scene.poses, spec.offsets));
  write_json(out / "state_gt.json", to_json(scene.ground_truth(c.optimizer.range)));
  write_json(out / "manifest.json", to_json(m, out));
  write_json(out / "scene.json", {{"exact", scene.exact}, {"config", to_json(c)["synthetic"]}});
  std::cout << "wrote " << m.frames.size() << " frames to " << out.string()
            << (scene.exact ? " (exact warps)" : "") << "\n";
  return kOk;
}

int cmd_synthesize(const Globals& g, const std::string& manifest_path, const std::string& state_path) {
  const AppConfig c = resolve_config(g);
  const Sequence seq = load_sequence(manifest_path);
  const SceneState state = scene_state_from_json(read_json(state_path));
  const ImageBuffer& target = seq.frames[seq.manifest.target_index()];
  if (target.height() != state.height() || target.width() != state.width()) {
    throw InputError("state extent " + std::to_string(state.height()) + "x" + std::to_string(state.width()) +
                     " does not match the frames (" + std::to_string(target.height()) + "x" +
                     std::to_string(target.width()) + ")");
  }
  const fs::path out = out_dir(g);
  const auto supports = supports_for(seq, state.offsets);
  const DepthMap depth = state.depth();
  const Intrinsics k = state.intrinsics();
  Json summary = Json::array();
  for (std::size_t i = 0; i < supports.size(); ++i) {
    const SampledImage synth = synthesize_support(depth, supports[i], state.poses[i], k);
    const LossMap loss = photometric_loss(target, synth.image, synth.mask, c.optimizer.loss.ssim_weight);
    Grid<double> heat(loss.values.height(), loss.values.width(), 0.0);
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t p = 0; p < heat.size(); ++p) {
      if (!loss.valid[p]) continue;
      heat[p] = loss.values[p];
      sum += heat[p];
      ++n;
    }
    const std::string tag = "support_" + std::to_string(state.offsets[i]);
    write_png(out / (tag + "_synth.png"), synth.image, 16);
    std::vector<double> mask(synth.mask.size());
    for (std::size_t p = 0; p < mask.size(); ++p) mask[p] = synth.mask[p] ? 1.0 : 0.0;
    write_png(out / (tag + "_mask.png"), ImageBuffer(synth.mask.height(), synth.mask.width(), 1, mask));
    write_float_map(out / (tag + "_loss.fmap"), heat);
    const double mean = n ? sum / static_cast<double>(n) : 0.0;
    summary.push_back({{"offset", state.offsets[i]}, {"mean_loss", mean}, {"valid_pixels", n}});
    std::cout << tag << ": mean photometric loss " << mean << " over " << n << " pixels\n";
  }
  write_json(out / "synthesize.json", summary);
  return kOk;
}

int cmd_optimize(const Globals& g, const std::string& manifest_path, const std::string& init_path,
                 const std::string& init_poses_path) {
  AppConfig c = resolve_config(g);
  const Sequence seq = load_sequence(manifest_path);
  const ImageBuffer& target = seq.frames[seq.manifest.target_index()];
  OptimizerConfig oc = c.optimizer;
  if (c.offset_mode == OffsetMode::randomized) {
    Rng rng(c.seed);
    oc.offsets = sample_support_offsets(rng, c.offset_mode, c.offset_min, c.offset_max);
  }
  std::optional<SceneState> init;
  if (!init_path.empty()) {
    init = scene_state_from_json(read_json(init_path));
    if (init->height() != target.height() || init->width() != target.width()) {
      throw InputError("initial state extent does not match the frames");
    }
    oc.offsets = init->offsets;
    oc.range = init->range;
  } else {
    init = SceneState::initial(target.height(), target.width(), oc.offsets, oc.range);
    if (seq.manifest.intrinsics) {
      const Intrinsics k = intrinsics_from_json(read_json(*seq.manifest.intrinsics));
      if (k.width != target.width() || k.height != target.height()) {
        throw InputError("intrinsics extent does not match the frames");
      }
      init->intrinsics_raw = intrinsics_to_raw(k);
    }
  }
  if (!init_poses_path.empty()) init->poses = read_poses(init_poses_path, oc.offsets.size());
  const auto supports = supports_for(seq, oc.offsets);
  const fs::path out = out_dir(g);

  const OptimizeResult result = coarse_to_fine(target, supports, oc, init);

  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < result.trace.size(); ++i) rows.push_back(loss_trace_row(i, result.trace[i]));
  write_csv(out / "loss_trace.csv", loss_trace_header(oc.offsets.size()), rows);
  write_json(out / "state.json", to_json(result.state));
  write_float_map(out / "disparity.fmap", result.state.disparity().values());
  write_float_map(out / "depth.fmap", result.state.depth_values());
  write_json(out / "poses.json", poses_json(result.state.poses, result.state.offsets));
  write_json(out / "intrinsics.json", to_json(result.state.intrinsics()));

  const LossReport& last = result.trace.back();
  Json summary = {{"iterations", result.trace.size()},
                  {"offsets", oc.offsets},
                  {"final_total", last.total},
                  {"final_reconstruction", last.reconstruction},
                  {"automask_coverage", last.automask_coverage}};
  if (seq.manifest.target_depth) {
    const DepthMap gt(read_float_map(*seq.manifest.target_depth));
    const DepthMap pred = median_scale(result.state.depth(), gt);
    summary["abs_rel_median_scaled"] = abs_rel(pred, gt);
    summary["delta_median_scaled"] = delta_acc(pred, gt);
  }
  write_json(out / "summary.json", summary);
  if (result.trace.front().all_masked && result.trace.back().all_masked) {
    std::cerr << "warning: automask removed every pixel; an identity pose start ties with the un-warped "
                 "supports, so pass --init-poses or set loss.automask to false\n";
  }
  std::cout << "optimized " << result.trace.size() << " iterations, final loss " << last.total << "\n";
  if (summary.contains("abs_rel_median_scaled")) {
    std::cout << "median-scaled AbsRel " << summary["abs_rel_median_scaled"].get<double>() << "%\n";
  }
  return kOk;
}

std::map<std::string, fs::path> float_maps(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw InputError("not a directory: " + dir.string());
  std::map<std::string, fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".fmap") out[e.path().filename().string()] = e.path();
  }
  if (out.empty()) throw InputError("no .fmap files in " + dir.string());
  return out;
}

int cmd_eval(const Globals& g, const std::vector<std::string>& pred_dirs, std::vector<std::string> names,
             const std::string& gt_dir, const std::string& intrinsics_path, std::string dataset) {
  const AppConfig c = resolve_config(g);
  const fs::path out = out_dir(g);
  if (!names.empty() && names.size() != pred_dirs.size()) throw InputError("--name count must match --pred count");
  for (std::size_t m = names.size(); m < pred_dirs.size(); ++m) {
    names.push_back(fs::path(pred_dirs[m]).lexically_normal().filename().string());
  }
  if (dataset.empty()) dataset = fs::path(gt_dir).lexically_normal().filename().string();
  const auto gt_files = float_maps(gt_dir);
  std::optional<Intrinsics> k;
  if (!intrinsics_path.empty()) k = intrinsics_from_json(read_json(intrinsics_path));
  EvalConfig ec = c.eval;
  ec.compute_fscore = ec.compute_fscore && k.has_value();

  std::vector<std::vector<ImageMetrics>> metrics(pred_dirs.size());
  std::vector<std::string> images;
  for (const auto& [name, _] : gt_files) images.push_back(name);
  for (std::size_t m = 0; m < pred_dirs.size(); ++m) {
    const auto pred_files = float_maps(pred_dirs[m]);
    std::vector<std::string> unmatched;
    for (const auto& [name, _] : pred_files) {
      if (!gt_files.count(name)) unmatched.push_back(pred_dirs[m] + ": " + name);
    }
    for (const auto& [name, _] : gt_files) {
      if (!pred_files.count(name)) unmatched.push_back(gt_dir + ": " + name);
    }
    if (!unmatched.empty()) {
      std::string msg = "unmatched files:";
      for (const auto& u : unmatched) msg += "\n  " + u;
      throw InputError(msg);
    }
    metrics[m].resize(images.size());
    parallel_for(images.size(), c.effective_jobs(), [&](std::size_t i) {
      const DepthMap gt(read_float_map(gt_files.at(images[i])));
      const DepthMap pred(read_float_map(pred_files.at(images[i])));
      if (!pred.depth().same_shape(gt.depth())) throw InputError("shape mismatch for " + images[i]);
      metrics[m][i] = evaluate_depth(pred, gt, ec, k);
    });
  }

  std::vector<std::vector<std::string>> rows;
  MetricTable table;
  table.methods = names;
  table.columns = {{dataset, "abs_rel", true}, {dataset, "delta", false}};
  if (ec.compute_fscore) table.columns.push_back({dataset, "fscore", false});
  for (std::size_t m = 0; m < metrics.size(); ++m) {
    double ar = 0.0, dl = 0.0, fs = 0.0;
    for (std::size_t i = 0; i < images.size(); ++i) {
      const ImageMetrics& im = metrics[m][i];
      ar += im.abs_rel;
      dl += im.delta;
      fs += im.fscore.value_or(0.0);
      rows.push_back({names[m], images[i], format_number(im.abs_rel), format_number(im.delta),
                      im.fscore ? format_number(*im.fscore) : "",
                      im.alignment ? format_number(im.alignment->scale) : "",
                      im.alignment ? format_number(im.alignment->shift) : "", std::to_string(im.clamped)});
    }
    const double n = static_cast<double>(images.size());
    std::vector<double> row{ar / n, dl / n};
    if (ec.compute_fscore) row.push_back(fs / n);
    table.values.push_back(row);
  }
  write_csv(out / "per_image.csv",
            {"method", "image", "abs_rel", "delta", "fscore", "align_scale", "align_shift", "clamped"}, rows);

  std::vector<std::string> header{"method"};
  for (const auto& col : table.columns) header.push_back(col.dataset + ":" + col.metric);
  std::vector<std::vector<std::string>> table_rows;
  for (std::size_t m = 0; m < names.size(); ++m) {
    std::vector<std::string> r{names[m]};
    for (double v : table.values[m]) r.push_back(format_number(v));
    table_rows.push_back(r);
  }
  write_csv(out / "metrics.csv", header, table_rows);

  Json summary;
  summary["dataset"] = dataset;
  summary["images"] = images.size();
  const auto ranks = rank(table);
  std::optional<Improvement> improvements;
  if (names.size() > 1) {
    improvements = improvement(table, 0);
    for (std::size_t col : improvements->skipped_columns) {
      const auto& mc = table.columns[col];
      std::cerr << "note: " << mc.dataset << ":" << mc.metric << " left out of the improvement (zero baseline)\n";
      summary["improvement_skipped"].push_back(mc.dataset + ":" + mc.metric);
    }
  }
  for (std::size_t m = 0; m < names.size(); ++m) {
    Json j;
    for (std::size_t col = 0; col < table.columns.size(); ++col) j[table.columns[col].metric] = table.values[m][col];
    if (names.size() > 1) {
      j["rank"] = ranks[m];
      j["improvement"] = improvements->per_method[m];
    }
    summary["methods"][names[m]] = j;
    std::cout << names[m] << ": AbsRel " << table.values[m][0] << "%  delta " << table.values[m][1] << "%";
    if (ec.compute_fscore) std::cout << "  F " << table.values[m][2] << "%";
    if (names.size() > 1) std::cout << "  rank " << ranks[m];
    std::cout << "\n";
  }
  if (names.size() > 1) summary["baseline"] = names[0];
  write_json(out / "summary.json", summary);
  return kOk;
}

bool record_is_identity(const AugmentRecord& r) {
  return !r.ar_aug && !r.flip && !r.color_jitter && !r.randaugment && !r.cutout;
}

int cmd_augment(const Globals& g, const std::string& manifest_path, int count, const std::string& replay_path) {
  const AppConfig c = resolve_config(g);
  if (count < 1) throw InputError("--count must be >= 1");
  const Sequence seq = load_sequence(manifest_path);
  if (!seq.manifest.intrinsics) throw InputError("augment needs intrinsics in the manifest");
  const Intrinsics k = intrinsics_from_json(read_json(*seq.manifest.intrinsics));
  // Frames are reordered target-first for the augmenter and written back in
  // manifest order.
  const int t = seq.manifest.target_index();
  std::vector<std::size_t> order{static_cast<std::size_t>(t)};
  for (std::size_t i = 0; i < seq.frames.size(); ++i) {
    if (static_cast<int>(i) != t) order.push_back(i);
  }
  std::vector<ImageBuffer> tuple;
  for (std::size_t i : order) tuple.push_back(seq.frames[i]);

  std::optional<AugmentRecord> replay_record;
  if (!replay_path.empty()) {
    replay_record = augment_record_from_json(read_json(replay_path));
    count = 1;
  }
  Rng master(c.seed);
  std::vector<std::uint64_t> seeds(count);
  for (auto& s : seeds) s = master.next();
  const fs::path out = out_dir(g);

  parallel_for(static_cast<std::size_t>(count), c.effective_jobs(), [&](std::size_t n) {
    char dir_name[32];
    std::snprintf(dir_name, sizeof dir_name, "sample_%03zu", n);
    const fs::path dir = out / dir_name;
    fs::create_directories(dir);
    AugmentResult r;
    if (replay_record) {
      r = replay(*replay_record, tuple, k);
    } else {
      Rng rng(seeds[n]);
      r = apply_policy(rng, c.augment, tuple, k);
    }
    SequenceManifest m;
    m.target = t;
    m.frame_rate = seq.manifest.frame_rate;
    m.scene_id = seq.manifest.scene_id;
    m.intrinsics = dir / "intrinsics.json";
    for (std::size_t i = 0; i < seq.frames.size(); ++i) m.frames.push_back(dir / frame_name(i));
    for (std::size_t j = 0; j < order.size(); ++j) {
      const fs::path dst = m.frames[order[j]];
      if (record_is_identity(r.record)) {
        fs::copy_file(seq.manifest.frames[order[j]], dst, fs::copy_options::overwrite_existing);
      } else {
        write_png(dst, r.tuple.frames[j], 16);
      }
    }
    if (r.erased) {
      std::vector<double> mask(r.erased->size());
      for (std::size_t p = 0; p < mask.size(); ++p) mask[p] = (*r.erased)[p] ? 1.0 : 0.0;
      write_png(dir / "erased.png", ImageBuffer(r.erased->height(), r.erased->width(), 1, mask));
    }
    if (record_is_identity(r.record)) {
      fs::copy_file(*seq.manifest.intrinsics, *m.intrinsics, fs::copy_options::overwrite_existing);
    } else {
      write_json(*m.intrinsics, to_json(r.tuple.intrinsics));
    }
    write_json(dir / "record.json", to_json(r.record));
    write_json(dir / "manifest.json", to_json(m, dir));
  });
  std::cout << "wrote " << count << " augmented sample" << (count == 1 ? "" : "s") << " to " << out.string() << "\n";
  return kOk;
}

int cmd_gradcheck(const Globals& g, const std::string& corrupt, bool sweep) {
  AppConfig c = resolve_config(g);
  if (!corrupt.empty()) c.gradcheck.corrupt = corrupt;
  const GradcheckReport report = run_gradcheck(c.gradcheck);
  Json j = Json::array();
  for (const auto& r : report.groups) {
    std::printf("%-24s worst rel err %.3e (tol %.0e, %zu entries) %s\n", r.group.c_str(), r.worst_relative_error,
                r.tolerance, r.entries, r.passed() ? "ok" : "FAIL");
    if (!r.passed()) {
      std::printf("  at %s: analytic %.12e numeric %.12e\n", r.where.c_str(), r.analytic, r.numeric);
    }
    j.push_back({{"group", r.group},
                 {"worst_relative_error", r.worst_relative_error},
                 {"tolerance", r.tolerance},
                 {"entries", r.entries},
                 {"where", r.where},
                 {"analytic", r.analytic},
                 {"numeric", r.numeric},
                 {"passed", r.passed()}});
  }
  Json report_json = {{"groups", j}, {"passed", report.passed()}};
  if (sweep) {
    const std::vector<double> steps{1e-3, 1e-4, 1e-5, 1e-6, 1e-7};
    const auto errs = gradcheck_step_sweep(c.gradcheck, steps);
    for (std::size_t i = 0; i < steps.size(); ++i) {
      std::printf("step %.0e: worst rel err %.3e\n", steps[i], errs[i]);
      report_json["sweep"].push_back({{"step", steps[i]}, {"worst_relative_error", errs[i]}});
    }
  }
  if (!g.out.empty()) write_json(out_dir(g) / "gradcheck.json", report_json);
  if (!report.passed()) {
    for (const auto& r : report.groups) {
      if (!r.passed()) {
        throw CheckFailure("gradient check failed for " + r.group + " at " + r.where + " (relative error " +
                           std::to_string(r.worst_relative_error) + ")");
      }
    }
  }
  std::cout << "gradient check passed\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Direct monocular depth, pose and intrinsics optimization toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "JSON configuration file")->envname("MDEPTH_CONFIG");
  app.add_option("--seed", g.seed, "Random seed")->envname("MDEPTH_SEED");
  app.add_option("--out", g.out, "Output directory")->envname("MDEPTH_OUT");
  app.add_option("--jobs", g.jobs, "Worker threads (default: all cores)")->envname("MDEPTH_JOBS")->check(CLI::PositiveNumber);

  std::string manifest, state, init, init_poses, gt_dir, intrinsics, dataset, replay_path, corrupt;
  std::vector<std::string> preds, names;
  int count = 1;
  bool sweep = false;

  auto* make_scene = app.add_subcommand("make-scene", "Render a synthetic scene with ground truth");

  auto* synthesize = app.add_subcommand("synthesize", "Warp support frames into the target view");
  synthesize->add_option("--manifest", manifest, "Sequence manifest")->required();
  synthesize->add_option("--state", state, "Scene state JSON")->required();

  auto* optimize_cmd = app.add_subcommand("optimize", "Optimize depth, poses and intrinsics");
  optimize_cmd->add_option("--manifest", manifest, "Sequence manifest")->required();
  optimize_cmd->add_option("--init", init, "Initial scene state JSON");
  optimize_cmd->add_option("--init-poses", init_poses, "Initial poses JSON (one per support offset)");

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate predicted depth maps");
  eval_cmd->add_option("--pred", preds, "Prediction directory (repeat for several methods)")->required();
  eval_cmd->add_option("--name", names, "Method name per --pred");
  eval_cmd->add_option("--gt", gt_dir, "Ground-truth directory")->required();
  eval_cmd->add_option("--intrinsics", intrinsics, "Intrinsics JSON (enables the F-score)");
  eval_cmd->add_option("--dataset", dataset, "Dataset label for the metric table");

  auto* augment_cmd = app.add_subcommand("augment", "Augment a frame tuple");
  augment_cmd->add_option("--manifest", manifest, "Sequence manifest")->required();
  augment_cmd->add_option("--count", count, "Number of augmented samples");
  augment_cmd->add_option("--replay", replay_path, "Replay a record.json instead of sampling");

  auto* gradcheck_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  gradcheck_cmd->add_option("--corrupt", corrupt, "Test hook: perturb the analytic gradient of a group");
  gradcheck_cmd->add_flag("--sweep", sweep, "Also report errors over a range of step sizes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }

  try {
    if (*make_scene) return cmd_make_scene(g);
    if (*synthesize) return cmd_synthesize(g, manifest, state);
    if (*optimize_cmd) return cmd_optimize(g, manifest, init, init_poses);
    if (*eval_cmd) return cmd_eval(g, preds, names, gt_dir, intrinsics, dataset);
    if (*augment_cmd) return cmd_augment(g, manifest, count, replay_path);
    if (*gradcheck_cmd) return cmd_gradcheck(g, corrupt, sweep);
  } catch (const CheckFailure& e) {
    std::cerr << "check failed: " << e.what() << "\n";
    return kCheckFailed;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kNumerical;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kInputError;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInputError;
  }
  return kOk;
}
