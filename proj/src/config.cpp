#include "mdepth/config.hpp"

#include <cmath>
#include <set>
#include <thread>

namespace mdepth {
namespace {

// Reads typed values out of one JSON section and remembers which keys were
// consumed, so leftovers can be reported as unknown.
class Section {
 public:
  Section(const Json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw ConfigError(name_ + ": expected an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(path(key) + ": wrong type");
    }
  }

  std::optional<Section> sub(const char* key) {
    seen_.insert(key);
    if (!j_.contains(key)) return std::nullopt;
    return Section(j_.at(key), path(key));
  }

  template <typename Enum>
  void read_enum(const char* key, Enum& out, std::initializer_list<std::pair<const char*, Enum>> names) {
    std::string s;
    read(key, s);
    if (s.empty()) return;
    for (const auto& [n, v] : names) {
      if (s == n) {
        out = v;
        return;
      }
    }
    throw ConfigError(path(key) + ": unknown value '" + s + "'");
  }

  void finish() const {
    for (const auto& [key, _] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError(path(key.c_str()) + ": unknown key");
    }
  }

  std::string path(const char* key) const { return name_.empty() ? key : name_ + "." + key; }

 private:
  const Json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

const std::initializer_list<std::pair<const char*, IntrinsicsMode>> kIntrinsicsModes{
    {"fixed", IntrinsicsMode::fixed}, {"learned", IntrinsicsMode::learned}};
const std::initializer_list<std::pair<const char*, OffsetMode>> kOffsetModes{
    {"fixed", OffsetMode::fixed}, {"randomized", OffsetMode::randomized}};
const std::initializer_list<std::pair<const char*, AlignMode>> kAlignModes{
    {"lstsq", AlignMode::lstsq}, {"median", AlignMode::median}, {"none", AlignMode::none}};
const std::initializer_list<std::pair<const char*, SurfaceKind>> kSurfaces{
    {"fronto_parallel", SurfaceKind::fronto_parallel},
    {"slanted", SurfaceKind::slanted},
    {"step", SurfaceKind::step}};
const std::initializer_list<std::pair<const char*, MotionKind>> kMotions{
    {"lateral", MotionKind::lateral}, {"forward", MotionKind::forward}, {"backward", MotionKind::backward}};

template <typename Enum>
const char* name_of(Enum v, std::initializer_list<std::pair<const char*, Enum>> names) {
  for (const auto& [n, e] : names) {
    if (e == v) return n;
  }
  return "?";
}

void parse_optimizer(Section s, AppConfig& c) {
  OptimizerConfig& o = c.optimizer;
  s.read("iterations", o.iterations);
  if (auto lr = s.sub("learning_rates")) {
    lr->read("disparity", o.learning_rates.disparity);
    lr->read("pose", o.learning_rates.pose);
    lr->read("intrinsics", o.learning_rates.intrinsics);
    lr->finish();
  }
  s.read("pyramid_levels", o.pyramid_levels);
  s.read("offsets", o.offsets);
  s.read_enum("offset_mode", c.offset_mode, kOffsetModes);
  std::vector<int> range{c.offset_min, c.offset_max};
  s.read("offset_range", range);
  if (range.size() != 2) throw ConfigError("optimizer.offset_range: expected [min, max]");
  c.offset_min = range[0];
  c.offset_max = range[1];
  s.read_enum("intrinsics_mode", o.intrinsics_mode, kIntrinsicsModes);
  s.read("forward_motion_constraint", o.forward_motion_constraint);
  s.read("optimize_depth", o.optimize_depth);
  s.read("optimize_pose", o.optimize_pose);
  s.read("warmup_fraction", o.warmup_fraction);
  s.read("decay_fraction", o.decay_fraction);
  s.read("decay_factor", o.decay_factor);
  s.read("beta1", o.beta1);
  s.read("beta2", o.beta2);
  s.read("epsilon", o.epsilon);
  s.read("gradient_floor", o.gradient_floor);
  s.read("window", o.window);
  if (auto r = s.sub("depth_range")) {
    r->read("near", o.range.near);
    r->read("far", o.range.far);
    r->finish();
  }
  s.finish();
}

void parse_loss(Section s, LossConfig& l) {
  s.read("ssim_weight", l.ssim_weight);
  s.read("smoothness_weight", l.smoothness_weight);
  s.read("automask", l.automask);
  s.finish();
}

void parse_augment(Section s, AugmentPolicy& p) {
  s.read("flip", p.flip);
  s.read("color_jitter", p.color_jitter);
  s.read("randaugment", p.randaugment);
  s.read("cutout", p.cutout);
  s.read("ar_aug", p.ar_aug);
  if (auto j = s.sub("jitter")) {
    j->read("brightness", p.jitter.brightness);
    j->read("contrast", p.jitter.contrast);
    j->read("saturation", p.jitter.saturation);
    j->read("hue", p.jitter.hue);
    j->finish();
  }
  s.read("randaugment_ops", p.randaugment_ops);
  s.read("randaugment_magnitude", p.randaugment_magnitude);
  std::vector<double> area{p.cutout_config.min_area, p.cutout_config.max_area};
  s.read("cutout_area", area);
  if (area.size() != 2) throw ConfigError("augment.cutout_area: expected [min, max]");
  p.cutout_config.min_area = area[0];
  p.cutout_config.max_area = area[1];
  s.read("cutout_max_aspect", p.cutout_config.max_aspect);
  s.finish();
}

void parse_eval(Section s, EvalConfig& e) {
  s.read_enum("align", e.align, kAlignModes);
  s.read("min_depth", e.min_depth);
  Json max_depth = nullptr;
  s.read("max_depth", max_depth);
  if (max_depth.is_number()) {
    e.max_depth = max_depth.get<double>();
  } else if (!max_depth.is_null()) {
    throw ConfigError("eval.max_depth: wrong type");
  }
  s.read("delta_threshold", e.delta_threshold);
  s.read("fscore_threshold", e.fscore_threshold);
  s.read("fscore", e.compute_fscore);
  s.finish();
}

void parse_synthetic(Section s, SyntheticSpec& y) {
  s.read_enum("surface", y.surface, kSurfaces);
  s.read_enum("motion", y.motion, kMotions);
  s.read("height", y.height);
  s.read("width", y.width);
  s.read("channels", y.channels);
  s.read("focal", y.focal);
  s.read("depth", y.depth);
  s.read("near_depth", y.near_depth);
  s.read("step_column", y.step_column);
  s.read("depth_top", y.depth_top);
  s.read("depth_bottom", y.depth_bottom);
  s.read("baseline", y.baseline);
  s.read("offsets", y.offsets);
  s.read("min_period", y.min_period);
  s.read("max_period", y.max_period);
  s.read("strict", y.strict);
  s.finish();
}

void parse_gradcheck(Section s, GradcheckOptions& g) {
  s.read("scenes", g.scenes);
  s.read("geometry_configs", g.geometry_configs);
  s.read("height", g.height);
  s.read("width", g.width);
  s.read("channels", g.channels);
  s.read("supports", g.supports);
  s.read("step", g.step);
  s.read("loss_tolerance", g.loss_tolerance);
  s.read("geometry_tolerance", g.geometry_tolerance);
  s.read("intrinsics_tolerance", g.intrinsics_tolerance);
  s.read("corrupt", g.corrupt);
  s.finish();
}

}  // namespace

void AppConfig::validate() const {
  auto wrap = [](const char* section, const auto& f) {
    try {
      f();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string(section) + ": " + e.what());
    }
  };
  if (jobs < 0) throw ConfigError("jobs must be >= 0");
  wrap("optimizer", [&] { optimizer.validate(); });
  if (offset_min < 1 || offset_max < offset_min) {
    throw ConfigError("optimizer.offset_range must satisfy 1 <= min <= max");
  }
  wrap("augment", [&] { augment.validate(); });
  wrap("eval", [&] { eval.validate(); });
  wrap("synthetic", [&] { synthetic.validate(); });
  wrap("gradcheck", [&] { gradcheck.validate(); });
  const GradcheckOptions& g = gradcheck;
  if (g.scenes < 1 || g.geometry_configs < 1 || g.height < 4 || g.width < 4 || g.supports < 1 ||
      (g.channels != 1 && g.channels != 3) || !(g.step > 0.0)) {
    throw ConfigError("gradcheck: counts and extents must be positive (extent >= 4, channels 1 or 3)");
  }
}

int AppConfig::effective_jobs() const {
  if (jobs > 0) return jobs;
  return std::max(1u, std::thread::hardware_concurrency());
}

AppConfig parse_config(const Json& j) {
  AppConfig c;
  Section root(j, "");
  root.read("seed", c.seed);
  root.read("jobs", c.jobs);
  if (auto s = root.sub("optimizer")) parse_optimizer(*s, c);
  if (auto s = root.sub("loss")) parse_loss(*s, c.optimizer.loss);
  if (auto s = root.sub("augment")) parse_augment(*s, c.augment);
  if (auto s = root.sub("eval")) parse_eval(*s, c.eval);
  if (auto s = root.sub("synthetic")) parse_synthetic(*s, c.synthetic);
  if (auto s = root.sub("gradcheck")) parse_gradcheck(*s, c.gradcheck);
  root.finish();
  c.optimizer.seed = c.seed;
  c.gradcheck.seed = c.seed;
  c.validate();
  return c;
}

AppConfig load_config(const std::filesystem::path& path) {
  try {
    return parse_config(read_json(path));
  } catch (const InputError& e) {
    throw ConfigError(e.what());
  }
}

Json to_json(const AppConfig& c) {
  const OptimizerConfig& o = c.optimizer;
  const AugmentPolicy& a = c.augment;
  const SyntheticSpec& y = c.synthetic;
  const GradcheckOptions& g = c.gradcheck;
  Json j;
  j["seed"] = c.seed;
  j["jobs"] = c.jobs;
  j["optimizer"] = {
      {"iterations", o.iterations},
      {"learning_rates",
       {{"disparity", o.learning_rates.disparity}, {"pose", o.learning_rates.pose},
        {"intrinsics", o.learning_rates.intrinsics}}},
      {"pyramid_levels", o.pyramid_levels},
      {"offsets", o.offsets},
      {"offset_mode", name_of(c.offset_mode, kOffsetModes)},
      {"offset_range", {c.offset_min, c.offset_max}},
      {"intrinsics_mode", name_of(o.intrinsics_mode, kIntrinsicsModes)},
      {"forward_motion_constraint", o.forward_motion_constraint},
      {"optimize_depth", o.optimize_depth},
      {"optimize_pose", o.optimize_pose},
      {"warmup_fraction", o.warmup_fraction},
      {"decay_fraction", o.decay_fraction},
      {"decay_factor", o.decay_factor},
      {"beta1", o.beta1},
      {"beta2", o.beta2},
      {"epsilon", o.epsilon},
      {"gradient_floor", o.gradient_floor},
      {"window", o.window},
      {"depth_range", {{"near", o.range.near}, {"far", o.range.far}}},
  };
  j["loss"] = {{"ssim_weight", o.loss.ssim_weight},
               {"smoothness_weight", o.loss.smoothness_weight},
               {"automask", o.loss.automask}};
  j["augment"] = {
      {"flip", a.flip},
      {"color_jitter", a.color_jitter},
      {"randaugment", a.randaugment},
      {"cutout", a.cutout},
      {"ar_aug", a.ar_aug},
      {"jitter",
       {{"brightness", a.jitter.brightness}, {"contrast", a.jitter.contrast},
        {"saturation", a.jitter.saturation}, {"hue", a.jitter.hue}}},
      {"randaugment_ops", a.randaugment_ops},
      {"randaugment_magnitude", a.randaugment_magnitude},
      {"cutout_area", {a.cutout_config.min_area, a.cutout_config.max_area}},
      {"cutout_max_aspect", a.cutout_config.max_aspect},
  };
  j["eval"] = {{"align", name_of(c.eval.align, kAlignModes)},
               {"min_depth", c.eval.min_depth},
               {"max_depth", std::isfinite(c.eval.max_depth) ? Json(c.eval.max_depth) : Json(nullptr)},
               {"delta_threshold", c.eval.delta_threshold},
               {"fscore_threshold", c.eval.fscore_threshold},
               {"fscore", c.eval.compute_fscore}};
  j["synthetic"] = {{"surface", name_of(y.surface, kSurfaces)},
                    {"motion", name_of(y.motion, kMotions)},
                    {"height", y.height},
                    {"width", y.width},
                    {"channels", y.channels},
                    {"focal", y.focal},
                    {"depth", y.depth},
                    {"near_depth", y.near_depth},
                    {"step_column", y.step_column},
                    {"depth_top", y.depth_top},
                    {"depth_bottom", y.depth_bottom},
                    {"baseline", y.baseline},
                    {"offsets", y.offsets},
                    {"min_period", y.min_period},
                    {"max_period", y.max_period},
                    {"strict", y.strict}};
  j["gradcheck"] = {{"scenes", g.scenes},
                    {"geometry_configs", g.geometry_configs},
                    {"height", g.height},
                    {"width", g.width},
                    {"channels", g.channels},
                    {"supports", g.supports},
                    {"step", g.step},
                    {"loss_tolerance", g.loss_tolerance},
                    {"geometry_tolerance", g.geometry_tolerance},
                    {"intrinsics_tolerance", g.intrinsics_tolerance},
                    {"corrupt", g.corrupt}};
  return j;
}

}  // namespace mdepth
