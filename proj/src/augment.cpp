#include "mdepth/augment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mdepth {
namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

ImageBuffer rebuild(const ImageBuffer& like, std::vector<double> data) {
  for (double& v : data) v = clamp01(v);
  return ImageBuffer(like.height(), like.width(), like.channels(), std::move(data));
}

std::vector<double> copy_data(const ImageBuffer& img) {
  return {img.data().begin(), img.data().end()};
}

double gray(const double* px) { return 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2]; }

// Per-pixel degenerate image for blend-style enhancements.
std::vector<double> grayscale_image(const std::vector<double>& data, int channels) {
  std::vector<double> out(data.size());
  for (std::size_t i = 0; i < data.size(); i += channels) {
    const double g = channels == 3 ? gray(&data[i]) : data[i];
    for (int k = 0; k < channels; ++k) out[i + k] = g;
  }
  return out;
}

double mean_gray(const std::vector<double>& data, int channels) {
  double sum = 0.0;
  for (std::size_t i = 0; i < data.size(); i += channels) sum += channels == 3 ? gray(&data[i]) : data[i];
  return sum / static_cast<double>(data.size() / channels);
}

// out = degenerate + factor * (img - degenerate), clamped.
void blend(std::vector<double>& data, const std::vector<double>& degenerate, double factor) {
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i] = clamp01(degenerate[i] + factor * (data[i] - degenerate[i]));
  }
}

void blend_constant(std::vector<double>& data, double degenerate, double factor) {
  for (double& v : data) v = clamp01(degenerate + factor * (v - degenerate));
}

void rgb_to_hsv(double r, double g, double b, double& h, double& s, double& v) {
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double d = mx - mn;
  v = mx;
  s = mx > 0.0 ? d / mx : 0.0;
  if (d == 0.0) {
    h = 0.0;
  } else if (mx == r) {
    h = std::fmod((g - b) / d / 6.0 + 1.0, 1.0);
  } else if (mx == g) {
    h = ((b - r) / d + 2.0) / 6.0;
  } else {
    h = ((r - g) / d + 4.0) / 6.0;
  }
}

void hsv_to_rgb(double h, double s, double v, double& r, double& g, double& b) {
  const double h6 = h * 6.0;
  const int i = static_cast<int>(std::floor(h6)) % 6;
  const double f = h6 - std::floor(h6);
  const double p = v * (1.0 - s);
  const double q = v * (1.0 - s * f);
  const double t = v * (1.0 - s * (1.0 - f));
  switch (i) {
    case 0: r = v, g = t, b = p; break;
    case 1: r = q, g = v, b = p; break;
    case 2: r = p, g = v, b = t; break;
    case 3: r = p, g = q, b = v; break;
    case 4: r = t, g = p, b = v; break;
    default: r = v, g = p, b = q; break;
  }
}

void adjust_hue(std::vector<double>& data, double shift) {
  for (std::size_t i = 0; i < data.size(); i += 3) {
    double h, s, v;
    rgb_to_hsv(data[i], data[i + 1], data[i + 2], h, s, v);
    h = std::fmod(h + shift + 1.0, 1.0);
    hsv_to_rgb(h, s, v, data[i], data[i + 1], data[i + 2]);
    for (int k = 0; k < 3; ++k) data[i + k] = clamp01(data[i + k]);
  }
}

int quantize(double v) { return static_cast<int>(std::clamp(std::lround(v * 255.0), 0L, 255L)); }

using Lut = std::array<int, 256>;

// Applies a per-channel 256-entry table built from the channel histogram;
// a channel whose builder returns nothing is left untouched.
template <typename Builder>
void apply_histogram_op(std::vector<double>& data, int channels, Builder build) {
  for (int k = 0; k < channels; ++k) {
    std::array<std::size_t, 256> hist{};
    for (std::size_t i = k; i < data.size(); i += channels) ++hist[quantize(data[i])];
    const std::optional<Lut> lut = build(hist);
    if (!lut) continue;
    for (std::size_t i = k; i < data.size(); i += channels) data[i] = (*lut)[quantize(data[i])] / 255.0;
  }
}

std::optional<Lut> autocontrast_lut(const std::array<std::size_t, 256>& hist) {
  int lo = 0;
  while (lo < 256 && hist[lo] == 0) ++lo;
  int hi = 255;
  while (hi >= 0 && hist[hi] == 0) --hi;
  if (hi <= lo) return std::nullopt;
  const double scale = 255.0 / (hi - lo);
  const double offset = -lo * scale;
  Lut lut;
  for (int i = 0; i < 256; ++i) lut[i] = std::clamp(static_cast<int>(i * scale + offset), 0, 255);
  return lut;
}

std::optional<Lut> equalize_lut(const std::array<std::size_t, 256>& hist) {
  std::size_t total = 0;
  std::size_t last = 0;
  for (std::size_t h : hist) {
    total += h;
    if (h > 0) last = h;
  }
  const std::size_t step = (total - last) / 255;
  if (step == 0) return std::nullopt;
  Lut lut;
  std::size_t n = step / 2;
  for (int i = 0; i < 256; ++i) {
    lut[i] = static_cast<int>(std::min<std::size_t>(n / step, 255));
    n += hist[i];
  }
  return lut;
}

// 3x3 smoothing kernel (1 1 1 / 1 5 1 / 1 1 1) / 13; border pixels are kept.
std::vector<double> smooth_image(const ImageBuffer& img) {
  std::vector<double> out = copy_data(img);
  const int h = img.height();
  const int w = img.width();
  const int ch = img.channels();
  for (int r = 1; r + 1 < h; ++r) {
    for (int c = 1; c + 1 < w; ++c) {
      for (int k = 0; k < ch; ++k) {
        double s = 4.0 * img.at(r, c, k);
        for (int dr = -1; dr <= 1; ++dr) {
          for (int dc = -1; dc <= 1; ++dc) s += img.at(r + dr, c + dc, k);
        }
        out[(static_cast<std::size_t>(r) * w + c) * ch + k] = s / 13.0;
      }
    }
  }
  return out;
}

void check_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument(std::string("augment policy: probability '") + name +
                                "' must lie in [0, 1]");
  }
}

}  // namespace

const std::array<AspectRatio, 16>& aspect_ratio_table() {
  static const std::array<AspectRatio, 16> table{{
      {6, 13}, {9, 16}, {3, 5}, {2, 3}, {4, 5}, {1, 1},
      {5, 4}, {4, 3}, {3, 2}, {14, 9}, {5, 3}, {16, 9}, {2, 1}, {24, 10}, {33, 10}, {18, 5},
  }};
  return table;
}

void CropSpec::validate(int src_height, int src_width) const {
  if (height < 1 || width < 1 || row < 0 || col < 0 || row + height > src_height ||
      col + width > src_width) {
    throw std::invalid_argument("crop does not fit inside the source image");
  }
  if (out_height < 4 || out_width < 4 || out_height % 4 != 0 || out_width % 4 != 0) {
    throw std::invalid_argument("crop output size must be positive multiples of 4");
  }
  const double n = static_cast<double>(src_height) * src_width;
  if (std::abs(static_cast<double>(out_height) * out_width - n) > kArPixelTolerance * n) {
    throw std::invalid_argument("crop output pixel count deviates more than 5% from the source");
  }
}

std::optional<std::pair<int, int>> ar_output_size(int src_height, int src_width, double ratio) {
  const double n = static_cast<double>(src_height) * src_width;
  const double h = std::sqrt(n / ratio);
  const double w = std::sqrt(n * ratio);
  std::optional<std::pair<int, int>> best;
  double best_err = 0.0;
  for (int hs : {4 * static_cast<int>(std::floor(h / 4)), 4 * static_cast<int>(std::ceil(h / 4))}) {
    for (int ws : {4 * static_cast<int>(std::floor(w / 4)), 4 * static_cast<int>(std::ceil(w / 4))}) {
      if (hs < 4 || ws < 4) continue;
      const double err = std::abs(static_cast<double>(hs) * ws - n);
      if (!best || err < best_err) {
        best = std::make_pair(hs, ws);
        best_err = err;
      }
    }
  }
  if (!best || best_err > kArPixelTolerance * n) return std::nullopt;
  return best;
}

CropSpec make_ar_crop(int src_height, int src_width, AspectRatio ratio, double scale, double row_u,
                      double col_u) {
  if (src_height < 1 || src_width < 1) throw std::invalid_argument("empty source image");
  if (!(scale > 0.0 && scale <= 1.0)) throw std::invalid_argument("crop scale must lie in (0, 1]");
  const double r = ratio.value();
  CropSpec spec;
  spec.ratio = ratio;
  spec.scale = scale;
  if (static_cast<double>(src_width) / src_height > r) {
    spec.height = std::clamp(static_cast<int>(std::lround(scale * src_height)), 1, src_height);
    spec.width = std::clamp(static_cast<int>(std::lround(spec.height * r)), 1, src_width);
  } else {
    spec.width = std::clamp(static_cast<int>(std::lround(scale * src_width)), 1, src_width);
    spec.height = std::clamp(static_cast<int>(std::lround(spec.width / r)), 1, src_height);
  }
  const int free_rows = src_height - spec.height;
  const int free_cols = src_width - spec.width;
  spec.row = std::min(free_rows, static_cast<int>(std::floor(row_u * (free_rows + 1))));
  spec.col = std::min(free_cols, static_cast<int>(std::floor(col_u * (free_cols + 1))));
  const auto out = ar_output_size(src_height, src_width, r);
  if (!out) throw std::invalid_argument("source too small for an aspect-ratio crop");
  spec.out_height = out->first;
  spec.out_width = out->second;
  spec.validate(src_height, src_width);
  return spec;
}

CropSpec sample_ar_crop(Rng& rng, int src_height, int src_width) {
  if (src_height < kMinArSource || src_width < kMinArSource) {
    throw std::invalid_argument("aspect-ratio augmentation needs a source of at least 64x64");
  }
  const auto& table = aspect_ratio_table();
  const AspectRatio ratio = table[rng.uniform_int(0, static_cast<int>(table.size()) - 1)];
  const double scale = rng.uniform(0.5, 1.0);
  const double row_u = rng.uniform();
  const double col_u = rng.uniform();
  return make_ar_crop(src_height, src_width, ratio, scale, row_u, col_u);
}

ImageBuffer crop_resize(const ImageBuffer& img, const CropSpec& spec) {
  spec.validate(img.height(), img.width());
  const int ch = img.channels();
  const double sx = spec.scale_x();
  const double sy = spec.scale_y();
  std::vector<double> out(static_cast<std::size_t>(spec.out_height) * spec.out_width * ch);
  std::size_t i = 0;
  for (int r = 0; r < spec.out_height; ++r) {
    const double y = std::clamp((r + 0.5) / sy - 0.5, 0.0, spec.height - 1.0);
    const int y0 = static_cast<int>(y);
    const int y1 = std::min(y0 + 1, spec.height - 1);
    const double ay = y - y0;
    for (int c = 0; c < spec.out_width; ++c) {
      const double x = std::clamp((c + 0.5) / sx - 0.5, 0.0, spec.width - 1.0);
      const int x0 = static_cast<int>(x);
      const int x1 = std::min(x0 + 1, spec.width - 1);
      const double ax = x - x0;
      for (int k = 0; k < ch; ++k) {
        const double a = img.at(spec.row + y0, spec.col + x0, k);
        const double b = img.at(spec.row + y0, spec.col + x1, k);
        const double cc = img.at(spec.row + y1, spec.col + x0, k);
        const double d = img.at(spec.row + y1, spec.col + x1, k);
        const double top = ax == 0.0 ? a : a + ax * (b - a);
        const double bot = ax == 0.0 ? cc : cc + ax * (d - cc);
        out[i++] = ay == 0.0 ? top : top + ay * (bot - top);
      }
    }
  }
  for (double& v : out) v = clamp01(v);
  return ImageBuffer(spec.out_height, spec.out_width, ch, std::move(out));
}

Intrinsics crop_intrinsics(const Intrinsics& k, const CropSpec& spec) {
  const double sx = spec.scale_x();
  const double sy = spec.scale_y();
  Intrinsics out;
  out.fx = k.fx * sx;
  out.fy = k.fy * sy;
  out.cx = (k.cx - spec.col) * sx;
  out.cy = (k.cy - spec.row) * sy;
  out.width = spec.out_width;
  out.height = spec.out_height;
  return out;
}

FrameTuple apply_ar_aug(const std::vector<ImageBuffer>& frames, const Intrinsics& k,
                        const CropSpec& spec) {
  if (frames.empty()) throw std::invalid_argument("apply_ar_aug: no frames");
  FrameTuple out;
  for (const auto& f : frames) {
    if (!f.same_shape(frames.front())) throw std::invalid_argument("apply_ar_aug: frame shapes differ");
    out.frames.push_back(crop_resize(f, spec));
  }
  out.intrinsics = crop_intrinsics(k, spec);
  return out;
}

ImageBuffer flip_horizontal(const ImageBuffer& img) {
  const int w = img.width();
  const int ch = img.channels();
  std::vector<double> out(img.data().size());
  std::size_t i = 0;
  for (int r = 0; r < img.height(); ++r) {
    for (int c = 0; c < w; ++c) {
      for (int k = 0; k < ch; ++k) out[i++] = img.at(r, w - 1 - c, k);
    }
  }
  return ImageBuffer(img.height(), w, ch, std::move(out));
}

Intrinsics flip_intrinsics(const Intrinsics& k) {
  Intrinsics out = k;
  out.cx = k.width - k.cx;
  return out;
}

ColorJitterParams sample_color_jitter(Rng& rng, const ColorJitterRanges& ranges) {
  ColorJitterParams p;
  auto factor = [&](double range) { return rng.uniform(std::max(0.0, 1.0 - range), 1.0 + range); };
  p.brightness = factor(ranges.brightness);
  p.contrast = factor(ranges.contrast);
  p.saturation = factor(ranges.saturation);
  p.hue = rng.uniform(-ranges.hue, ranges.hue);
  for (int i = 3; i > 0; --i) std::swap(p.order[i], p.order[rng.uniform_int(0, i)]);
  return p;
}

ImageBuffer apply_color_jitter(const ImageBuffer& img, const ColorJitterParams& params) {
  std::vector<double> data = copy_data(img);
  const int ch = img.channels();
  for (int op : params.order) {
    switch (op) {
      case 0: blend_constant(data, 0.0, params.brightness); break;
      case 1: blend_constant(data, mean_gray(data, ch), params.contrast); break;
      case 2:
        if (ch == 3) blend(data, grayscale_image(data, ch), params.saturation);
        break;
      case 3:
        if (ch == 3 && params.hue != 0.0) adjust_hue(data, params.hue);
        break;
      default: throw std::invalid_argument("color jitter: bad op index");
    }
  }
  return rebuild(img, std::move(data));
}

const char* to_string(PhotoOp op) {
  switch (op) {
    case PhotoOp::identity: return "identity";
    case PhotoOp::autocontrast: return "autocontrast";
    case PhotoOp::equalize: return "equalize";
    case PhotoOp::sharpness: return "sharpness";
    case PhotoOp::brightness: return "brightness";
    case PhotoOp::color: return "color";
    case PhotoOp::contrast: return "contrast";
  }
  return "?";
}

std::optional<PhotoOp> photo_op_from_string(const std::string& name) {
  for (int i = 0; i < kPhotoOpCount; ++i) {
    if (name == to_string(static_cast<PhotoOp>(i))) return static_cast<PhotoOp>(i);
  }
  return std::nullopt;
}

RandAugmentParams sample_randaugment(Rng& rng, int count, double max_magnitude) {
  RandAugmentParams p;
  for (int i = 0; i < count; ++i) {
    RandAugmentOp op;
    op.op = static_cast<PhotoOp>(rng.uniform_int(0, kPhotoOpCount - 1));
    op.magnitude = rng.uniform(0.0, max_magnitude);
    if (rng.bernoulli(0.5)) op.magnitude = -op.magnitude;
    p.ops.push_back(op);
  }
  return p;
}

ImageBuffer apply_photo_op(const ImageBuffer& img, const RandAugmentOp& op) {
  const int ch = img.channels();
  const double factor = 1.0 + op.magnitude;
  std::vector<double> data;
  switch (op.op) {
    case PhotoOp::identity: return img;
    case PhotoOp::autocontrast:
      data = copy_data(img);
      apply_histogram_op(data, ch, autocontrast_lut);
      break;
    case PhotoOp::equalize:
      data = copy_data(img);
      apply_histogram_op(data, ch, equalize_lut);
      break;
    case PhotoOp::sharpness:
      data = copy_data(img);
      blend(data, smooth_image(img), factor);
      break;
    case PhotoOp::brightness:
      data = copy_data(img);
      blend_constant(data, 0.0, factor);
      break;
    case PhotoOp::color:
      if (ch != 3) return img;
      data = copy_data(img);
      blend(data, grayscale_image(data, ch), factor);
      break;
    case PhotoOp::contrast:
      data = copy_data(img);
      blend_constant(data, mean_gray(data, ch), factor);
      break;
  }
  return rebuild(img, std::move(data));
}

ImageBuffer apply_randaugment(const ImageBuffer& img, const RandAugmentParams& params) {
  ImageBuffer out = img;
  for (const auto& op : params.ops) out = apply_photo_op(out, op);
  return out;
}

std::vector<ImageBuffer> randaugment_photo(Rng& rng, const std::vector<ImageBuffer>& frames,
                                           int count, double max_magnitude) {
  const RandAugmentParams params = sample_randaugment(rng, count, max_magnitude);
  std::vector<ImageBuffer> out;
  for (const auto& f : frames) out.push_back(apply_randaugment(f, params));
  return out;
}

const char* to_string(FillMode mode) {
  switch (mode) {
    case FillMode::white: return "white";
    case FillMode::black: return "black";
    case FillMode::grayscale: return "grayscale";
    case FillMode::rgb: return "rgb";
    case FillMode::random: return "random";
  }
  return "?";
}

std::optional<FillMode> fill_mode_from_string(const std::string& name) {
  for (int i = 0; i < kFillModeCount; ++i) {
    if (name == to_string(static_cast<FillMode>(i))) return static_cast<FillMode>(i);
  }
  return std::nullopt;
}

void CutoutConfig::validate() const {
  if (!(min_area > 0.0 && min_area <= max_area && max_area <= 1.0)) {
    throw std::invalid_argument("cutout area bounds must satisfy 0 < min <= max <= 1");
  }
  if (!(max_aspect >= 1.0)) throw std::invalid_argument("cutout max_aspect must be >= 1");
}

CutoutSpec sample_cutout(Rng& rng, int height, int width, const CutoutConfig& config) {
  config.validate();
  const double n = static_cast<double>(height) * width;
  const double log_aspect = std::log(config.max_aspect);
  CutoutSpec spec;
  bool found = false;
  for (int attempt = 0; attempt < 100 && !found; ++attempt) {
    const double area = rng.uniform(config.min_area, config.max_area) * n;
    const double aspect = std::exp(rng.uniform(-log_aspect, log_aspect));
    const int h = static_cast<int>(std::lround(std::sqrt(area * aspect)));
    const int w = static_cast<int>(std::lround(std::sqrt(area / aspect)));
    const double frac = static_cast<double>(h) * w / n;
    if (h >= 1 && w >= 1 && h <= height && w <= width && frac >= config.min_area &&
        frac <= config.max_area) {
      spec.height = h;
      spec.width = w;
      found = true;
    }
  }
  if (!found) throw std::invalid_argument("image too small for the cutout area bounds");
  spec.row = rng.uniform_int(0, height - spec.height);
  spec.col = rng.uniform_int(0, width - spec.width);
  spec.fill = static_cast<FillMode>(rng.uniform_int(0, kFillModeCount - 1));
  switch (spec.fill) {
    case FillMode::white: spec.color = {1.0, 1.0, 1.0}; break;
    case FillMode::black: spec.color = {0.0, 0.0, 0.0}; break;
    case FillMode::grayscale: {
      const double g = rng.uniform();
      spec.color = {g, g, g};
      break;
    }
    case FillMode::rgb: spec.color = {rng.uniform(), rng.uniform(), rng.uniform()}; break;
    case FillMode::random: spec.noise_seed = rng.next(); break;
  }
  return spec;
}

CutoutResult apply_cutout(const ImageBuffer& img, const CutoutSpec& spec) {
  if (spec.height < 1 || spec.width < 1 || spec.row < 0 || spec.col < 0 ||
      spec.row + spec.height > img.height() || spec.col + spec.width > img.width()) {
    throw std::invalid_argument("cutout rectangle does not fit the image");
  }
  const int ch = img.channels();
  std::vector<double> data = copy_data(img);
  BoolMask erased(img.height(), img.width(), 0);
  std::array<double, 3> color = spec.color;
  switch (spec.fill) {
    case FillMode::white: color = {1.0, 1.0, 1.0}; break;
    case FillMode::black: color = {0.0, 0.0, 0.0}; break;
    case FillMode::grayscale: color = {spec.color[0], spec.color[0], spec.color[0]}; break;
    case FillMode::rgb:
    case FillMode::random: break;
  }
  for (double v : color) {
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("cutout fill color must lie in [0, 1]");
  }
  Rng noise(spec.noise_seed);
  for (int r = spec.row; r < spec.row + spec.height; ++r) {
    for (int c = spec.col; c < spec.col + spec.width; ++c) {
      erased(r, c) = 1;
      for (int k = 0; k < ch; ++k) {
        double& v = data[(static_cast<std::size_t>(r) * img.width() + c) * ch + k];
        v = spec.fill == FillMode::random ? noise.uniform() : color[ch == 3 ? k : 0];
      }
    }
  }
  return {ImageBuffer(img.height(), img.width(), ch, std::move(data)), std::move(erased)};
}

CutoutResult cutout(Rng& rng, const ImageBuffer& frame, const CutoutConfig& config) {
  if (frame.empty()) throw std::invalid_argument("cutout: empty frame");
  return apply_cutout(frame, sample_cutout(rng, frame.height(), frame.width(), config));
}

void AugmentPolicy::validate() const {
  check_probability(flip, "flip");
  check_probability(color_jitter, "color_jitter");
  check_probability(randaugment, "randaugment");
  check_probability(cutout, "cutout");
  check_probability(ar_aug, "ar_aug");
  if (!(jitter.brightness >= 0.0 && jitter.contrast >= 0.0 && jitter.saturation >= 0.0 &&
        jitter.hue >= 0.0 && jitter.hue <= 0.5)) {
    throw std::invalid_argument("augment policy: color jitter ranges must be >= 0 (hue <= 0.5)");
  }
  if (randaugment_ops < 0) throw std::invalid_argument("augment policy: randaugment_ops must be >= 0");
  if (!(randaugment_magnitude >= 0.0 && randaugment_magnitude <= 1.0)) {
    throw std::invalid_argument("augment policy: randaugment_magnitude must lie in [0, 1]");
  }
  cutout_config.validate();
}

AugmentPolicy AugmentPolicy::none() {
  AugmentPolicy p;
  p.flip = p.color_jitter = p.randaugment = p.cutout = p.ar_aug = 0.0;
  return p;
}

AugmentRecord sample_policy(Rng& rng, const AugmentPolicy& policy, int height, int width) {
  policy.validate();
  AugmentRecord rec;
  const bool ar_fires = rng.bernoulli(policy.ar_aug);
  if (ar_fires && height >= kMinArSource && width >= kMinArSource) {
    rec.ar_aug = sample_ar_crop(rng, height, width);
    height = rec.ar_aug->out_height;
    width = rec.ar_aug->out_width;
  }
  rec.flip = rng.bernoulli(policy.flip);
  if (rng.bernoulli(policy.color_jitter)) rec.color_jitter = sample_color_jitter(rng, policy.jitter);
  if (rng.bernoulli(policy.randaugment)) {
    rec.randaugment = sample_randaugment(rng, policy.randaugment_ops, policy.randaugment_magnitude);
  }
  if (rng.bernoulli(policy.cutout)) rec.cutout = sample_cutout(rng, height, width, policy.cutout_config);
  return rec;
}

AugmentResult replay(const AugmentRecord& record, const std::vector<ImageBuffer>& frames,
                     const Intrinsics& k) {
  if (frames.empty()) throw std::invalid_argument("augment: no frames");
  for (const auto& f : frames) {
    if (!f.same_shape(frames.front())) throw std::invalid_argument("augment: frame shapes differ");
  }
  AugmentResult out;
  out.record = record;
  out.tuple = record.ar_aug ? apply_ar_aug(frames, k, *record.ar_aug) : FrameTuple{frames, k};
  auto& fs = out.tuple.frames;
  if (record.flip) {
    for (auto& f : fs) f = flip_horizontal(f);
    out.tuple.intrinsics = flip_intrinsics(out.tuple.intrinsics);
  }
  if (record.color_jitter) {
    for (auto& f : fs) f = apply_color_jitter(f, *record.color_jitter);
  }
  if (record.randaugment) {
    for (auto& f : fs) f = apply_randaugment(f, *record.randaugment);
  }
  if (record.cutout) {
    CutoutResult cut = apply_cutout(fs.front(), *record.cutout);
    fs.front() = std::move(cut.image);
    out.erased = std::move(cut.erased);
  }
  return out;
}

AugmentResult apply_policy(Rng& rng, const AugmentPolicy& policy,
                           const std::vector<ImageBuffer>& frames, const Intrinsics& k) {
  if (frames.empty()) throw std::invalid_argument("augment: no frames");
  const AugmentRecord record = sample_policy(rng, policy, frames.front().height(), frames.front().width());
  return replay(record, frames, k);
}

}  // namespace mdepth
