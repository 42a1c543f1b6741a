#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mdepth/camera.hpp"
#include "mdepth/grid.hpp"
#include "mdepth/image.hpp"
#include "mdepth/rng.hpp"

namespace mdepth {

// ---------------------------------------------------------------------------
// Aspect-ratio augmentation

/// width:height
struct AspectRatio {
  int w;
  int h;
  double value() const { return static_cast<double>(w) / h; }
  bool operator==(const AspectRatio&) const = default;
};

/// Six portrait ratios followed by ten landscape ones.
const std::array<AspectRatio, 16>& aspect_ratio_table();

inline constexpr int kMinArSource = 64;
inline constexpr double kArPixelTolerance = 0.05;

struct CropSpec {
  int row = 0;  // crop origin
  int col = 0;
  int height = 0;  // crop size
  int width = 0;
  int out_height = 0;
  int out_width = 0;
  AspectRatio ratio{1, 1};
  double scale = 1.0;  // share of the binding source dimension

  double scale_x() const { return static_cast<double>(out_width) / width; }
  double scale_y() const { return static_cast<double>(out_height) / height; }

  /// Throws unless the crop fits the source and the output keeps the source
  /// pixel count within 5%.
  void validate(int src_height, int src_width) const;
  bool operator==(const CropSpec&) const = default;
};

/// Output extent with the source pixel count for width:height = ratio, both
/// sides multiples of 4; nullopt when no such size is within 5%.
std::optional<std::pair<int, int>> ar_output_size(int src_height, int src_width, double ratio);

/// Crop of the given ratio covering `scale` of the binding dimension, placed
/// at (row_u, col_u) in [0, 1] of the free range.
CropSpec make_ar_crop(int src_height, int src_width, AspectRatio ratio, double scale,
                      double row_u = 0.5, double col_u = 0.5);

/// Ratio uniform over the table, scale uniform in [0.5, 1], placement uniform.
CropSpec sample_ar_crop(Rng& rng, int src_height, int src_width);

/// Bilinear crop+resize on pixel centers; a resize factor of 1 copies pixels.
ImageBuffer crop_resize(const ImageBuffer& img, const CropSpec& spec);

/// Intrinsics after the crop: principal point shifted by the origin, then
/// focal and principal point scaled per axis. The principal point may fall
/// outside the crop, so the result is not validated.
Intrinsics crop_intrinsics(const Intrinsics& k, const CropSpec& spec);

struct FrameTuple {
  std::vector<ImageBuffer> frames;  // frames[0] is the target
  Intrinsics intrinsics;
};

FrameTuple apply_ar_aug(const std::vector<ImageBuffer>& frames, const Intrinsics& k,
                        const CropSpec& spec);

// ---------------------------------------------------------------------------
// Flip and color jitter

ImageBuffer flip_horizontal(const ImageBuffer& img);
/// cx' = width - cx
Intrinsics flip_intrinsics(const Intrinsics& k);

struct ColorJitterRanges {
  double brightness = 0.2;
  double contrast = 0.2;
  double saturation = 0.2;
  double hue = 0.1;
};

struct ColorJitterParams {
  double brightness = 1.0;  // factors
  double contrast = 1.0;
  double saturation = 1.0;
  double hue = 0.0;                 // shift in turns
  std::array<int, 4> order{0, 1, 2, 3};  // brightness, contrast, saturation, hue
  bool operator==(const ColorJitterParams&) const = default;
};

ColorJitterParams sample_color_jitter(Rng& rng, const ColorJitterRanges& ranges = {});
ImageBuffer apply_color_jitter(const ImageBuffer& img, const ColorJitterParams& params);

// ---------------------------------------------------------------------------
// Photometric RandAugment

enum class PhotoOp { identity, autocontrast, equalize, sharpness, brightness, color, contrast };
inline constexpr int kPhotoOpCount = 7;
const char* to_string(PhotoOp op);
std::optional<PhotoOp> photo_op_from_string(const std::string& name);

struct RandAugmentOp {
  PhotoOp op = PhotoOp::identity;
  double magnitude = 0.0;  // signed; enhancement factor is 1 + magnitude
  bool operator==(const RandAugmentOp&) const = default;
};

struct RandAugmentParams {
  std::vector<RandAugmentOp> ops;
  bool operator==(const RandAugmentParams&) const = default;
};

/// `count` ops drawn with replacement, magnitudes uniform in [0, max] with a random sign.
RandAugmentParams sample_randaugment(Rng& rng, int count = 3, double max_magnitude = 0.9);
ImageBuffer apply_photo_op(const ImageBuffer& img, const RandAugmentOp& op);
ImageBuffer apply_randaugment(const ImageBuffer& img, const RandAugmentParams& params);
/// One draw applied identically to every frame.
std::vector<ImageBuffer> randaugment_photo(Rng& rng, const std::vector<ImageBuffer>& frames,
                                           int count = 3, double max_magnitude = 0.9);

// ---------------------------------------------------------------------------
// CutOut

enum class FillMode { white, black, grayscale, rgb, random };
inline constexpr int kFillModeCount = 5;
const char* to_string(FillMode mode);
std::optional<FillMode> fill_mode_from_string(const std::string& name);

struct CutoutConfig {
  double min_area = 0.02;  // fraction of the image
  double max_area = 0.25;
  double max_aspect = 3.0;  // rectangle h/w drawn log-uniform in [1/max, max]
  void validate() const;
};

struct CutoutSpec {
  int row = 0;
  int col = 0;
  int height = 0;
  int width = 0;
  FillMode fill = FillMode::black;
  std::array<double, 3> color{0.0, 0.0, 0.0};  // grayscale and rgb fills
  std::uint64_t noise_seed = 0;                // random fill
  bool operator==(const CutoutSpec&) const = default;
};

CutoutSpec sample_cutout(Rng& rng, int height, int width, const CutoutConfig& config = {});
struct CutoutResult {
  ImageBuffer image;
  BoolMask erased;
};
CutoutResult apply_cutout(const ImageBuffer& img, const CutoutSpec& spec);
CutoutResult cutout(Rng& rng, const ImageBuffer& frame, const CutoutConfig& config = {});

// ---------------------------------------------------------------------------
// Policy

struct AugmentPolicy {
  double flip = 0.5;
  double color_jitter = 0.3;
  double randaugment = 0.3;
  double cutout = 0.3;
  double ar_aug = 0.7;
  ColorJitterRanges jitter;
  int randaugment_ops = 3;
  double randaugment_magnitude = 0.9;
  CutoutConfig cutout_config;

  void validate() const;
  /// Every probability 0.
  static AugmentPolicy none();
};

/// Everything apply_policy did, sufficient to replay it without the RNG.
struct AugmentRecord {
  std::optional<CropSpec> ar_aug;
  bool flip = false;
  std::optional<ColorJitterParams> color_jitter;
  std::optional<RandAugmentParams> randaugment;
  std::optional<CutoutSpec> cutout;  // target frame only
  bool operator==(const AugmentRecord&) const = default;
};

struct AugmentResult {
  FrameTuple tuple;
  AugmentRecord record;
  std::optional<BoolMask> erased;
};

/// Draws every decision for a tuple of the given source extent. AR-Aug is
/// skipped when the source is below 64x64.
AugmentRecord sample_policy(Rng& rng, const AugmentPolicy& policy, int height, int width);

/// AR-Aug, flip, color jitter, RandAugment, then CutOut on the target.
/// Geometric and photometric ops hit every frame with the same parameters.
AugmentResult replay(const AugmentRecord& record, const std::vector<ImageBuffer>& frames,
                     const Intrinsics& k);

AugmentResult apply_policy(Rng& rng, const AugmentPolicy& policy,
                           const std::vector<ImageBuffer>& frames, const Intrinsics& k);

}  // namespace mdepth
