#pragma once

#include <span>
#include <vector>

#include "mdepth/grid.hpp"

namespace mdepth {

/// H x W x C intensities in [0, 1], row-major with interleaved channels.
/// Immutable after construction; out-of-range data is rejected, never clamped.
class ImageBuffer {
 public:
  ImageBuffer() = default;
  ImageBuffer(int height, int width, int channels, std::vector<double> data);

  static ImageBuffer filled(int height, int width, int channels, double value);

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_);
  }
  bool empty() const { return data_.empty(); }

  double at(int row, int col, int channel = 0) const {
    return data_[(static_cast<std::size_t>(row) * width_ + col) * channels_ + channel];
  }
  std::span<const double> data() const { return data_; }

  bool same_shape(const ImageBuffer& other) const {
    return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
  }
  template <typename T>
  bool same_extent(const Grid<T>& grid) const {
    return height_ == grid.height() && width_ == grid.width();
  }

  /// Mean over channels, one value per pixel.
  Grid<double> luminance_mean() const;

  bool operator==(const ImageBuffer&) const = default;

 private:
  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

/// Depth in scene units with a validity mask. Entries that are non-positive or
/// non-finite are always marked invalid.
class DepthMap {
 public:
  DepthMap() = default;
  explicit DepthMap(Grid<double> depth);
  DepthMap(Grid<double> depth, const BoolMask& valid);

  int height() const { return depth_.height(); }
  int width() const { return depth_.width(); }
  const Grid<double>& depth() const { return depth_; }
  const BoolMask& valid() const { return valid_; }
  double operator()(int row, int col) const { return depth_(row, col); }
  bool valid(int row, int col) const { return valid_(row, col) != 0; }

 private:
  Grid<double> depth_;
  BoolMask valid_;
};

/// Sigmoid disparity, every value in the open interval (0, 1).
class DisparityField {
 public:
  DisparityField() = default;
  explicit DisparityField(Grid<double> values);

  int height() const { return values_.height(); }
  int width() const { return values_.width(); }
  const Grid<double>& values() const { return values_; }
  double operator()(int row, int col) const { return values_(row, col); }

 private:
  Grid<double> values_;
};

}  // namespace mdepth
