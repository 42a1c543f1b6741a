#include "mdepth/image.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mdepth {

ImageBuffer::ImageBuffer(int height, int width, int channels, std::vector<double> data)
    : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
  if (height < 1 || width < 1) {
    throw std::invalid_argument("ImageBuffer: dimensions must be >= 1");
  }
  if (channels != 1 && channels != 3) {
    throw std::invalid_argument("ImageBuffer: channels must be 1 or 3, got " +
                                std::to_string(channels));
  }
  if (data_.size() != pixel_count() * static_cast<std::size_t>(channels)) {
    throw std::invalid_argument("ImageBuffer: data length does not match shape");
  }
  for (std::size_t i = 0; i < data_.size(); ++i) {
    const double v = data_[i];
    if (!(v >= 0.0 && v <= 1.0)) {
      throw std::invalid_argument("ImageBuffer: value " + std::to_string(v) + " at index " +
                                  std::to_string(i) + " outside [0,1]");
    }
  }
}

ImageBuffer ImageBuffer::filled(int height, int width, int channels, double value) {
  return ImageBuffer(height, width, channels,
                     std::vector<double>(static_cast<std::size_t>(height) * width * channels, value));
}

Grid<double> ImageBuffer::luminance_mean() const {
  Grid<double> out(height_, width_, 0.0);
  for (std::size_t p = 0; p < pixel_count(); ++p) {
    double s = 0.0;
    for (int c = 0; c < channels_; ++c) s += data_[p * channels_ + c];
    out[p] = s / channels_;
  }
  return out;
}

DepthMap::DepthMap(Grid<double> depth) : depth_(std::move(depth)) {
  valid_ = BoolMask(depth_.height(), depth_.width(), 0);
  for (std::size_t i = 0; i < depth_.size(); ++i) {
    valid_[i] = (std::isfinite(depth_[i]) && depth_[i] > 0.0) ? 1 : 0;
  }
}

DepthMap::DepthMap(Grid<double> depth, const BoolMask& valid) : DepthMap(std::move(depth)) {
  if (!valid.same_shape(depth_)) {
    throw std::invalid_argument("DepthMap: mask shape does not match depth shape");
  }
  for (std::size_t i = 0; i < valid_.size(); ++i) valid_[i] = (valid_[i] && valid[i]) ? 1 : 0;
}

DisparityField::DisparityField(Grid<double> values) : values_(std::move(values)) {
  for (double d : values_.values()) {
    if (!(d > 0.0 && d < 1.0)) {
      throw std::invalid_argument("DisparityField: value " + std::to_string(d) +
                                  " outside open interval (0,1)");
    }
  }
}

}  // namespace mdepth
