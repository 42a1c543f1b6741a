#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mdepth {

/// Dense row-major 2D array. The building block for masks, depth maps and
/// per-pixel loss maps.
template <typename T>
class Grid {
 public:
  Grid() = default;

  Grid(int height, int width, T fill = T{}) : height_(height), width_(width) {
    check_dims(height, width);
    values_.assign(static_cast<std::size_t>(height) * static_cast<std::size_t>(width), fill);
  }

  Grid(int height, int width, std::vector<T> values)
      : height_(height), width_(width), values_(std::move(values)) {
    check_dims(height, width);
    if (values_.size() != static_cast<std::size_t>(height) * static_cast<std::size_t>(width)) {
      throw std::invalid_argument("Grid: value count does not match " + std::to_string(height) +
                                  "x" + std::to_string(width));
    }
  }

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  T& operator()(int row, int col) { return values_[index(row, col)]; }
  const T& operator()(int row, int col) const { return values_[index(row, col)]; }
  T& operator[](std::size_t i) { return values_[i]; }
  const T& operator[](std::size_t i) const { return values_[i]; }

  std::span<const T> values() const { return values_; }
  std::span<T> values() { return values_; }

  template <typename U>
  bool same_shape(const Grid<U>& other) const {
    return height_ == other.height() && width_ == other.width();
  }

  bool operator==(const Grid&) const = default;

 private:
  static void check_dims(int height, int width) {
    if (height < 1 || width < 1) {
      throw std::invalid_argument("Grid: dimensions must be >= 1");
    }
  }
  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(col);
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<T> values_;
};

/// Per-pixel boolean (stored as bytes so spans and equality stay cheap).
using BoolMask = Grid<std::uint8_t>;

inline std::size_t count_true(const BoolMask& mask) {
  std::size_t n = 0;
  for (auto v : mask.values()) n += v ? 1 : 0;
  return n;
}

}  // namespace mdepth
