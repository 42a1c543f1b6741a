#include "mdepth/scene_state.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace mdepth {

void DepthRange::validate() const {
  if (!(near > 0.0 && std::isfinite(far) && near < far)) {
    std::ostringstream err;
    err << "depth range: need 0 < near < far, got [" << near << ", " << far << "]";
    throw std::invalid_argument(err.str());
  }
}

double disparity_to_depth(double disparity, const DepthRange& range) {
  range.validate();
  return 1.0 / (range.a() * disparity + range.b());
}

double disparity_to_depth_derivative(double disparity, const DepthRange& range) {
  const double depth = disparity_to_depth(disparity, range);
  return -range.a() * depth * depth;
}

double depth_to_disparity(double depth, const DepthRange& range) {
  range.validate();
  return (1.0 / depth - range.b()) / range.a();
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double logit(double p) { return std::log(p) - std::log1p(-p); }

double softplus(double x) {
  // log(1 + e^x) without overflow
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double inverse_softplus(double y) {
  if (!(y > 0.0)) throw std::invalid_argument("inverse_softplus: argument must be positive");
  // log(e^y - 1) = y + log(1 - e^-y)
  return y > 20.0 ? y + std::log1p(-std::exp(-y)) : std::log(std::expm1(y));
}

Intrinsics intrinsics_from_raw(const RawIntrinsics& raw, int width, int height) {
  Intrinsics k;
  k.width = width;
  k.height = height;
  // softplus underflows to 0 below about -745; keep the focal lengths positive
  constexpr double tiny = std::numeric_limits<double>::min();
  k.fx = std::max(softplus(raw[0]), tiny) * width;
  k.fy = std::max(softplus(raw[1]), tiny) * height;
  k.cx = sigmoid(raw[2]) * width;
  k.cy = sigmoid(raw[3]) * height;
  return k;
}

std::array<double, 4> intrinsics_from_raw_derivative(const RawIntrinsics& raw, int width,
                                                     int height) {
  const double sx = sigmoid(raw[2]);
  const double sy = sigmoid(raw[3]);
  return {sigmoid(raw[0]) * width, sigmoid(raw[1]) * height, sx * (1.0 - sx) * width,
          sy * (1.0 - sy) * height};
}

RawIntrinsics intrinsics_to_raw(const Intrinsics& k) {
  k.validate();
  if (k.cx <= 0.0 || k.cx >= k.width || k.cy <= 0.0 || k.cy >= k.height) {
    throw std::invalid_argument("intrinsics_to_raw: principal point must be strictly inside the image");
  }
  return {inverse_softplus(k.fx / k.width), inverse_softplus(k.fy / k.height),
          logit(k.cx / k.width), logit(k.cy / k.height)};
}

DisparityField SceneState::disparity() const {
  Grid<double> d(height(), width(), 0.0);
  for (std::size_t i = 0; i < d.size(); ++i) {
    d[i] = sigmoid(std::clamp(logits[i], -kLogitLimit, kLogitLimit));
  }
  return DisparityField(std::move(d));
}

Grid<double> SceneState::depth_values() const {
  range.validate();
  Grid<double> out(height(), width(), 0.0);
  const double a = range.a();
  const double b = range.b();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = 1.0 / (a * sigmoid(std::clamp(logits[i], -kLogitLimit, kLogitLimit)) + b);
  }
  return out;
}

SceneState SceneState::gauge_scaled(double s) const {
  if (!(s > 0.0 && std::isfinite(s))) throw std::invalid_argument("gauge scale must be positive");
  SceneState out = *this;
  out.range.near = range.near * s;
  out.range.far = range.far * s;
  for (auto& p : out.poses) p.translation *= s;
  return out;
}

SceneState SceneState::initial(int height, int width, std::vector<int> offsets,
                               const DepthRange& range) {
  range.validate();
  SceneState s;
  s.logits = Grid<double>(height, width, logit(0.3));
  s.poses.assign(offsets.size(), PoseSE3::identity());
  s.offsets = std::move(offsets);
  const double unit = inverse_softplus(1.0);
  s.intrinsics_raw = {unit, unit, 0.0, 0.0};
  s.range = range;
  return s;
}

}  // namespace mdepth
