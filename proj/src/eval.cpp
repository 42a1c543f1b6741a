#include "mdepth/eval.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_map>

#include "mdepth/geometry.hpp"

namespace mdepth {
namespace {

bool selected(const std::optional<BoolMask>& mask, std::size_t i) { return !mask || (*mask)[i] != 0; }

template <typename T>
void check_mask(const std::optional<BoolMask>& mask, const Grid<T>& like, const char* what) {
  if (mask && !mask->same_shape(like)) throw std::invalid_argument(std::string(what) + ": mask shape mismatch");
}

void check_pair(const DepthMap& pred, const DepthMap& gt, const std::optional<BoolMask>& mask,
                const char* what) {
  if (!pred.depth().same_shape(gt.depth())) {
    throw std::invalid_argument(std::string(what) + ": prediction and ground truth shapes differ");
  }
  check_mask(mask, gt.depth(), what);
}

double median(std::vector<double> v) {
  const std::size_t n = v.size();
  std::nth_element(v.begin(), v.begin() + n / 2, v.end());
  const double hi = v[n / 2];
  if (n % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + n / 2);
  return 0.5 * (lo + hi);
}

template <typename F>
double mean_over_valid(const DepthMap& pred, const DepthMap& gt, const std::optional<BoolMask>& mask,
                       const char* what, F f) {
  check_pair(pred, gt, mask, what);
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < gt.depth().size(); ++i) {
    if (!gt.valid()[i] || !pred.valid()[i] || !selected(mask, i)) continue;
    sum += f(pred.depth()[i], gt.depth()[i]);
    ++n;
  }
  if (n == 0) throw std::invalid_argument(std::string(what) + ": no valid pixels");
  return 100.0 * sum / static_cast<double>(n);
}

std::size_t count_matched_brute(const std::vector<Eigen::Vector3d>& from,
                                const std::vector<Eigen::Vector3d>& to, double t2) {
  std::size_t matched = 0;
  for (const auto& p : from) {
    for (const auto& q : to) {
      if ((p - q).squaredNorm() < t2) {
        ++matched;
        break;
      }
    }
  }
  return matched;
}

struct CellHash {
  std::size_t operator()(const std::array<long long, 3>& c) const {
    std::size_t h = 1469598103934665603ull;
    for (long long v : c) h = (h ^ static_cast<std::size_t>(v)) * 1099511628211ull;
    return h;
  }
};

// Voxel grid with cell size = threshold, so every neighbor closer than the
// threshold lies in the 27 surrounding cells.
std::size_t count_matched_grid(const std::vector<Eigen::Vector3d>& from,
                               const std::vector<Eigen::Vector3d>& to, double threshold) {
  auto cell = [threshold](const Eigen::Vector3d& p) {
    return std::array<long long, 3>{static_cast<long long>(std::floor(p.x() / threshold)),
                                    static_cast<long long>(std::floor(p.y() / threshold)),
                                    static_cast<long long>(std::floor(p.z() / threshold))};
  };
  std::unordered_map<std::array<long long, 3>, std::vector<std::size_t>, CellHash> cells;
  for (std::size_t i = 0; i < to.size(); ++i) cells[cell(to[i])].push_back(i);
  const double t2 = threshold * threshold;
  std::size_t matched = 0;
  for (const auto& p : from) {
    const auto c = cell(p);
    bool hit = false;
    for (long long dx = -1; dx <= 1 && !hit; ++dx) {
      for (long long dy = -1; dy <= 1 && !hit; ++dy) {
        for (long long dz = -1; dz <= 1 && !hit; ++dz) {
          const auto it = cells.find({c[0] + dx, c[1] + dy, c[2] + dz});
          if (it == cells.end()) continue;
          for (std::size_t j : it->second) {
            if ((p - to[j]).squaredNorm() < t2) {
              hit = true;
              break;
            }
          }
        }
      }
    }
    matched += hit ? 1 : 0;
  }
  return matched;
}

std::vector<Eigen::Vector3d> cloud(const DepthMap& depth, const Intrinsics& k,
                                   const std::optional<BoolMask>& mask) {
  const PointField field = backproject(make_pixel_grid(depth.height(), depth.width()), depth, k);
  std::vector<Eigen::Vector3d> out;
  for (std::size_t i = 0; i < field.points.size(); ++i) {
    if (field.valid[i] && selected(mask, i)) out.push_back(field.points[i]);
  }
  return out;
}

}  // namespace

AlignmentResult align_lstsq(const Grid<double>& pred_disp, const DepthMap& gt,
                            const std::optional<BoolMask>& mask) {
  if (!pred_disp.same_shape(gt.depth())) {
    throw std::invalid_argument("align_lstsq: prediction and ground truth shapes differ");
  }
  check_mask(mask, gt.depth(), "align_lstsq");
  std::vector<double> p;
  std::vector<double> g;
  for (std::size_t i = 0; i < pred_disp.size(); ++i) {
    if (!gt.valid()[i] || !selected(mask, i) || !std::isfinite(pred_disp[i])) continue;
    p.push_back(pred_disp[i]);
    g.push_back(1.0 / gt.depth()[i]);
  }
  const std::size_t n = p.size();
  if (n < 2) throw std::invalid_argument("align_lstsq: need at least 2 valid pixels");
  const bool flat_gt = std::all_of(g.begin(), g.end(), [&](double v) { return v == g.front(); });
  double pm = 0.0;
  double gm = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    pm += p[i];
    gm += g[i];
  }
  pm /= static_cast<double>(n);
  gm /= static_cast<double>(n);
  // Normal equations in centered form.
  double spp = 0.0;
  double spg = 0.0;
  double sp2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    spp += (p[i] - pm) * (p[i] - pm);
    spg += (p[i] - pm) * (g[i] - gm);
    sp2 += p[i] * p[i];
  }
  AlignmentResult r;
  r.count = n;
  if (flat_gt || spp <= 1e-12 * sp2) {
    const double pmed = median(p);
    if (!(pmed > 0.0)) throw std::invalid_argument("align_lstsq: degenerate non-positive prediction");
    r.scale = median(g) / pmed;
    r.shift = 0.0;
    r.median_fallback = true;
  } else {
    r.scale = spg / spp;
    r.shift = gm - r.scale * pm;
  }
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = r.scale * p[i] + r.shift - g[i];
    ss += e * e;
  }
  r.residual = std::sqrt(ss / static_cast<double>(n));
  return r;
}

AlignedDepth aligned_depth(const Grid<double>& pred_disp, const AlignmentResult& alignment) {
  Grid<double> depth(pred_disp.height(), pred_disp.width(), 0.0);
  std::size_t clamped = 0;
  for (std::size_t i = 0; i < pred_disp.size(); ++i) {
    if (!std::isfinite(pred_disp[i])) {
      depth[i] = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    double d = alignment.scale * pred_disp[i] + alignment.shift;
    if (!(d >= kAlignEpsilon)) {
      d = kAlignEpsilon;
      ++clamped;
    }
    depth[i] = 1.0 / d;
  }
  return {DepthMap(std::move(depth)), clamped};
}

DepthMap median_scale(const DepthMap& pred, const DepthMap& gt, const std::optional<BoolMask>& mask) {
  check_pair(pred, gt, mask, "median_scale");
  std::vector<double> p;
  std::vector<double> g;
  for (std::size_t i = 0; i < gt.depth().size(); ++i) {
    if (!gt.valid()[i] || !pred.valid()[i] || !selected(mask, i)) continue;
    p.push_back(pred.depth()[i]);
    g.push_back(gt.depth()[i]);
  }
  if (p.empty()) throw std::invalid_argument("median_scale: no valid pixels");
  const double s = median(g) / median(p);
  Grid<double> out = pred.depth();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= s;
  return DepthMap(std::move(out), pred.valid());
}

double abs_rel(const DepthMap& pred, const DepthMap& gt, const std::optional<BoolMask>& mask) {
  return mean_over_valid(pred, gt, mask, "abs_rel", [](double p, double g) { return std::abs(g - p) / g; });
}

double delta_acc(const DepthMap& pred, const DepthMap& gt, const std::optional<BoolMask>& mask,
                 double threshold) {
  if (!(threshold > 1.0)) throw std::invalid_argument("delta_acc: threshold must exceed 1");
  return mean_over_valid(pred, gt, mask, "delta_acc", [threshold](double p, double g) {
    return std::max(p / g, g / p) < threshold ? 1.0 : 0.0;
  });
}

FScore fscore_clouds(const std::vector<Eigen::Vector3d>& pred, const std::vector<Eigen::Vector3d>& gt,
                     double threshold, NeighborSearch search) {
  if (pred.empty() || gt.empty()) throw std::invalid_argument("fscore: empty point cloud");
  if (!(threshold > 0.0)) throw std::invalid_argument("fscore: threshold must be positive");
  if (search == NeighborSearch::automatic) {
    search = std::max(pred.size(), gt.size()) < kBruteForceLimit ? NeighborSearch::brute_force
                                                                  : NeighborSearch::grid;
  }
  auto matched = [&](const auto& from, const auto& to) {
    return search == NeighborSearch::brute_force ? count_matched_brute(from, to, threshold * threshold)
                                                 : count_matched_grid(from, to, threshold);
  };
  FScore f;
  const double p = static_cast<double>(matched(pred, gt)) / static_cast<double>(pred.size());
  const double r = static_cast<double>(matched(gt, pred)) / static_cast<double>(gt.size());
  f.precision = 100.0 * p;
  f.recall = 100.0 * r;
  f.fscore = p + r > 0.0 ? 100.0 * 2.0 * p * r / (p + r) : 0.0;
  return f;
}

FScore fscore(const DepthMap& pred, const DepthMap& gt, const Intrinsics& k, double threshold,
              const std::optional<BoolMask>& mask, NeighborSearch search) {
  check_pair(pred, gt, mask, "fscore");
  k.validate();
  if (k.width != gt.width() || k.height != gt.height()) {
    throw std::invalid_argument("fscore: intrinsics extent does not match the depth maps");
  }
  return fscore_clouds(cloud(pred, k, mask), cloud(gt, k, mask), threshold, search);
}

void EvalConfig::validate() const {
  if (!(min_depth >= 0.0 && max_depth > min_depth)) {
    throw std::invalid_argument("eval config: need 0 <= min_depth < max_depth");
  }
  if (!(delta_threshold > 1.0)) throw std::invalid_argument("eval config: delta_threshold must exceed 1");
  if (!(fscore_threshold > 0.0)) throw std::invalid_argument("eval config: fscore_threshold must be positive");
}

ImageMetrics evaluate_depth(const DepthMap& pred, const DepthMap& gt, const EvalConfig& config,
                            const std::optional<Intrinsics>& k) {
  config.validate();
  check_pair(pred, gt, std::nullopt, "evaluate");
  BoolMask mask(gt.height(), gt.width(), 0);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    const double g = gt.depth()[i];
    mask[i] = gt.valid()[i] && pred.valid()[i] && g >= config.min_depth && g <= config.max_depth;
  }
  ImageMetrics m;
  DepthMap aligned = pred;
  switch (config.align) {
    case AlignMode::lstsq: {
      Grid<double> disp(pred.height(), pred.width(), 0.0);
      for (std::size_t i = 0; i < disp.size(); ++i) {
        disp[i] = pred.valid()[i] ? 1.0 / pred.depth()[i] : std::numeric_limits<double>::quiet_NaN();
      }
      m.alignment = align_lstsq(disp, gt, mask);
      AlignedDepth a = aligned_depth(disp, *m.alignment);
      aligned = DepthMap(a.depth.depth(), pred.valid());
      m.clamped = a.clamped;
      break;
    }
    case AlignMode::median: aligned = median_scale(pred, gt, mask); break;
    case AlignMode::none: break;
  }
  m.abs_rel = abs_rel(aligned, gt, mask);
  m.delta = delta_acc(aligned, gt, mask, config.delta_threshold);
  if (config.compute_fscore) {
    if (!k) throw std::invalid_argument("evaluate: F-score needs intrinsics");
    m.fscore = fscore(aligned, gt, *k, config.fscore_threshold, mask).fscore;
  }
  return m;
}

void MetricTable::validate() const {
  if (methods.empty() || columns.empty()) throw std::invalid_argument("metric table: no methods or columns");
  if (values.size() != methods.size()) throw std::invalid_argument("metric table: row count mismatch");
  for (std::size_t m = 0; m < values.size(); ++m) {
    if (values[m].size() != columns.size()) throw std::invalid_argument("metric table: column count mismatch");
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (!std::isfinite(values[m][c])) {
        throw std::invalid_argument("metric table: missing value for " + methods[m] + " / " +
                                    columns[c].dataset + ":" + columns[c].metric);
      }
    }
  }
}

bool metric_lower_is_better(const std::string& metric) {
  if (metric == "abs_rel") return true;
  if (metric == "delta" || metric == "fscore") return false;
  throw std::invalid_argument("unknown metric '" + metric + "'");
}

std::vector<double> rank(const MetricTable& table) {
  table.validate();
  const std::size_t n = table.methods.size();
  std::vector<double> total(n, 0.0);
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    const bool lower = table.columns[c].lower_is_better;
    auto better = [&](std::size_t a, std::size_t b) {
      return lower ? table.values[a][c] < table.values[b][c] : table.values[a][c] > table.values[b][c];
    };
    for (std::size_t m = 0; m < n; ++m) {
      std::size_t ahead = 0;
      std::size_t tied = 0;
      for (std::size_t o = 0; o < n; ++o) {
        if (better(o, m)) ++ahead;
        else if (table.values[o][c] == table.values[m][c]) ++tied;
      }
      // Tied block occupies ranks ahead+1 .. ahead+tied.
      total[m] += static_cast<double>(ahead) + 0.5 * static_cast<double>(tied + 1);
    }
  }
  for (double& t : total) t /= static_cast<double>(table.columns.size());
  return total;
}

Improvement improvement(const MetricTable& table, std::size_t baseline) {
  table.validate();
  if (baseline >= table.methods.size()) throw std::invalid_argument("improvement: baseline row out of range");
  const auto& base = table.values[baseline];
  Improvement out;
  std::vector<std::size_t> used;
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    (base[c] == 0.0 ? out.skipped_columns : used).push_back(c);
  }
  if (used.empty()) throw std::invalid_argument("improvement: every baseline value is zero");
  for (const auto& row : table.values) {
    double sum = 0.0;
    for (std::size_t c : used) {
      const double sign = table.columns[c].lower_is_better ? -1.0 : 1.0;
      sum += sign * (row[c] - base[c]) / base[c];
    }
    out.per_method.push_back(100.0 * sum / static_cast<double>(used.size()));
  }
  return out;
}

}  // namespace mdepth
