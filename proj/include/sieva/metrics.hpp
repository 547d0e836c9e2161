#pragma once

// Conventional saliency metrics (MAE, F-beta, AUC, E-measure, S-measure) and
// their size-invariant counterparts evaluated frame by frame over a
// FramePartition.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sieva/core.hpp"
#include "sieva/partition.hpp"

namespace sieva {

struct ConfusionCounts {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// Confusion counts at thresholds tau_k = k/255, k = 0..threshold_count-1.
struct ThresholdCurve {
  std::vector<double> thresholds;
  std::vector<ConfusionCounts> counts;
};

struct FMeasure {
  double mean = 0.0;
  double max = 0.0;
  std::vector<double> per_threshold;
};

namespace detail {

inline void check_inputs(const SaliencyMap& pred, const BinaryMask& gt, const FramePartition& part) {
  check_same_shape(pred, gt);
  if (part.shape != gt.shape())
    throw ShapeError("partition of shape " + part.shape.str() + " does not match ground truth " +
                     gt.shape().str());
  if (part.positives != gt.count_positive())
    throw ArgumentError("partition was not built from this ground truth");
}

inline double abs_error_sum(const SaliencyMap& pred, const BinaryMask& gt,
                            std::span<const std::size_t> pixels) {
  double sum = 0.0;
  for (auto i : pixels) sum += std::abs(pred[i] - double(gt[i]));
  return sum;
}

inline double region_mae(const SaliencyMap& pred, const BinaryMask& gt,
                         std::span<const std::size_t> pixels) {
  return abs_error_sum(pred, gt, pixels) / double(pixels.size());
}

inline double threshold_value(int k) { return double(k) / 255.0; }

// Index of the largest threshold that `v` still passes (v >= tau_k), or -1.
inline int top_threshold(double v, int count) {
  int k = std::min(count - 1, int(std::floor(v * 255.0)));
  while (k + 1 < count && threshold_value(k + 1) <= v) ++k;
  while (k >= 0 && threshold_value(k) > v) --k;
  return k;
}

// Visits either every pixel or only the listed ones.
template <typename Fn>
void for_pixels(std::size_t total, const std::vector<std::size_t>* pixels, Fn&& fn) {
  if (pixels) {
    for (auto i : *pixels) fn(i);
  } else {
    for (std::size_t i = 0; i < total; ++i) fn(i);
  }
}

inline ThresholdCurve curve_over(const SaliencyMap& pred, const BinaryMask& gt,
                                 const std::vector<std::size_t>* pixels, int count) {
  std::vector<std::size_t> pos_hist(std::size_t(count) + 1, 0), neg_hist(std::size_t(count) + 1, 0);
  std::size_t pos = 0, neg = 0;
  for_pixels(pred.size(), pixels, [&](std::size_t i) {
    const int top = top_threshold(pred[i], count);
    if (gt[i]) {
      ++pos;
      ++pos_hist[std::size_t(top + 1)];
    } else {
      ++neg;
      ++neg_hist[std::size_t(top + 1)];
    }
  });
  ThresholdCurve curve;
  curve.thresholds.resize(std::size_t(count));
  curve.counts.resize(std::size_t(count));
  // A pixel with top index t is predicted positive at every k <= t.
  std::size_t tp = 0, fp = 0;
  for (int k = count - 1; k >= 0; --k) {
    tp += pos_hist[std::size_t(k + 1)];
    fp += neg_hist[std::size_t(k + 1)];
    curve.thresholds[std::size_t(k)] = threshold_value(k);
    curve.counts[std::size_t(k)] = {tp, fp, pos - tp, neg - fp};
  }
  return curve;
}

// Wins and ties of positives against a sorted negative score list.
struct PairCount {
  std::uint64_t wins = 0;
  std::uint64_t ties = 0;
};

inline PairCount count_pairs(const SaliencyMap& pred, std::span<const std::size_t> positives,
                             const std::vector<double>& sorted_negatives) {
  PairCount pc;
  for (auto p : positives) {
    const double v = pred[p];
    const auto lo = std::lower_bound(sorted_negatives.begin(), sorted_negatives.end(), v);
    const auto hi = std::upper_bound(lo, sorted_negatives.end(), v);
    pc.wins += std::uint64_t(lo - sorted_negatives.begin());
    pc.ties += std::uint64_t(hi - lo);
  }
  return pc;
}

inline double pair_auc(PairCount pc, std::size_t n_pos, std::size_t n_neg, TiePolicy policy) {
  const double pairs = double(n_pos) * double(n_neg);
  if (policy == TiePolicy::Strict) return double(pc.wins) / pairs;
  return (double(pc.wins) + 0.5 * double(pc.ties)) / pairs;
}

struct PixelClasses {
  std::vector<std::size_t> positives;
  std::vector<double> sorted_negatives;
};

inline PixelClasses split_classes(const SaliencyMap& pred, const BinaryMask& gt) {
  PixelClasses pc;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt[i]) pc.positives.push_back(i);
    else pc.sorted_negatives.push_back(pred[i]);
  }
  std::sort(pc.sorted_negatives.begin(), pc.sorted_negatives.end());
  return pc;
}

struct Moments {
  double mean = 0.0;
  double variance = 0.0;  // unbiased (N-1); zero for a single sample
};

template <typename Get>
Moments moments(std::size_t n, Get&& get) {
  Moments m;
  if (n == 0) return m;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += get(i);
  m.mean = sum / double(n);
  if (n > 1) {
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) ss += (get(i) - m.mean) * (get(i) - m.mean);
    m.variance = ss / double(n - 1);
  }
  return m;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// MAE

inline double mae(const SaliencyMap& pred, const BinaryMask& gt) {
  check_same_shape(pred, gt);
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) sum += std::abs(pred[i] - double(gt[i]));
  return sum / double(pred.size());
}

/// MAE of each frame averaged with the background frame weighted by alpha.
/// Falls back to plain MAE when the ground truth has no salient pixel.
inline double si_mae(const SaliencyMap& pred, const BinaryMask& gt, const FramePartition& part) {
  detail::check_inputs(pred, gt, part);
  if (part.frames.empty()) return mae(pred, gt);
  double sum = 0.0;
  for (const auto& frame : part.frames) sum += detail::region_mae(pred, gt, frame.frame_pixels);
  double alpha = 0.0;
  if (!part.background_pixels.empty() && part.alpha > 0.0) {
    alpha = part.alpha;
    sum += alpha * detail::region_mae(pred, gt, part.background_pixels);
  }
  return sum / (double(part.frames.size()) + alpha);
}

// ---------------------------------------------------------------------------
// Threshold curves and F-beta

inline ThresholdCurve confusion_curve(const SaliencyMap& pred, const BinaryMask& gt,
                                      const MetricConfig& cfg = {}) {
  check_same_shape(pred, gt);
  cfg.validate();
  return detail::curve_over(pred, gt, nullptr, cfg.threshold_count);
}

inline constexpr double kFBetaEpsilon = 1e-12;

/// F-beta at one threshold; defined as 0 when nothing is detected correctly.
inline double f_beta_from_counts(const ConfusionCounts& c, double beta_squared) {
  if (c.tp == 0) return 0.0;
  const double precision = double(c.tp) / (double(c.tp + c.fp) + kFBetaEpsilon);
  const double recall = double(c.tp) / (double(c.tp + c.fn) + kFBetaEpsilon);
  return (1.0 + beta_squared) * precision * recall / (beta_squared * precision + recall);
}

inline FMeasure summarize_f(std::vector<double> per_threshold) {
  FMeasure f;
  double sum = 0.0;
  for (double v : per_threshold) {
    sum += v;
    f.max = std::max(f.max, v);
  }
  f.mean = sum / double(per_threshold.size());
  f.per_threshold = std::move(per_threshold);
  return f;
}

inline FMeasure f_beta(const SaliencyMap& pred, const BinaryMask& gt, const MetricConfig& cfg = {}) {
  const auto curve = confusion_curve(pred, gt, cfg);
  std::vector<double> values(curve.counts.size());
  for (std::size_t k = 0; k < values.size(); ++k)
    values[k] = f_beta_from_counts(curve.counts[k], cfg.beta_squared);
  return summarize_f(std::move(values));
}

/// Frame-averaged F-beta curve, then mean/max over thresholds. Only frames
/// that own salient pixels take part; undefined when there are none.
inline std::optional<FMeasure> si_f(const SaliencyMap& pred, const BinaryMask& gt,
                                    const FramePartition& part, const MetricConfig& cfg = {}) {
  detail::check_inputs(pred, gt, part);
  cfg.validate();
  std::vector<double> sum(std::size_t(cfg.threshold_count), 0.0);
  std::size_t used = 0;
  for (const auto& frame : part.frames) {
    if (frame.positive_size() == 0) continue;
    const auto curve = detail::curve_over(pred, gt, &frame.frame_pixels, cfg.threshold_count);
    for (std::size_t k = 0; k < sum.size(); ++k)
      sum[k] += f_beta_from_counts(curve.counts[k], cfg.beta_squared);
    ++used;
  }
  if (used == 0) return std::nullopt;
  for (double& v : sum) v /= double(used);
  return summarize_f(std::move(sum));
}

// ---------------------------------------------------------------------------
// AUC

/// Probability that a salient pixel outscores a non-salient one.
inline std::optional<double> auc_rank(const SaliencyMap& pred, const BinaryMask& gt,
                                      const MetricConfig& cfg = {}) {
  check_same_shape(pred, gt);
  const auto classes = detail::split_classes(pred, gt);
  if (classes.positives.empty() || classes.sorted_negatives.empty()) return std::nullopt;
  const auto pc = detail::count_pairs(pred, classes.positives, classes.sorted_negatives);
  return detail::pair_auc(pc, classes.positives.size(), classes.sorted_negatives.size(),
                          cfg.tie_policy);
}

/// Per-frame rank AUC: the frame's own salient pixels against every
/// non-salient pixel of the image.
inline std::vector<std::optional<double>> frame_aucs(const SaliencyMap& pred, const BinaryMask& gt,
                                                    const FramePartition& part,
                                                    const MetricConfig& cfg = {}) {
  detail::check_inputs(pred, gt, part);
  const auto classes = detail::split_classes(pred, gt);
  std::vector<std::optional<double>> out(part.frames.size());
  if (classes.sorted_negatives.empty()) return out;
  for (std::size_t k = 0; k < part.frames.size(); ++k) {
    const auto& comp = part.frames[k].component_pixels;
    if (comp.empty()) continue;
    const auto pc = detail::count_pairs(pred, comp, classes.sorted_negatives);
    out[k] = detail::pair_auc(pc, comp.size(), classes.sorted_negatives.size(), cfg.tie_policy);
  }
  return out;
}

inline std::optional<double> si_auc(const SaliencyMap& pred, const BinaryMask& gt,
                                    const FramePartition& part, const MetricConfig& cfg = {}) {
  const auto per_frame = frame_aucs(pred, gt, part, cfg);
  double sum = 0.0;
  std::size_t used = 0;
  for (const auto& v : per_frame) {
    if (!v) continue;
    sum += *v;
    ++used;
  }
  if (used == 0) return std::nullopt;
  return sum / double(used);
}

/// Trapezoidal ROC area over the threshold curve with (0,0) and (1,1) appended.
inline std::optional<double> auc_threshold(const SaliencyMap& pred, const BinaryMask& gt,
                                           const MetricConfig& cfg = {}) {
  const auto curve = confusion_curve(pred, gt, cfg);
  const auto& c0 = curve.counts.front();
  const std::size_t pos = c0.tp + c0.fn, neg = c0.fp + c0.tn;
  if (pos == 0 || neg == 0) return std::nullopt;

  std::vector<std::pair<double, double>> roc;  // (fpr, tpr)
  roc.reserve(curve.counts.size() + 2);
  roc.emplace_back(0.0, 0.0);
  for (const auto& c : curve.counts) roc.emplace_back(double(c.fp) / neg, double(c.tp) / pos);
  roc.emplace_back(1.0, 1.0);
  std::sort(roc.begin(), roc.end());

  double area = 0.0;
  for (std::size_t i = 1; i < roc.size(); ++i)
    area += 0.5 * (roc[i].second + roc[i - 1].second) * (roc[i].first - roc[i - 1].first);
  return area;
}

// ---------------------------------------------------------------------------
// E-measure and S-measure

inline double e_measure(const SaliencyMap& pred, const BinaryMask& gt, const MetricConfig& cfg = {}) {
  check_same_shape(pred, gt);
  const std::size_t n = pred.size();
  const auto mx = detail::moments(n, [&](std::size_t i) { return pred[i]; }).mean;
  const auto positives = gt.count_positive();

  // Constant ground truth: the alignment term degenerates, score coverage directly.
  if (positives == 0) return 1.0 - mx;
  if (positives == n) return mx;

  const double my = double(positives) / double(n);
  const double scale = cfg.e_measure_mapping == EMeasureMapping::Quarter ? 0.25 : 0.5;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = pred[i] - mx, b = double(gt[i]) - my;
    const double xi = 2.0 * a * b / (a * a + b * b + cfg.e_measure_stabilizer);
    sum += scale * (1.0 + xi) * (1.0 + xi);
  }
  return sum / double(n);
}

namespace detail {

inline double object_score(const Moments& m) {
  return 2.0 * m.mean / (m.mean * m.mean + 1.0 + std::sqrt(m.variance));
}

inline double region_ssim(const SaliencyMap& pred, const BinaryMask& gt, std::size_t r0,
                          std::size_t r1, std::size_t c0, std::size_t c1, double c) {
  const std::size_t w = gt.width(), rw = c1 - c0;
  const std::size_t n = (r1 - r0) * rw;
  auto idx = [&](std::size_t j) { return (r0 + j / rw) * w + c0 + j % rw; };
  const auto mx = moments(n, [&](std::size_t j) { return pred[idx(j)]; });
  const auto my = moments(n, [&](std::size_t j) { return double(gt[idx(j)]); });
  double cov = 0.0;
  if (n > 1) {
    for (std::size_t j = 0; j < n; ++j)
      cov += (pred[idx(j)] - mx.mean) * (double(gt[idx(j)]) - my.mean);
    cov /= double(n - 1);
  }
  const double luminance =
      (2.0 * mx.mean * my.mean + c) / (mx.mean * mx.mean + my.mean * my.mean + c);
  const double structure = (2.0 * cov + c) / (mx.variance + my.variance + c);
  return luminance * structure;
}

}  // namespace detail

inline double s_measure(const SaliencyMap& pred, const BinaryMask& gt, const MetricConfig& cfg = {}) {
  check_same_shape(pred, gt);
  cfg.validate();
  const std::size_t h = gt.height(), w = gt.width(), n = gt.size();

  std::vector<double> fg, bg;
  double row_sum = 0.0, col_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (gt[i]) {
      fg.push_back(pred[i]);
      row_sum += double(i / w);
      col_sum += double(i % w);
    } else {
      bg.push_back(1.0 - pred[i]);
    }
  }
  const double weight = double(fg.size()) / double(n);
  double object = 0.0;
  if (!fg.empty())
    object += weight * detail::object_score(detail::moments(fg.size(), [&](auto j) { return fg[j]; }));
  if (!bg.empty())
    object += (1.0 - weight) *
              detail::object_score(detail::moments(bg.size(), [&](auto j) { return bg[j]; }));

  // Split just after the (floored) centroid; the image center when gt is empty.
  std::size_t split_r = h / 2, split_c = w / 2;
  if (!fg.empty()) {
    split_r = std::size_t(std::floor(row_sum / double(fg.size()))) + 1;
    split_c = std::size_t(std::floor(col_sum / double(fg.size()))) + 1;
  }
  const std::array<std::array<std::size_t, 4>, 4> quads{{{0, split_r, 0, split_c},
                                                         {0, split_r, split_c, w},
                                                         {split_r, h, 0, split_c},
                                                         {split_r, h, split_c, w}}};
  double region = 0.0;
  for (const auto& q : quads) {
    const std::size_t area = (q[1] - q[0]) * (q[3] - q[2]);
    if (area == 0) continue;
    region += double(area) / double(n) *
              detail::region_ssim(pred, gt, q[0], q[1], q[2], q[3], cfg.ssim_stabilizer);
  }
  const double score = cfg.s_measure_alpha * object + (1.0 - cfg.s_measure_alpha) * region;
  return std::max(0.0, score);
}

// ---------------------------------------------------------------------------
// Size and count groups

/// Relative-area decile of a frame: ceil(10 * size / total), clamped to [1, 10].
inline int size_decile(std::size_t frame_size, std::size_t total) {
  const std::size_t d = (10 * frame_size + total - 1) / total;
  return int(std::clamp<std::size_t>(d, 1, 10));
}

inline std::map<int, double> group_by_size(const FramePartition& part,
                                           std::span<const double> per_frame_values) {
  if (per_frame_values.size() != part.frames.size())
    throw ArgumentError("expected one value per frame");
  std::map<int, std::pair<double, std::size_t>> acc;
  for (std::size_t k = 0; k < part.frames.size(); ++k) {
    auto& slot = acc[size_decile(part.frames[k].size(), part.total)];
    slot.first += per_frame_values[k];
    ++slot.second;
  }
  std::map<int, double> out;
  for (const auto& [d, s] : acc) out[d] = s.first / double(s.second);
  return out;
}

/// Object-count group label: "1".."5", "6+", and "0" for an empty ground truth.
inline std::string group_by_count(std::size_t object_count) {
  if (object_count >= 6) return "6+";
  return std::to_string(object_count);
}

// ---------------------------------------------------------------------------
// Table row

inline constexpr std::array<const char*, 10> kTableMetrics = {
    "MAE", "SI-MAE", "AUC", "SI-AUC", "Fb-mean", "SI-Fb-mean", "Fb-max", "SI-Fb-max", "Em", "Sm"};

using TableRow = std::array<std::optional<double>, kTableMetrics.size()>;

/// All ten table metrics for one image, in table column order.
inline TableRow table_metrics(const SaliencyMap& pred, const BinaryMask& gt,
                              const FramePartition& part, const MetricConfig& cfg = {}) {
  detail::check_inputs(pred, gt, part);
  TableRow row;
  row[0] = mae(pred, gt);
  row[1] = si_mae(pred, gt, part);
  row[2] = auc_rank(pred, gt, cfg);
  row[3] = si_auc(pred, gt, part, cfg);
  const auto f = f_beta(pred, gt, cfg);
  row[4] = f.mean;
  row[6] = f.max;
  if (const auto sf = si_f(pred, gt, part, cfg)) {
    row[5] = sf->mean;
    row[7] = sf->max;
  }
  row[8] = e_measure(pred, gt, cfg);
  row[9] = s_measure(pred, gt, cfg);
  return row;
}

}  // namespace sieva
