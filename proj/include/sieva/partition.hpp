#pragma once

// Splitting an image into evaluation frames: connected components of the
// ground truth, their minimum bounding boxes and the leftover background
// frame, plus the fixed-patch and nearest-component alternatives.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "sieva/core.hpp"

namespace sieva {

struct BoundingBox {
  std::size_t row_min = 0, row_max = 0, col_min = 0, col_max = 0;  // inclusive

  std::size_t height() const { return row_max - row_min + 1; }
  std::size_t width() const { return col_max - col_min + 1; }
  std::size_t area() const { return height() * width(); }
  bool contains(std::size_t r, std::size_t c) const {
    return r >= row_min && r <= row_max && c >= col_min && c <= col_max;
  }
  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

struct Frame {
  BoundingBox bbox;
  std::vector<std::size_t> frame_pixels;      // row-major indices, sorted
  std::vector<std::size_t> component_pixels;  // salient pixels owned by this frame, sorted

  std::size_t size() const { return frame_pixels.size(); }
  std::size_t positive_size() const { return component_pixels.size(); }
};

enum class Strategy { Boundings, Random, Nearest };

inline const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::Boundings: return "boundings";
    case Strategy::Random: return "random";
    case Strategy::Nearest: return "nearest";
  }
  return "?";
}

inline constexpr std::size_t kRandomPatchSide = 8;

struct FramePartition {
  Shape shape;
  Strategy strategy = Strategy::Boundings;
  std::optional<std::uint64_t> seed;
  std::vector<Frame> frames;
  std::vector<std::size_t> background_pixels;
  double alpha = 0.0;
  std::size_t component_count = 0;  // connected components in the ground truth
  std::size_t total = 0;
  std::size_t positives = 0;
  std::size_t negatives = 0;

  std::size_t frame_count() const { return frames.size(); }
  /// Number of frames owning at least one salient pixel.
  std::size_t positive_frame_count() const {
    return std::size_t(std::count_if(frames.begin(), frames.end(),
                                     [](const Frame& f) { return f.positive_size() > 0; }));
  }
};

struct LabelGrid {
  Shape shape;
  std::vector<int> labels;  // 0 = background, 1..count
  int count = 0;

  int at(std::size_t r, std::size_t c) const { return labels[r * shape.width + c]; }
};

/// Labels connected salient regions 1..M in order of their first row-major pixel.
inline LabelGrid label_components(const BinaryMask& mask, Connectivity connectivity) {
  const std::size_t h = mask.height(), w = mask.width();
  LabelGrid out{mask.shape(), std::vector<int>(mask.size(), 0), 0};
  std::vector<std::size_t> queue;
  queue.reserve(mask.size());

  for (std::size_t seed = 0; seed < mask.size(); ++seed) {
    if (!mask[seed] || out.labels[seed]) continue;
    const int label = ++out.count;
    out.labels[seed] = label;
    queue.clear();
    queue.push_back(seed);
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const std::size_t r = queue[head] / w, c = queue[head] % w;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          if (dr == 0 && dc == 0) continue;
          if (connectivity == Connectivity::Four && dr != 0 && dc != 0) continue;
          const auto nr = std::ptrdiff_t(r) + dr, nc = std::ptrdiff_t(c) + dc;
          if (nr < 0 || nc < 0 || nr >= std::ptrdiff_t(h) || nc >= std::ptrdiff_t(w)) continue;
          const std::size_t n = std::size_t(nr) * w + std::size_t(nc);
          if (mask[n] && !out.labels[n]) {
            out.labels[n] = label;
            queue.push_back(n);
          }
        }
      }
    }
  }
  return out;
}

inline BoundingBox component_bbox(const LabelGrid& grid, int label) {
  if (label < 1 || label > grid.count)
    throw ArgumentError("unknown component label " + std::to_string(label));
  BoundingBox box{std::numeric_limits<std::size_t>::max(), 0,
                  std::numeric_limits<std::size_t>::max(), 0};
  for (std::size_t i = 0; i < grid.labels.size(); ++i) {
    if (grid.labels[i] != label) continue;
    const std::size_t r = i / grid.shape.width, c = i % grid.shape.width;
    box.row_min = std::min(box.row_min, r);
    box.row_max = std::max(box.row_max, r);
    box.col_min = std::min(box.col_min, c);
    box.col_max = std::max(box.col_max, c);
  }
  return box;
}

namespace detail {

// Exact 1-D squared Euclidean distance transform (lower envelope of parabolas).
inline void squared_distance_1d(const std::vector<double>& f, std::vector<double>& d,
                                std::vector<int>& v, std::vector<double>& z) {
  const int n = int(f.size());
  int k = 0;
  v[0] = 0;
  z[0] = -std::numeric_limits<double>::infinity();
  z[1] = std::numeric_limits<double>::infinity();
  auto intersect = [&](int q, int p) {
    return ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * q - 2.0 * p);
  };
  for (int q = 1; q < n; ++q) {
    double s = intersect(q, v[k]);
    while (s <= z[k]) {
      --k;
      s = intersect(q, v[k]);
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = std::numeric_limits<double>::infinity();
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double dq = double(q) - v[k];
    d[q] = dq * dq + f[v[k]];
  }
}

// Squared distance from every pixel to the nearest pixel carrying `label`.
inline std::vector<double> squared_distance_to(const LabelGrid& grid, int label) {
  constexpr double kFar = 1e20;
  const std::size_t h = grid.shape.height, w = grid.shape.width;
  std::vector<double> dist(grid.labels.size());
  for (std::size_t i = 0; i < dist.size(); ++i) dist[i] = grid.labels[i] == label ? 0.0 : kFar;

  const std::size_t n = std::max(h, w);
  std::vector<double> f(n), d(n), z(n + 1);
  std::vector<int> v(n);
  f.resize(h), d.resize(h);
  for (std::size_t c = 0; c < w; ++c) {
    for (std::size_t r = 0; r < h; ++r) f[r] = dist[r * w + c];
    squared_distance_1d(f, d, v, z);
    for (std::size_t r = 0; r < h; ++r) dist[r * w + c] = d[r];
  }
  f.resize(w), d.resize(w);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) f[c] = dist[r * w + c];
    squared_distance_1d(f, d, v, z);
    for (std::size_t c = 0; c < w; ++c) dist[r * w + c] = d[c];
  }
  return dist;
}

inline BoundingBox extent_of(const std::vector<std::size_t>& pixels, std::size_t width) {
  BoundingBox box{std::numeric_limits<std::size_t>::max(), 0,
                  std::numeric_limits<std::size_t>::max(), 0};
  for (auto i : pixels) {
    box.row_min = std::min(box.row_min, i / width);
    box.row_max = std::max(box.row_max, i / width);
    box.col_min = std::min(box.col_min, i % width);
    box.col_max = std::max(box.col_max, i % width);
  }
  return box;
}

}  // namespace detail

inline FramePartition build_partition(const BinaryMask& mask, Strategy strategy,
                                      Connectivity connectivity = Connectivity::Eight,
                                      std::optional<std::uint64_t> seed = std::nullopt) {
  if (strategy == Strategy::Random && !seed)
    throw ArgumentError("the random partition strategy requires a seed");

  const std::size_t h = mask.height(), w = mask.width();
  const LabelGrid grid = label_components(mask, connectivity);

  FramePartition part;
  part.shape = mask.shape();
  part.strategy = strategy;
  part.seed = seed;
  part.component_count = std::size_t(grid.count);
  part.total = mask.size();
  part.positives = mask.count_positive();
  part.negatives = part.total - part.positives;

  if (strategy == Strategy::Random) {
    // Patch tiling is deterministic; the seed is only carried for provenance.
    for (std::size_t r0 = 0; r0 < h; r0 += kRandomPatchSide) {
      for (std::size_t c0 = 0; c0 < w; c0 += kRandomPatchSide) {
        Frame frame;
        frame.bbox = {r0, std::min(r0 + kRandomPatchSide, h) - 1, c0,
                      std::min(c0 + kRandomPatchSide, w) - 1};
        for (std::size_t r = frame.bbox.row_min; r <= frame.bbox.row_max; ++r) {
          for (std::size_t c = frame.bbox.col_min; c <= frame.bbox.col_max; ++c) {
            frame.frame_pixels.push_back(r * w + c);
            if (mask[r * w + c]) frame.component_pixels.push_back(r * w + c);
          }
        }
        part.frames.push_back(std::move(frame));
      }
    }
    return part;
  }

  if (grid.count == 0) {
    part.background_pixels.resize(mask.size());
    for (std::size_t i = 0; i < mask.size(); ++i) part.background_pixels[i] = i;
    return part;
  }

  part.frames.resize(std::size_t(grid.count));
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (grid.labels[i]) part.frames[std::size_t(grid.labels[i] - 1)].component_pixels.push_back(i);
  }

  if (strategy == Strategy::Boundings) {
    std::vector<std::uint8_t> covered(mask.size(), 0);
    std::size_t frame_total = 0;
    for (int k = 1; k <= grid.count; ++k) {
      Frame& frame = part.frames[std::size_t(k - 1)];
      frame.bbox = detail::extent_of(frame.component_pixels, w);
      for (std::size_t r = frame.bbox.row_min; r <= frame.bbox.row_max; ++r) {
        for (std::size_t c = frame.bbox.col_min; c <= frame.bbox.col_max; ++c) {
          frame.frame_pixels.push_back(r * w + c);
          covered[r * w + c] = 1;
        }
      }
      frame_total += frame.size();
    }
    for (std::size_t i = 0; i < mask.size(); ++i) {
      if (!covered[i]) part.background_pixels.push_back(i);
    }
    part.alpha = double(part.background_pixels.size()) / double(frame_total);
    return part;
  }

  // Nearest: every pixel joins the component with the closest salient pixel;
  // ties go to the smaller label.
  std::vector<double> best(mask.size(), std::numeric_limits<double>::infinity());
  std::vector<int> owner(mask.size(), 0);
  for (int k = 1; k <= grid.count; ++k) {
    const auto dist = detail::squared_distance_to(grid, k);
    for (std::size_t i = 0; i < mask.size(); ++i) {
      if (dist[i] < best[i]) {
        best[i] = dist[i];
        owner[i] = k;
      }
    }
  }
  for (std::size_t i = 0; i < mask.size(); ++i)
    part.frames[std::size_t(owner[i] - 1)].frame_pixels.push_back(i);
  for (auto& frame : part.frames) frame.bbox = detail::extent_of(frame.frame_pixels, w);
  return part;
}

/// Fraction of image pixels covered by two or more bounding boxes.
inline double overlap_ratio(const FramePartition& part) {
  if (part.strategy != Strategy::Boundings)
    throw ArgumentError("overlap_ratio is only defined for the boundings strategy");
  std::vector<std::uint16_t> cover(part.total, 0);
  for (const auto& frame : part.frames) {
    for (auto i : frame.frame_pixels) ++cover[i];
  }
  const auto shared = std::count_if(cover.begin(), cover.end(), [](auto n) { return n >= 2; });
  return double(shared) / double(part.total);
}

}  // namespace sieva
