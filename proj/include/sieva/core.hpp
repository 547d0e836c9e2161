#pragma once

// Pixel-grid types, configuration and error types shared by every sieva module.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sieva {

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a metric or loss has no value on the given input
/// (e.g. AUC on an image without negatives).
class UndefinedError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct Shape {
  std::size_t height = 0;
  std::size_t width = 0;

  std::size_t size() const { return height * width; }
  std::string str() const { return std::to_string(height) + "x" + std::to_string(width); }
  friend bool operator==(const Shape&, const Shape&) = default;
};

/// Row-major H x W grid. Validation of the value domain is left to the
/// derived grid types.
template <typename T>
class Grid {
 public:
  using value_type = T;

  Grid() = default;
  Grid(Shape shape, std::vector<T> values) : shape_(shape), values_(std::move(values)) {
    if (shape_.height == 0 || shape_.width == 0)
      throw ShapeError("grid must be non-empty, got " + shape_.str());
    if (values_.size() != shape_.size())
      throw ShapeError("grid of shape " + shape_.str() + " needs " + std::to_string(shape_.size()) +
                       " values, got " + std::to_string(values_.size()));
  }

  const Shape& shape() const { return shape_; }
  std::size_t height() const { return shape_.height; }
  std::size_t width() const { return shape_.width; }
  std::size_t size() const { return values_.size(); }

  T operator[](std::size_t i) const { return values_[i]; }
  T at(std::size_t row, std::size_t col) const { return values_[row * shape_.width + col]; }
  std::span<const T> values() const { return values_; }

 private:
  Shape shape_;
  std::vector<T> values_;
};

/// Predicted saliency probabilities, every value in [0, 1].
class SaliencyMap : public Grid<double> {
 public:
  SaliencyMap() = default;
  SaliencyMap(Shape shape, std::vector<double> values) : Grid(shape, std::move(values)) {
    for (double v : this->values()) {
      if (!(v >= 0.0 && v <= 1.0))
        throw ArgumentError("saliency values must lie in [0,1], got " + std::to_string(v));
    }
  }
};

/// Ground-truth mask, every value in {0, 1}.
class BinaryMask : public Grid<std::uint8_t> {
 public:
  BinaryMask() = default;
  BinaryMask(Shape shape, std::vector<std::uint8_t> values) : Grid(shape, std::move(values)) {
    for (auto v : this->values()) {
      if (v > 1) throw ArgumentError("mask values must be 0 or 1, got " + std::to_string(int(v)));
    }
  }

  std::size_t count_positive() const {
    std::size_t n = 0;
    for (auto v : values()) n += v;
    return n;
  }
};

inline SaliencyMap saliency_from_8bit(Shape shape, std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) throw ShapeError("empty 8-bit grid");
  std::vector<double> values(bytes.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) values[i] = bytes[i] / 255.0;
  return SaliencyMap(shape, std::move(values));
}

/// Ground truth is binarized at byte >= 128.
inline BinaryMask mask_from_8bit(Shape shape, std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) throw ShapeError("empty 8-bit grid");
  std::vector<std::uint8_t> values(bytes.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) values[i] = bytes[i] >= 128 ? 1 : 0;
  return BinaryMask(shape, std::move(values));
}

inline void check_same_shape(const SaliencyMap& pred, const BinaryMask& gt) {
  if (pred.shape() != gt.shape())
    throw ShapeError("shape mismatch: prediction " + pred.shape().str() + " vs ground truth " +
                     gt.shape().str());
}

enum class Connectivity { Four = 4, Eight = 8 };
enum class TiePolicy { Strict, HalfCredit };
enum class EMeasureMapping { Quarter, Half };

struct MetricConfig {
  int threshold_count = 255;
  double beta_squared = 0.3;
  Connectivity connectivity = Connectivity::Eight;
  TiePolicy tie_policy = TiePolicy::Strict;
  double clamp_epsilon = 1e-7;
  EMeasureMapping e_measure_mapping = EMeasureMapping::Quarter;
  double ssim_stabilizer = 1e-8;
  // Denominator guard inside the E-measure alignment term. Machine epsilon,
  // as in the reference E-measure code, so a perfect match stays within 1e-9 of 1.
  double e_measure_stabilizer = std::numeric_limits<double>::epsilon();
  double s_measure_alpha = 0.5;

  void validate() const {
    if (threshold_count < 2) throw ArgumentError("threshold_count must be >= 2");
    if (!(clamp_epsilon > 0.0 && clamp_epsilon < 0.5))
      throw ArgumentError("clamp_epsilon must lie in (0, 0.5)");
    if (!(s_measure_alpha >= 0.0 && s_measure_alpha <= 1.0))
      throw ArgumentError("s_measure_alpha must lie in [0, 1]");
    if (!(beta_squared > 0.0)) throw ArgumentError("beta_squared must be positive");
    if (!(ssim_stabilizer >= 0.0) || !(e_measure_stabilizer >= 0.0))
      throw ArgumentError("stabilizers must be non-negative");
  }
};

/// Per-image metric values plus aggregates. A missing value means the
/// metric is undefined for that image and is excluded from the aggregates.
struct MetricReport {
  struct Row {
    std::string id;
    std::map<std::string, std::optional<double>> values;
  };

  std::vector<Row> per_image;
  std::map<std::string, double> aggregates;
  std::map<std::string, std::map<std::string, double>> group_breakdowns;
  std::map<std::string, std::size_t> undefined_counts;

  /// Recomputes aggregates and undefined_counts from per_image.
  void aggregate(std::span<const std::string> metric_names) {
    aggregates.clear();
    undefined_counts.clear();
    for (const auto& name : metric_names) {
      double sum = 0.0;
      std::size_t defined = 0, undefined = 0;
      for (const auto& row : per_image) {
        auto it = row.values.find(name);
        if (it == row.values.end() || !it->second) {
          ++undefined;
          continue;
        }
        sum += *it->second;
        ++defined;
      }
      if (defined > 0) aggregates[name] = sum / double(defined);
      undefined_counts[name] = undefined;
    }
  }
};

}  // namespace sieva
