#pragma once

// Differentiable loss kernels for one image. Each returns the scalar loss and
// its exact gradient with respect to the prediction map. Size-invariant
// variants evaluate the base loss frame by frame over a FramePartition.
//
// Inputs on which a loss has no value (no salient pixel for Dice, no negative
// for AUC, ...) raise UndefinedError instead of returning a placeholder.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sieva/core.hpp"
#include "sieva/partition.hpp"
#include "sieva/pbacc.hpp"

namespace sieva {

struct LossValueGrad {
  double value = 0.0;
  Shape shape;
  std::vector<double> grad;  // row-major, same shape as the prediction
};

namespace detail {

inline void check_loss_inputs(const SaliencyMap& pred, const BinaryMask& gt,
                              const FramePartition& part) {
  check_same_shape(pred, gt);
  if (part.shape != gt.shape())
    throw ShapeError("partition of shape " + part.shape.str() + " does not match ground truth " +
                     gt.shape().str());
  if (part.positives != gt.count_positive())
    throw ArgumentError("partition was not built from this ground truth");
}

inline LossValueGrad zero_loss(const Shape& shape) {
  return {0.0, shape, std::vector<double>(shape.size(), 0.0)};
}

// Mean BCE over `pixels`; adds scale * d(mean)/d(pred) into grad.
// Clamped pixels contribute no gradient.
inline double bce_region(const SaliencyMap& pred, const BinaryMask& gt,
                         std::span<const std::size_t> pixels, double eps, double scale,
                         std::vector<double>& grad) {
  const double inv_n = 1.0 / double(pixels.size());
  double sum = 0.0;
  for (auto i : pixels) {
    const double p = pred[i];
    const double pc = std::clamp(p, eps, 1.0 - eps);
    const bool clamped = pc != p;
    if (gt[i]) {
      sum -= std::log(pc);
      if (!clamped) grad[i] -= scale * inv_n / pc;
    } else {
      sum -= std::log(1.0 - pc);
      if (!clamped) grad[i] += scale * inv_n / (1.0 - pc);
    }
  }
  return sum * inv_n;
}

struct RegionSums {
  double pred = 0.0;     // sum p
  double truth = 0.0;    // sum y
  double overlap = 0.0;  // sum p*y
};

inline RegionSums region_sums(const SaliencyMap& pred, const BinaryMask& gt,
                              std::span<const std::size_t> pixels) {
  RegionSums s;
  for (auto i : pixels) {
    s.pred += pred[i];
    s.truth += gt[i];
    s.overlap += pred[i] * gt[i];
  }
  return s;
}

// 1 - 2 sum(py) / sum(p + y)
inline double dice_region(const SaliencyMap& pred, const BinaryMask& gt,
                          std::span<const std::size_t> pixels, double scale,
                          std::vector<double>& grad) {
  const auto s = region_sums(pred, gt, pixels);
  const double denom = s.pred + s.truth;
  const double inv2 = 1.0 / (denom * denom);
  for (auto i : pixels)
    grad[i] -= scale * (2.0 * gt[i] * denom - 2.0 * s.overlap) * inv2;
  return 1.0 - 2.0 * s.overlap / denom;
}

// 1 - sum(py) / sum(p + y - py)
inline double iou_region(const SaliencyMap& pred, const BinaryMask& gt,
                         std::span<const std::size_t> pixels, double scale,
                         std::vector<double>& grad) {
  const auto s = region_sums(pred, gt, pixels);
  const double uni = s.pred + s.truth - s.overlap;
  const double inv2 = 1.0 / (uni * uni);
  for (auto i : pixels)
    grad[i] -= scale * (gt[i] * uni - s.overlap * (1.0 - gt[i])) * inv2;
  return 1.0 - s.overlap / uni;
}

inline std::vector<std::size_t> all_pixels(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Pixel-wise BCE

inline LossValueGrad bce_loss(const SaliencyMap& pred, const BinaryMask& gt,
                              double clamp_epsilon = 1e-7) {
  check_same_shape(pred, gt);
  auto out = detail::zero_loss(pred.shape());
  out.value = detail::bce_region(pred, gt, detail::all_pixels(pred.size()), clamp_epsilon, 1.0,
                                 out.grad);
  return out;
}

/// (1 / (M + alpha)) [sum_k BCE(frame k) + alpha * BCE(background)].
inline LossValueGrad si_bce_loss(const SaliencyMap& pred, const BinaryMask& gt,
                                 const FramePartition& part, double clamp_epsilon = 1e-7) {
  detail::check_loss_inputs(pred, gt, part);
  if (part.frames.empty()) return bce_loss(pred, gt, clamp_epsilon);
  const double alpha = part.background_pixels.empty() ? 0.0 : part.alpha;
  const double norm = 1.0 / (double(part.frames.size()) + alpha);
  auto out = detail::zero_loss(pred.shape());
  double sum = 0.0;
  for (const auto& frame : part.frames)
    sum += detail::bce_region(pred, gt, frame.frame_pixels, clamp_epsilon, norm, out.grad);
  if (alpha > 0.0) {
    sum += alpha * detail::bce_region(pred, gt, part.background_pixels, clamp_epsilon,
                                      alpha * norm, out.grad);
  }
  out.value = sum * norm;
  return out;
}

// ---------------------------------------------------------------------------
// Region losses

inline LossValueGrad dice_loss(const SaliencyMap& pred, const BinaryMask& gt) {
  check_same_shape(pred, gt);
  if (gt.count_positive() == 0) throw UndefinedError("Dice loss needs at least one salient pixel");
  auto out = detail::zero_loss(pred.shape());
  out.value = detail::dice_region(pred, gt, detail::all_pixels(pred.size()), 1.0, out.grad);
  return out;
}

inline LossValueGrad iou_loss(const SaliencyMap& pred, const BinaryMask& gt) {
  check_same_shape(pred, gt);
  if (gt.count_positive() == 0) throw UndefinedError("IoU loss needs at least one salient pixel");
  auto out = detail::zero_loss(pred.shape());
  out.value = detail::iou_region(pred, gt, detail::all_pixels(pred.size()), 1.0, out.grad);
  return out;
}

namespace detail {

template <typename Region>
LossValueGrad frame_mean_loss(const SaliencyMap& pred, const BinaryMask& gt,
                              const FramePartition& part, const char* name, Region&& region) {
  check_loss_inputs(pred, gt, part);
  const std::size_t used = part.positive_frame_count();
  if (used == 0) throw UndefinedError(std::string(name) + " needs at least one salient frame");
  const double norm = 1.0 / double(used);
  auto out = zero_loss(pred.shape());
  double sum = 0.0;
  for (const auto& frame : part.frames) {
    if (frame.positive_size() == 0) continue;
    sum += region(pred, gt, std::span<const std::size_t>(frame.frame_pixels), norm, out.grad);
  }
  out.value = sum * norm;
  return out;
}

}  // namespace detail

/// Mean Dice loss over the frames that own salient pixels; no background term.
inline LossValueGrad si_dice_loss(const SaliencyMap& pred, const BinaryMask& gt,
                                  const FramePartition& part) {
  return detail::frame_mean_loss(pred, gt, part, "SI-Dice loss", detail::dice_region);
}

inline LossValueGrad si_iou_loss(const SaliencyMap& pred, const BinaryMask& gt,
                                 const FramePartition& part) {
  return detail::frame_mean_loss(pred, gt, part, "SI-IoU loss", detail::iou_region);
}

// ---------------------------------------------------------------------------
// Square-surrogate AUC

/// Mean of (1 - f+ + f-)^2 over all positive/negative pairs, from first and
/// second moments of the two score sets.
inline LossValueGrad auc_sq_loss(const SaliencyMap& pred, const BinaryMask& gt) {
  check_same_shape(pred, gt);
  const std::size_t n_pos = gt.count_positive(), n_neg = gt.size() - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw UndefinedError("AUC loss needs both salient and non-salient pixels");

  // margin a_p = 1 - f_p on positives, b_q = f_q on negatives
  double sum_a = 0.0, sum_a2 = 0.0, sum_b = 0.0, sum_b2 = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (gt[i]) {
      const double a = 1.0 - pred[i];
      sum_a += a;
      sum_a2 += a * a;
    } else {
      sum_b += pred[i];
      sum_b2 += pred[i] * pred[i];
    }
  }
  const double mean_a = sum_a / double(n_pos), mean_b = sum_b / double(n_neg);
  auto out = detail::zero_loss(pred.shape());
  out.value = sum_a2 / double(n_pos) + 2.0 * mean_a * mean_b + sum_b2 / double(n_neg);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (gt[i]) out.grad[i] = -2.0 * (1.0 - pred[i] + mean_b) / double(n_pos);
    else out.grad[i] = 2.0 * (mean_a + pred[i]) / double(n_neg);
  }
  return out;
}

/// Size-invariant pairwise AUC loss by explicit enumeration of every
/// (component pixel, negative pixel) pair. Quadratic in the image size;
/// serves as the reference for si_auc_loss.
inline LossValueGrad si_auc_loss_naive(const SaliencyMap& pred, const BinaryMask& gt,
                                       const FramePartition& part) {
  detail::check_loss_inputs(pred, gt, part);
  const std::size_t m = part.positive_frame_count();
  if (m == 0) throw UndefinedError("SI-AUC loss needs at least one salient pixel");
  std::vector<std::size_t> negatives;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!gt[i]) negatives.push_back(i);
  }
  if (negatives.empty()) throw UndefinedError("SI-AUC loss needs at least one non-salient pixel");

  auto out = detail::zero_loss(pred.shape());
  for (const auto& frame : part.frames) {
    if (frame.component_pixels.empty()) continue;
    const double w =
        1.0 / (double(m) * double(frame.positive_size()) * double(negatives.size()));
    double frame_sum = 0.0;
    for (auto p : frame.component_pixels) {
      for (auto q : negatives) {
        const double z = 1.0 - pred[p] + pred[q];
        frame_sum += z * z;
        out.grad[p] -= 2.0 * z * w;
        out.grad[q] += 2.0 * z * w;
      }
    }
    out.value += frame_sum * w;
  }
  return out;
}

/// Size-invariant pairwise AUC loss through the implicit graph Laplacian;
/// linear in the image size.
inline LossValueGrad si_auc_loss(const SaliencyMap& pred, const BinaryMask& gt,
                                 const FramePartition& part) {
  detail::check_loss_inputs(pred, gt, part);
  const auto ctx = pbacc::build_context(part, gt);
  const auto r = pbacc::residual(pred, gt);
  return {pbacc::quadratic_form(ctx, r), pred.shape(), pbacc::gradient(ctx, r)};
}

// ---------------------------------------------------------------------------
// Dispatch and hybrid objectives

enum class LossKind { Bce, SiBce, Dice, SiDice, Iou, SiIou, AucSq, SiAuc, SiAucNaive };

inline constexpr std::array<std::pair<LossKind, std::string_view>, 9> kLossNames{{
    {LossKind::Bce, "bce"},
    {LossKind::SiBce, "si-bce"},
    {LossKind::Dice, "dice"},
    {LossKind::SiDice, "si-dice"},
    {LossKind::Iou, "iou"},
    {LossKind::SiIou, "si-iou"},
    {LossKind::AucSq, "auc-sq"},
    {LossKind::SiAuc, "si-auc"},
    {LossKind::SiAucNaive, "si-auc-naive"},
}};

inline std::string_view to_string(LossKind kind) {
  for (const auto& [k, name] : kLossNames) {
    if (k == kind) return name;
  }
  return "?";
}

inline std::optional<LossKind> parse_loss_kind(std::string_view name) {
  for (const auto& [k, n] : kLossNames) {
    if (n == name) return k;
  }
  return std::nullopt;
}

inline LossValueGrad compute_loss(LossKind kind, const SaliencyMap& pred, const BinaryMask& gt,
                                  const FramePartition& part, double clamp_epsilon = 1e-7) {
  switch (kind) {
    case LossKind::Bce: return bce_loss(pred, gt, clamp_epsilon);
    case LossKind::SiBce: return si_bce_loss(pred, gt, part, clamp_epsilon);
    case LossKind::Dice: return dice_loss(pred, gt);
    case LossKind::SiDice: return si_dice_loss(pred, gt, part);
    case LossKind::Iou: return iou_loss(pred, gt);
    case LossKind::SiIou: return si_iou_loss(pred, gt, part);
    case LossKind::AucSq: return auc_sq_loss(pred, gt);
    case LossKind::SiAuc: return si_auc_loss(pred, gt, part);
    case LossKind::SiAucNaive: return si_auc_loss_naive(pred, gt, part);
  }
  throw ArgumentError("unknown loss kind");
}

struct HybridTerm {
  LossKind kind;
  double weight;
};

struct HybridSpec {
  std::vector<HybridTerm> terms;
};

/// sum_b weight_b * loss_b, value and gradient alike.
inline LossValueGrad hybrid_loss(const HybridSpec& spec, const SaliencyMap& pred,
                                 const BinaryMask& gt, const FramePartition& part,
                                 double clamp_epsilon = 1e-7) {
  if (spec.terms.empty()) throw ArgumentError("hybrid loss needs at least one term");
  for (const auto& t : spec.terms) {
    if (!std::isfinite(t.weight)) throw ArgumentError("hybrid loss weights must be finite");
  }
  auto out = detail::zero_loss(pred.shape());
  for (const auto& t : spec.terms) {
    LossValueGrad term;
    try {
      term = compute_loss(t.kind, pred, gt, part, clamp_epsilon);
    } catch (const UndefinedError& e) {
      throw UndefinedError("hybrid term " + std::string(to_string(t.kind)) + ": " + e.what());
    }
    out.value += t.weight * term.value;
    for (std::size_t i = 0; i < out.grad.size(); ++i) out.grad[i] += t.weight * term.grad[i];
  }
  return out;
}

}  // namespace sieva
