#pragma once

// Pixel-level bipartite acceleration for the size-invariant square-surrogate
// AUC loss.
//
// Every salient pixel p of component k is joined to every non-salient pixel q
// by an edge of weight c_p / S-, with c_p = 1 / (M * |component k|). With
// r = pred - gt the pairwise loss
//
//   (1/M) sum_k sum_{p in k} sum_q (1 - f_p + f_q)^2 / (|k| * S-)
//
// equals the Laplacian quadratic form r' L r of that graph. The adjacency is
// rank two, so the form and its gradient need only a few passes over the
// image and the S x S matrix is never built.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sieva/core.hpp"
#include "sieva/partition.hpp"

namespace sieva::pbacc {

struct PbaccContext {
  std::vector<double> y;           // flattened mask
  std::vector<double> coeff;       // c_p = 1 / (M * |component|) on salient pixels, else 0
  std::vector<double> y_weighted;  // y * c
  std::vector<double> degree;      // row sums of the implicit adjacency
  double c_plus = 0.0;             // sum of y_weighted, 1 by construction
  std::size_t s_minus = 0;
  std::size_t frame_count = 0;     // components taking part (M)

  std::size_t size() const { return y.size(); }
};

/// Frames without salient pixels (possible for fixed patches) are left out of M.
inline PbaccContext build_context(const FramePartition& part, const BinaryMask& gt) {
  if (part.shape != gt.shape())
    throw ShapeError("partition of shape " + part.shape.str() + " does not match ground truth " +
                     gt.shape().str());
  const std::size_t n = gt.size();
  PbaccContext ctx;
  ctx.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) ctx.y[i] = gt[i];
  ctx.s_minus = n - gt.count_positive();
  ctx.frame_count = part.positive_frame_count();
  if (ctx.frame_count == 0) throw UndefinedError("SI-AUC loss needs at least one salient pixel");
  if (ctx.s_minus == 0) throw UndefinedError("SI-AUC loss needs at least one non-salient pixel");

  ctx.coeff.assign(n, 0.0);
  std::size_t owned = 0;
  for (const auto& frame : part.frames) {
    if (frame.component_pixels.empty()) continue;
    const double c = 1.0 / (double(ctx.frame_count) * double(frame.positive_size()));
    for (auto p : frame.component_pixels) ctx.coeff[p] = c;
    owned += frame.positive_size();
  }
  if (owned != n - ctx.s_minus) throw ArgumentError("partition was not built from this ground truth");

  ctx.y_weighted.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    ctx.y_weighted[i] = ctx.y[i] * ctx.coeff[i];
    ctx.c_plus += ctx.y_weighted[i];
  }
  ctx.degree.resize(n);
  const double negative_degree = ctx.c_plus / double(ctx.s_minus);
  for (std::size_t i = 0; i < n; ++i)
    ctx.degree[i] = ctx.y[i] != 0.0 ? ctx.y_weighted[i] : negative_degree;
  return ctx;
}

inline std::vector<double> residual(const SaliencyMap& pred, const BinaryMask& gt) {
  check_same_shape(pred, gt);
  std::vector<double> r(pred.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = pred[i] - double(gt[i]);
  return r;
}

namespace detail {

inline void check_length(const PbaccContext& ctx, std::span<const double> q) {
  if (q.size() != ctx.size())
    throw ShapeError("vector of length " + std::to_string(q.size()) + " for a context of size " +
                     std::to_string(ctx.size()));
}

struct Projections {
  double weighted = 0.0;  // y_weighted . q
  double negative = 0.0;  // (1 - y) . q
};

inline Projections project(const PbaccContext& ctx, std::span<const double> q) {
  Projections pr;
  for (std::size_t i = 0; i < q.size(); ++i) {
    pr.weighted += ctx.y_weighted[i] * q[i];
    pr.negative += (1.0 - ctx.y[i]) * q[i];
  }
  return pr;
}

}  // namespace detail

/// q' L q = q' diag(degree) q - (2 / S-) (y_weighted . q) ((1 - y) . q).
inline double quadratic_form(const PbaccContext& ctx, std::span<const double> q) {
  detail::check_length(ctx, q);
  double diagonal = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) diagonal += ctx.degree[i] * q[i] * q[i];
  const auto pr = detail::project(ctx, q);
  return diagonal - 2.0 / double(ctx.s_minus) * pr.weighted * pr.negative;
}

/// 2 L q, the gradient of quadratic_form with respect to q (and to the prediction).
inline std::vector<double> gradient(const PbaccContext& ctx, std::span<const double> q) {
  detail::check_length(ctx, q);
  const auto pr = detail::project(ctx, q);
  const double inv = 2.0 / double(ctx.s_minus);
  std::vector<double> g(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    g[i] = 2.0 * ctx.degree[i] * q[i] -
           inv * (ctx.y_weighted[i] * pr.negative + (1.0 - ctx.y[i]) * pr.weighted);
  }
  return g;
}

struct DenseMatrix {
  std::size_t n = 0;
  std::vector<double> data;

  double operator()(std::size_t i, std::size_t j) const { return data[i * n + j]; }
  double& operator()(std::size_t i, std::size_t j) { return data[i * n + j]; }
};

inline constexpr std::size_t kDenseLimit = 4096;

/// Explicit adjacency A_pq = (c_p (1 - y_q) + (1 - y_p) c_q) / S-.
inline DenseMatrix dense_adjacency(const PbaccContext& ctx) {
  const std::size_t n = ctx.size();
  if (n > kDenseLimit)
    throw ArgumentError("dense matrices are limited to " + std::to_string(kDenseLimit) + " pixels");
  DenseMatrix a{n, std::vector<double>(n * n, 0.0)};
  const double inv = 1.0 / double(ctx.s_minus);
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t q = 0; q < n; ++q)
      a(p, q) = (ctx.coeff[p] * (1.0 - ctx.y[q]) + (1.0 - ctx.y[p]) * ctx.coeff[q]) * inv;
  }
  return a;
}

/// Explicit Laplacian diag(A 1) - A, for small images only.
inline DenseMatrix dense_laplacian(const PbaccContext& ctx) {
  DenseMatrix lap = dense_adjacency(ctx);
  const std::size_t n = lap.n;
  for (std::size_t p = 0; p < n; ++p) {
    double row = 0.0;
    for (std::size_t q = 0; q < n; ++q) {
      row += lap(p, q);
      lap(p, q) = -lap(p, q);
    }
    lap(p, p) += row;
  }
  return lap;
}

}  // namespace sieva::pbacc
