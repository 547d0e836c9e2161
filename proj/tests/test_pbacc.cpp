#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "sieva/losses.hpp"
#include "sieva/pbacc.hpp"

using namespace sieva;

namespace {

double dense_form(const pbacc::DenseMatrix& m, const std::vector<double>& q) {
  double s = 0.0;
  for (std::size_t i = 0; i < m.n; ++i)
    for (std::size_t j = 0; j < m.n; ++j) s += q[i] * m(i, j) * q[j];
  return s;
}

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> d;
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

}  // namespace

TEST(BuildContext, SingleComponentOfThree) {
  const BinaryMask gt({2, 3}, {1, 1, 1, 0, 0, 0});
  const auto ctx = pbacc::build_context(build_partition(gt, Strategy::Boundings), gt);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(ctx.coeff[i], 1.0 / 3.0);
  for (std::size_t i = 3; i < 6; ++i) EXPECT_DOUBLE_EQ(ctx.y_weighted[i], 0.0);
  EXPECT_DOUBLE_EQ(ctx.c_plus, 1.0);
  EXPECT_EQ(ctx.s_minus, 3u);
}

TEST(BuildContext, ComponentsOfOneAndFour) {
  std::vector<std::uint8_t> bits(32, 0);
  for (int i : {0, 22, 23, 30, 31}) bits[std::size_t(i)] = 1;
  const BinaryMask gt({4, 8}, bits);
  const auto ctx = pbacc::build_context(build_partition(gt, Strategy::Boundings), gt);
  EXPECT_DOUBLE_EQ(ctx.coeff[0], 0.5);
  for (int i : {22, 23, 30, 31}) EXPECT_DOUBLE_EQ(ctx.coeff[std::size_t(i)], 0.125);
  EXPECT_DOUBLE_EQ(ctx.c_plus, 1.0);
  // Every non-salient pixel has the same degree c+/S-.
  for (std::size_t i = 0; i < 32; ++i)
    if (!gt[i]) {
      EXPECT_DOUBLE_EQ(ctx.degree[i], 1.0 / 27.0);
    }
}

TEST(BuildContext, DegenerateMasks) {
  const BinaryMask empty({2, 2}, {0, 0, 0, 0});
  const BinaryMask full({2, 2}, {1, 1, 1, 1});
  EXPECT_THROW(pbacc::build_context(build_partition(empty, Strategy::Boundings), empty), UndefinedError);
  EXPECT_THROW(pbacc::build_context(build_partition(full, Strategy::Boundings), full), UndefinedError);
}

TEST(BuildContext, PerComponentCoefficientsSumToOneOverM) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto gt = oracle::random_mask(rng, {10, 10}, 0.2);
    const auto part = build_partition(gt, Strategy::Boundings);
    if (part.frame_count() == 0 || part.negatives == 0) continue;
    const auto ctx = pbacc::build_context(part, gt);
    for (const auto& f : part.frames) {
      double s = 0.0;
      for (auto p : f.component_pixels) s += ctx.coeff[p];
      EXPECT_NEAR(s, 1.0 / double(part.frame_count()), 1e-15);
    }
    EXPECT_NEAR(ctx.c_plus, 1.0, 1e-14);
  }
}

TEST(QuadraticForm, SinglePair) {
  const BinaryMask gt({1, 2}, {1, 0});
  const auto ctx = pbacc::build_context(build_partition(gt, Strategy::Boundings), gt);
  const std::vector<double> q{-0.7, 0.6};
  EXPECT_NEAR(pbacc::quadratic_form(ctx, q), 1.69, 1e-12);
  const std::vector<double> zero{0.0, 0.0};
  EXPECT_EQ(pbacc::quadratic_form(ctx, zero), 0.0);
  for (double g : pbacc::gradient(ctx, zero)) EXPECT_EQ(g, 0.0);
  const auto fd = oracle::finite_difference(
      [&](const std::vector<double>& x) { return pbacc::quadratic_form(ctx, x); }, q);
  EXPECT_LE(oracle::relative_error(pbacc::gradient(ctx, q), fd), 1e-8);
}

TEST(QuadraticForm, LengthMismatch) {
  const BinaryMask gt({1, 2}, {1, 0});
  const auto ctx = pbacc::build_context(build_partition(gt, Strategy::Boundings), gt);
  const std::vector<double> q{0.1, 0.2, 0.3};
  EXPECT_THROW(pbacc::quadratic_form(ctx, q), ShapeError);
  EXPECT_THROW(pbacc::gradient(ctx, q), ShapeError);
}

TEST(QuadraticForm, EqualsNaiveLossOnRandomInstances) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const auto gt = oracle::mask_with_components(rng, {16, 16}, 1 + int(rng() % 5));
    const auto pred = oracle::random_pred(rng, gt.shape());
    const auto part = build_partition(gt, Strategy::Boundings);
    const auto ctx = pbacc::build_context(part, gt);
    const double fast = pbacc::quadratic_form(ctx, pbacc::residual(pred, gt));
    EXPECT_LE(oracle::relative_error(fast, si_auc_loss_naive(pred, gt, part).value), 1e-10);
  }
}

TEST(DenseLaplacian, Identities) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const auto gt = oracle::mask_with_components(rng, {6, 7}, 1 + int(rng() % 3));
    const auto ctx = pbacc::build_context(build_partition(gt, Strategy::Boundings), gt);
    const auto lap = pbacc::dense_laplacian(ctx);
    const auto adj = pbacc::dense_adjacency(ctx);
    for (std::size_t i = 0; i < lap.n; ++i) {
      double row = 0.0, adj_row = 0.0;
      for (std::size_t j = 0; j < lap.n; ++j) {
        EXPECT_DOUBLE_EQ(lap(i, j), lap(j, i));
        row += lap(i, j);
        adj_row += adj(i, j);
      }
      EXPECT_NEAR(row, 0.0, 1e-15);
      EXPECT_NEAR(adj_row, ctx.degree[i], 1e-15);
    }
    for (int k = 0; k < 100; ++k) {
      const auto x = random_vector(rng, ctx.size());
      const double form = dense_form(lap, x);
      EXPECT_GE(form, -1e-12);
      EXPECT_LE(oracle::relative_error(pbacc::quadratic_form(ctx, x), form), 1e-12);
      double half_sum = 0.0;
      for (std::size_t i = 0; i < adj.n; ++i)
        for (std::size_t j = 0; j < adj.n; ++j) half_sum += 0.5 * adj(i, j) * (x[i] - x[j]) * (x[i] - x[j]);
      EXPECT_LE(oracle::relative_error(form, half_sum), 1e-12);
    }
  }
}

TEST(Gradient, EqualsDenseTwoLq) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const auto gt = oracle::mask_with_components(rng, {16, 16}, 1 + int(rng() % 4));
    const auto ctx = pbacc::build_context(build_partition(gt, Strategy::Boundings), gt);
    const auto lap = pbacc::dense_laplacian(ctx);
    const auto q = random_vector(rng, ctx.size());
    std::vector<double> expected(q.size(), 0.0);
    for (std::size_t i = 0; i < lap.n; ++i)
      for (std::size_t j = 0; j < lap.n; ++j) expected[i] += 2.0 * lap(i, j) * q[j];
    EXPECT_LE(oracle::relative_error(pbacc::gradient(ctx, q), expected), 1e-10);
  }
}

TEST(Gradient, MatchesFiniteDifferences) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    const auto gt = oracle::mask_with_components(rng, {8, 8}, 1 + int(rng() % 3));
    const auto ctx = pbacc::build_context(build_partition(gt, Strategy::Boundings), gt);
    const auto q = random_vector(rng, ctx.size());
    const auto fd = oracle::finite_difference(
        [&](const std::vector<double>& x) { return pbacc::quadratic_form(ctx, x); }, q);
    EXPECT_LE(oracle::relative_error(pbacc::gradient(ctx, q), fd), 1e-5);
  }
}

TEST(DenseLaplacian, RefusesLargeImages) {
  std::vector<std::uint8_t> bits(65 * 64, 0);
  bits[0] = 1;
  const BinaryMask one({65, 64}, bits);
  const auto ctx = pbacc::build_context(build_partition(one, Strategy::Boundings), one);
  EXPECT_THROW(pbacc::dense_laplacian(ctx), ArgumentError);
}
