// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.
// Usage: acceptance <path-to-sieva-cli> <work-dir>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "sieva/evaluation.hpp"
#include "sieva/losses.hpp"
#include "sieva/pbacc.hpp"
#include "sieva/synth.hpp"

using namespace sieva;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(const char* name, bool ok, const std::string& detail) {
  std::printf("%s  %-28s %s\n", ok ? "PASS" : "FAIL", name, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run(const std::string& cmd) {
  const int status = std::system((cmd + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

SaliencyMap as_pred(const BinaryMask& m) {
  return SaliencyMap(m.shape(), std::vector<double>(m.values().begin(), m.values().end()));
}

BinaryMask mask_of(const synth::MissedObjectsScene& s, const std::vector<std::uint8_t>& bits) {
  return BinaryMask(s.shape, bits);
}

void pbacc_equivalence() {
  std::mt19937_64 rng(101);
  const int ms[] = {1, 2, 3, 5};
  double worst = 0.0;
  const auto t0 = Clock::now();
  for (int trial = 0; trial < 200; ++trial) {
    const Shape shape{8 + rng() % 25, 8 + rng() % 25};
    const auto gt = oracle::mask_with_components(rng, shape, ms[trial % 4]);
    const auto pred = oracle::random_pred(rng, shape);
    const auto part = build_partition(gt, Strategy::Boundings);
    const auto ctx = pbacc::build_context(part, gt);
    const double fast = pbacc::quadratic_form(ctx, pbacc::residual(pred, gt));
    worst = std::max(worst, oracle::relative_error(fast, si_auc_loss_naive(pred, gt, part).value));
  }
  const double elapsed = seconds_since(t0);
  report("pbacc-equivalence", worst <= 1e-10 && elapsed < 30.0,
         fmt("200 instances, max rel err %.3g (<= 1e-10), %.2f s (< 30 s)", worst, elapsed));
}

void pbacc_speed() {
  // Three square objects of 100, 400 and 900 pixels.
  const Shape shape{128, 128};
  std::vector<std::uint8_t> bits(shape.size(), 0);
  auto square = [&](std::size_t r0, std::size_t c0, std::size_t side) {
    for (std::size_t r = r0; r < r0 + side; ++r)
      for (std::size_t c = c0; c < c0 + side; ++c) bits[r * shape.width + c] = 1;
  };
  square(5, 5, 10);
  square(40, 70, 20);
  square(85, 20, 30);
  const BinaryMask gt(shape, bits);
  std::mt19937_64 rng(103);
  const auto pred = oracle::random_pred(rng, shape);
  const auto part = build_partition(gt, Strategy::Boundings);
  constexpr int kReps = 10;

  double sink = 0.0;
  auto t0 = Clock::now();
  for (int i = 0; i < kReps; ++i) sink += si_auc_loss_naive(pred, gt, part).value;
  const double naive = seconds_since(t0);
  t0 = Clock::now();
  for (int i = 0; i < kReps; ++i) sink -= si_auc_loss(pred, gt, part).value;
  const double fast = seconds_since(t0);
  const double ratio = naive / std::max(fast, 1e-9);
  report("pbacc-speed", part.frame_count() == 3 && ratio >= 50.0 && std::abs(sink) < 1e-6 * kReps,
         fmt("128x128, M=%zu, %d reps: naive %.3f s, implicit %.5f s, speedup %.0fx (>= 50x)",
             part.frame_count(), kReps, naive, fast, ratio));
}

void gradient_correctness() {
  const LossKind kinds[] = {LossKind::Bce, LossKind::SiBce, LossKind::Dice,  LossKind::SiDice,
                            LossKind::Iou, LossKind::SiIou, LossKind::AucSq, LossKind::SiAuc};
  std::mt19937_64 rng(107);
  double worst = 0.0;
  std::string worst_kind;
  for (auto kind : kinds) {
    for (int trial = 0; trial < 30; ++trial) {
      const auto gt = oracle::mask_with_components(rng, {8, 8}, 1 + int(rng() % 3));
      // Inside (0,1) by a margin so the BCE clamp never engages at the FD step.
      const auto pred = oracle::random_pred(rng, gt.shape(), 0.01, 0.99);
      const auto part = build_partition(gt, Strategy::Boundings);
      const auto analytic = compute_loss(kind, pred, gt, part).grad;
      const auto fd = oracle::finite_difference(
          [&](const std::vector<double>& x) { return compute_loss(kind, SaliencyMap(gt.shape(), x), gt, part).value; },
          std::vector<double>(pred.values().begin(), pred.values().end()));
      const double err = oracle::relative_error(analytic, fd);
      if (err > worst) {
        worst = err;
        worst_kind = std::string(to_string(kind));
      }
    }
  }
  report("gradient-correctness", worst <= 1e-5,
         fmt("8 kinds x 30 instances, max rel err %.3g (%s) (<= 1e-5)", worst, worst_kind.c_str()));
}

void decomposition_identities() {
  std::mt19937_64 rng(109);
  double mae_err = 0.0, auc_err = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Shape shape{6 + rng() % 20, 6 + rng() % 20};
    const auto gt = oracle::mask_with_components(rng, shape, 1 + int(rng() % 4));
    const auto pred = oracle::random_pred(rng, shape);

    // MAE as the area-weighted sum over a tiling partition.
    const auto tiles = build_partition(gt, Strategy::Nearest);
    double mae_sum = 0.0;
    for (const auto& f : tiles.frames)
      mae_sum += double(f.size()) / double(tiles.total) * oracle::mae_over(pred, gt, f.frame_pixels);
    mae_err = std::max(mae_err, std::abs(mae_sum - mae(pred, gt)));

    // AUC as the component-size-weighted sum of per-component AUCs.
    const auto boxes = build_partition(gt, Strategy::Boundings);
    double auc_sum = 0.0;
    for (const auto& f : boxes.frames)
      auc_sum += double(f.positive_size()) / double(boxes.positives) *
                 oracle::auc(oracle::pair_counts(pred, gt, f.component_pixels), false);
    auc_err = std::max(auc_err, std::abs(auc_sum - *auc_rank(pred, gt)));
  }
  report("decomposition-identities", mae_err <= 1e-12 && auc_err <= 1e-12,
         fmt("100 instances, MAE max err %.3g, AUC max err %.3g (<= 1e-12)", mae_err, auc_err));
}

void missed_small_objects_mae(const std::string& cli, const fs::path& work) {
  const fs::path dir = work / "missed_objects";
  fs::remove_all(dir);
  const int rc = run(cli + " synth --case prop34 --seed 7 --out " + dir.string());
  bool ok = rc == 0;
  std::string detail = fmt("synth exit %d", rc);
  if (ok) {
    const auto gt = io::read_mask(dir / "gt" / "prop34_000.png");
    const auto a = io::read_saliency(dir / "pred_A" / "prop34_000.png");
    const auto b = io::read_saliency(dir / "pred_B" / "prop34_000.png");
    const auto part = build_partition(gt, Strategy::Boundings);
    const double mae_a = mae(a, gt), mae_b = mae(b, gt);
    const double si_a = si_mae(a, gt, part), si_b = si_mae(b, gt, part);
    // Two frames of 1 and 4 pixels with alpha = 27/5: exactly 1/7.4 and 0.25/7.4.
    const double exact_a = 1.0 / 7.4, exact_b = 0.25 / 7.4;
    const bool scene_ok = mae_a == 1.0 / 32.0 && mae_b == 1.0 / 32.0 && std::abs(si_a - exact_a) <= 1e-9 &&
                          std::abs(si_b - exact_b) <= 1e-9 && si_a > si_b;

    std::mt19937_64 rng(113);
    int ordered = 0;
    for (int i = 0; i < 50; ++i) {
      const auto s = synth::random_missed_objects_scene(rng);
      const auto g = mask_of(s, s.gt);
      const auto pa = as_pred(mask_of(s, s.pred_a)), pb = as_pred(mask_of(s, s.pred_b));
      const auto p = build_partition(g, Strategy::Boundings);
      if (mae(pa, g) == mae(pb, g) && si_mae(pa, g, p) > si_mae(pb, g, p)) ++ordered;
    }
    ok = scene_ok && ordered == 50;
    detail = fmt("mae A=B=%.5f; si_mae A=%.6f B=%.6f (~0.135135, ~0.033784 +-1e-9); random scenes ordered %d/50",
                 mae_a, si_a, si_b, ordered);
  }
  report("missed-small-objects-mae", ok, detail);
}

void region_weighted_f() {
  std::mt19937_64 rng(127);
  constexpr std::size_t kHalf = 128;  // tau = 128/255, between the two binary levels
  int ordered = 0;
  for (int i = 0; i < 50; ++i) {
    const auto s = synth::random_missed_objects_scene(rng);
    const auto g = mask_of(s, s.gt);
    const auto pa = as_pred(mask_of(s, s.pred_a)), pb = as_pred(mask_of(s, s.pred_b));
    const auto p = build_partition(g, Strategy::Boundings);
    const double fa = f_beta(pa, g).per_threshold[kHalf], fb = f_beta(pb, g).per_threshold[kHalf];
    const double sa = si_f(pa, g, p)->per_threshold[kHalf], sb = si_f(pb, g, p)->per_threshold[kHalf];
    if (fa == fb && sb > sa) ++ordered;
  }
  report("region-weighted-f", ordered == 50,
         fmt("whole-image F equal and si_f(B) > si_f(A) at tau=0.5 on %d/50 scenes", ordered));
}

void single_object_collapse() {
  std::mt19937_64 rng(131);
  double mae_err = 0.0, auc_err = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Shape shape{4 + rng() % 20, 4 + rng() % 20};
    const auto gt = oracle::mask_with_components(rng, shape, 1);
    const auto pred = oracle::random_pred(rng, shape);
    const auto part = build_partition(gt, Strategy::Boundings);
    mae_err = std::max(mae_err, std::abs(si_mae(pred, gt, part) - mae(pred, gt)));
    auc_err = std::max(auc_err, std::abs(*si_auc(pred, gt, part) - *auc_rank(pred, gt)));
  }
  report("single-object-collapse", mae_err <= 1e-12 && auc_err <= 1e-12,
         fmt("100 instances, |si_mae-mae| %.3g, |si_auc-auc| %.3g (<= 1e-12)", mae_err, auc_err));
}

void metric_sanity() {
  std::mt19937_64 rng(137);
  double mae_max = 0.0, f_dev = 0.0, auc_dev = 0.0, e_dev = 0.0, s_dev = 0.0, mean_f_min = 1.0;
  for (int trial = 0; trial < 50; ++trial) {
    const Shape shape{6 + rng() % 20, 6 + rng() % 20};
    const auto gt = oracle::mask_with_components(rng, shape, 1 + int(rng() % 4));
    const auto pred = as_pred(gt);
    mae_max = std::max(mae_max, mae(pred, gt));
    const auto f = f_beta(pred, gt);
    // Every threshold that separates the two binary levels.
    for (std::size_t k = 1; k < f.per_threshold.size(); ++k) f_dev = std::max(f_dev, std::abs(f.per_threshold[k] - 1.0));
    f_dev = std::max(f_dev, std::abs(f.max - 1.0));
    mean_f_min = std::min(mean_f_min, f.mean);
    auc_dev = std::max(auc_dev, std::abs(*auc_rank(pred, gt) - 1.0));
    e_dev = std::max(e_dev, std::abs(e_measure(pred, gt) - 1.0));
    s_dev = std::max(s_dev, std::abs(s_measure(pred, gt) - 1.0));
  }
  report("metric-sanity",
         mae_max == 0.0 && f_dev <= 1e-9 && auc_dev == 0.0 && e_dev <= 1e-9 && s_dev <= 1e-9,
         fmt("50 masks: MAE %.3g, |Fb-1| %.3g (tau > 0, max), |AUC-1| %.3g, |Em-1| %.3g, |Sm-1| %.3g; "
             "mean over grid incl. tau=0 >= %.4f",
             mae_max, f_dev, auc_dev, e_dev, s_dev, mean_f_min));
}

void rank_auc_oracle() {
  std::mt19937_64 rng(139);
  int exact = 0, checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto gt = oracle::random_mask(rng, {12, 12}, 0.05 + 0.5 * double(rng() % 100) / 100.0);
    const auto pred = trial % 2 ? oracle::random_tied_pred(rng, gt.shape(), 2 + int(rng() % 8))
                                : oracle::random_pred(rng, gt.shape());
    const auto pc = oracle::pair_counts(pred, gt, oracle::positives_of(gt));
    for (bool half : {false, true}) {
      MetricConfig cfg;
      cfg.tie_policy = half ? TiePolicy::HalfCredit : TiePolicy::Strict;
      const auto got = auc_rank(pred, gt, cfg);
      ++checked;
      if (pc.pairs == 0 ? !got : (got && *got == oracle::auc(pc, half))) ++exact;
    }
  }
  report("rank-auc-oracle", exact == checked,
         fmt("200 instances x 2 tie policies, exact matches %d/%d", exact, checked));
}

void determinism(const std::string& cli, const fs::path& work) {
  const fs::path dir = work / "determinism";
  fs::remove_all(dir);
  bool ok = run(cli + " synth --case scale-sweep --seed 11 --out " + (dir / "data").string()) == 0;
  std::string detail = "synth failed";
  if (ok) {
    const std::string base = cli + " eval --pred " + (dir / "data" / "pred").string() + " --gt " +
                             (dir / "data" / "gt").string() + " --strategy random --seed 5 --threads 2";
    int rc = 0;
    bool same = true;
    for (const char* format : {"json", "csv"}) {
      const auto first = dir / (std::string("first.") + format), second = dir / (std::string("second.") + format);
      rc |= run(base + " --format " + format + " --out " + first.string());
      rc |= run(base + " --format " + format + " --out " + second.string());
      same = same && fs::exists(first) && slurp(first) == slurp(second) && !slurp(first).empty();
    }
    ok = rc == 0 && same;
    detail = fmt("two eval runs (json and csv, random strategy, seed 5): %s, exit codes %s",
                 same ? "byte-identical" : "differ", rc == 0 ? "0" : "nonzero");
  }
  report("determinism", ok, detail);
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 3) {
    std::fprintf(stderr, "usage: %s <sieva-cli> <work-dir>\n", argv[0]);
    return 1;
  }
  const std::string cli = argv[1];
  const fs::path work = argv[2];
  fs::create_directories(work);

  pbacc_equivalence();
  pbacc_speed();
  gradient_correctness();
  decomposition_identities();
  missed_small_objects_mae(cli, work);
  region_weighted_f();
  single_object_collapse();
  metric_sanity();
  rank_auc_oracle();
  determinism(cli, work);

  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
