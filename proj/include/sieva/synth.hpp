#pragma once

// Synthetic counterexample scenes: several objects of unequal size where a
// predictor that misses the small objects and one that catches every object
// partially detect the same number of pixels. Whole-image MAE and F-beta
// cannot tell the two apart; the size-invariant versions can.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "sieva/core.hpp"
#include "sieva/image_io.hpp"
#include "sieva/metrics.hpp"

namespace sieva::synth {

struct Rect {
  std::size_t row = 0, col = 0, height = 0, width = 0;
  std::size_t area() const { return height * width; }
};

/// Objects sorted by increasing area; predictor A finds objects
/// [missed, M) exactly, predictor B finds every object but leaves
/// `removed` pixels of the largest one undetected.
struct MissedObjectsScene {
  Shape shape;
  std::vector<Rect> objects;
  std::size_t missed = 0;  // m: number of small objects A misses
  std::vector<std::uint8_t> gt, pred_a, pred_b;  // 0/1 per pixel

  std::size_t removed() const {
    std::size_t k = 0;
    for (std::size_t i = 0; i < missed; ++i) k += objects[i].area();
    return k;
  }
};

namespace detail {

inline std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n) { return rng() % n; }

inline void paint(std::vector<std::uint8_t>& img, std::size_t width, const Rect& r) {
  for (std::size_t y = r.row; y < r.row + r.height; ++y)
    for (std::size_t x = r.col; x < r.col + r.width; ++x) img[y * width + x] = 1;
}

}  // namespace detail

/// Fills gt and both predictions from shape, objects and `missed`.
inline void render(MissedObjectsScene& s) {
  const std::size_t n = s.shape.size(), w = s.shape.width;
  s.gt.assign(n, 0);
  s.pred_a.assign(n, 0);
  s.pred_b.assign(n, 0);
  for (std::size_t i = 0; i < s.objects.size(); ++i) {
    detail::paint(s.gt, w, s.objects[i]);
    detail::paint(s.pred_b, w, s.objects[i]);
    if (i >= s.missed) detail::paint(s.pred_a, w, s.objects[i]);
  }
  // B gives up as many pixels of the largest object as A misses in total.
  std::size_t k = s.removed();
  const Rect& big = s.objects.back();
  for (std::size_t y = big.row; y < big.row + big.height && k > 0; ++y)
    for (std::size_t x = big.col; x < big.col + big.width && k > 0; ++x, --k) s.pred_b[y * w + x] = 0;
}

/// The 4x8 scene: a single pixel at (0,0) and a 2x2 block at rows 2-3, cols 6-7.
inline MissedObjectsScene default_prop34_scene() {
  MissedObjectsScene s;
  s.shape = {4, 8};
  s.objects = {{0, 0, 1, 1}, {2, 6, 2, 2}};
  s.missed = 1;
  render(s);
  return s;
}

/// 16x16 scene with a 2x2 and a 4x4 object.
inline MissedObjectsScene default_propB2_scene() {
  MissedObjectsScene s;
  s.shape = {16, 16};
  s.objects = {{1, 1, 2, 2}, {8, 8, 4, 4}};
  s.missed = 1;
  render(s);
  return s;
}

/// Random scene with 2-4 rectangles of strictly increasing area stacked in
/// bands separated by empty rows, so no two objects touch or share a box.
inline MissedObjectsScene random_missed_objects_scene(std::mt19937_64& rng) {
  using detail::uniform_index;
  while (true) {
    MissedObjectsScene s;
    const std::size_t m_objects = 2 + uniform_index(rng, 3);
    std::vector<Rect> objects(m_objects);
    for (auto& r : objects) {
      r.height = 1 + uniform_index(rng, 6);
      r.width = 1 + uniform_index(rng, 10);
    }
    std::sort(objects.begin(), objects.end(),
              [](const Rect& a, const Rect& b) { return a.area() < b.area(); });
    bool strictly_increasing = true;
    for (std::size_t i = 1; i < objects.size(); ++i)
      strictly_increasing &= objects[i - 1].area() < objects[i].area();
    if (!strictly_increasing) continue;

    s.missed = 1 + uniform_index(rng, m_objects - 1);
    std::size_t small_total = 0;
    for (std::size_t i = 0; i < s.missed; ++i) small_total += objects[i].area();
    if (small_total >= objects.back().area()) continue;

    std::size_t width = 0;
    for (const auto& r : objects) width = std::max(width, r.width);
    width += uniform_index(rng, 5);
    // Bands are shuffled so object size does not follow vertical position.
    std::vector<std::size_t> order(m_objects);
    for (std::size_t i = 0; i < m_objects; ++i) order[i] = i;
    for (std::size_t i = m_objects; i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
    std::size_t row = uniform_index(rng, 3);
    for (auto i : order) {
      objects[i].row = row;
      objects[i].col = uniform_index(rng, width - objects[i].width + 1);
      row += objects[i].height + 1;
    }
    s.shape = {row + uniform_index(rng, 3), width};
    s.objects = std::move(objects);
    render(s);
    return s;
  }
}

/// Closed-form expectations for a MissedObjectsScene (objects are their own
/// bounding boxes, so every frame MAE is a simple ratio).
inline nlohmann::ordered_json expected_values(const MissedObjectsScene& s, double beta_squared) {
  const double total = double(s.shape.size());
  const double m = double(s.objects.size());
  double fore = 0.0;
  for (const auto& r : s.objects) fore += double(r.area());
  const double alpha = (total - fore) / fore;
  const double k = double(s.removed());
  const double big = double(s.objects.back().area());

  const ConfusionCounts whole{std::size_t(fore - k), 0, std::size_t(k), std::size_t(total - fore)};
  const ConfusionCounts big_frame{std::size_t(big - k), 0, std::size_t(k), 0};
  const double f_whole = f_beta_from_counts(whole, beta_squared);

  nlohmann::ordered_json j;
  j["objects"] = s.objects.size();
  j["missed_by_A"] = s.missed;
  j["alpha"] = alpha;
  j["mae_A"] = k / total;
  j["mae_B"] = k / total;
  j["si_mae_A"] = double(s.missed) / (m + alpha);
  j["si_mae_B"] = (k / big) / (m + alpha);
  j["f_at_half_A"] = f_whole;
  j["f_at_half_B"] = f_whole;
  j["si_f_at_half_A"] = (m - double(s.missed)) / m;
  j["si_f_at_half_B"] = (m - 1.0 + f_beta_from_counts(big_frame, beta_squared)) / m;
  return j;
}

namespace fs = std::filesystem;

inline io::GrayImage to_image(const Shape& shape, const std::vector<std::uint8_t>& binary) {
  io::GrayImage img{shape, binary};
  for (auto& px : img.pixels) px = px ? 255 : 0;
  return img;
}

inline void write_json(const fs::path& path, const nlohmann::ordered_json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io::ImageError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

enum class Case { Prop34, PropB2, ScaleSweep };

inline constexpr std::size_t kRandomScenes = 8;

/// Writes gt/, pred_A/, pred_B/ (or pred/ for the scale sweep) and manifest.json.
inline void write_case(Case which, const fs::path& out_dir, std::uint64_t seed) {
  fs::create_directories(out_dir / "gt");
  std::mt19937_64 rng(seed);
  nlohmann::ordered_json manifest;
  manifest["seed"] = seed;

  if (which == Case::ScaleSweep) {
    // 20x20 scenes, one full-height bar per relative-area decile.
    fs::create_directories(out_dir / "pred");
    manifest["case"] = "scale-sweep";
    manifest["relations"] = {"each scene's single frame falls in size decile `decile`"};
    auto scenes = nlohmann::ordered_json::array();
    const Shape shape{20, 20};
    for (int d = 1; d <= 10; ++d) {
      const std::size_t bar = std::size_t(2 * d - 1);
      const std::size_t col = detail::uniform_index(rng, shape.width - bar + 1);
      std::vector<std::uint8_t> gt(shape.size(), 0);
      detail::paint(gt, shape.width, {0, col, shape.height, bar});
      io::GrayImage pred{shape, std::vector<std::uint8_t>(shape.size())};
      for (std::size_t i = 0; i < gt.size(); ++i) {
        const int base = gt[i] ? 190 : 50;
        pred.pixels[i] = std::uint8_t(base + int(detail::uniform_index(rng, 31)) - 15);
      }
      char id[32];
      std::snprintf(id, sizeof id, "sweep_%02d", d);
      io::write_png(out_dir / "gt" / (std::string(id) + ".png"), to_image(shape, gt));
      io::write_png(out_dir / "pred" / (std::string(id) + ".png"), pred);
      scenes.push_back({{"id", id},
                        {"decile", d},
                        {"bbox_area", bar * shape.height},
                        {"relative_area", double(bar * shape.height) / double(shape.size())}});
    }
    manifest["scenes"] = std::move(scenes);
    write_json(out_dir / "manifest.json", manifest);
    return;
  }

  fs::create_directories(out_dir / "pred_A");
  fs::create_directories(out_dir / "pred_B");
  const bool prop34 = which == Case::Prop34;
  manifest["case"] = prop34 ? "prop34" : "propB2";
  if (prop34)
    manifest["relations"] = {"mae_A == mae_B", "si_mae_A > si_mae_B"};
  else
    manifest["relations"] = {"f_at_half_A == f_at_half_B", "si_f_B > si_f_A"};
  manifest["beta_squared"] = MetricConfig{}.beta_squared;

  auto scenes = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i <= kRandomScenes; ++i) {
    const auto scene = i == 0 ? (prop34 ? default_prop34_scene() : default_propB2_scene())
                              : random_missed_objects_scene(rng);
    char id[32];
    std::snprintf(id, sizeof id, "%s_%03zu", prop34 ? "prop34" : "propB2", i);
    io::write_png(out_dir / "gt" / (std::string(id) + ".png"), to_image(scene.shape, scene.gt));
    io::write_png(out_dir / "pred_A" / (std::string(id) + ".png"), to_image(scene.shape, scene.pred_a));
    io::write_png(out_dir / "pred_B" / (std::string(id) + ".png"), to_image(scene.shape, scene.pred_b));
    nlohmann::ordered_json js;
    js["id"] = id;
    js["height"] = scene.shape.height;
    js["width"] = scene.shape.width;
    js["expected"] = expected_values(scene, MetricConfig{}.beta_squared);
    scenes.push_back(std::move(js));
  }
  manifest["scenes"] = std::move(scenes);
  write_json(out_dir / "manifest.json", manifest);
}

}  // namespace sieva::synth
