#pragma once

// Dataset evaluation: pairs prediction and ground-truth files by stem, runs
// the table metrics on a worker pool and writes JSON or CSV reports. Output
// depends only on the inputs, the configuration and the seed; worker count
// and completion order never change a byte.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "sieva/core.hpp"
#include "sieva/image_io.hpp"
#include "sieva/metrics.hpp"
#include "sieva/partition.hpp"

namespace sieva {

namespace fs = std::filesystem;

class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ReportFormat { Json, Csv };

struct EvalJob {
  fs::path pred_dir;
  fs::path gt_dir;
  MetricConfig config;
  Strategy strategy = Strategy::Boundings;
  std::uint64_t seed = 0;
  std::vector<std::string> metrics;  // subset of kTableMetrics; empty selects all
  unsigned threads = 1;
};

struct SkippedPair {
  std::string id;
  std::string reason;
};

struct EvalResult {
  std::vector<std::string> metric_names;
  MetricReport report;
  std::vector<std::size_t> object_counts;  // parallel to report.per_image
  std::vector<SkippedPair> skipped;
};

inline const std::vector<std::string>& frame_metric_names() {
  static const std::vector<std::string> names{"frame-MAE", "frame-Fb-mean", "frame-AUC"};
  return names;
}

namespace detail {

// stem -> file, for every supported image in `dir`.
inline std::map<std::string, fs::path> index_images(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw EvalError("not a directory: " + dir.string());
  std::map<std::string, fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || !io::is_supported(entry.path())) continue;
    const auto stem = entry.path().stem().string();
    if (!out.emplace(stem, entry.path()).second)
      throw EvalError("duplicate image stem '" + stem + "' in " + dir.string());
  }
  return out;
}

struct ImageOutcome {
  std::optional<TableRow> row;
  std::size_t objects = 0;
  // frame decile -> per-frame values (MAE, F mean, AUC)
  std::vector<std::pair<int, std::array<std::optional<double>, 3>>> frames;
  std::string error;
};

inline ImageOutcome evaluate_pair(const fs::path& pred_path, const fs::path& gt_path,
                                  const EvalJob& job) {
  ImageOutcome out;
  try {
    const auto pred = io::read_saliency(pred_path);
    const auto gt = io::read_mask(gt_path);
    check_same_shape(pred, gt);
    const auto part = build_partition(gt, job.strategy, job.config.connectivity, job.seed);
    out.row = table_metrics(pred, gt, part, job.config);
    out.objects = part.component_count;
    if (part.strategy == Strategy::Boundings) {
      const auto aucs = frame_aucs(pred, gt, part, job.config);
      for (std::size_t k = 0; k < part.frames.size(); ++k) {
        const auto& frame = part.frames[k];
        const auto curve = curve_over(pred, gt, &frame.frame_pixels, job.config.threshold_count);
        double f_sum = 0.0;
        for (const auto& c : curve.counts) f_sum += f_beta_from_counts(c, job.config.beta_squared);
        out.frames.push_back({size_decile(frame.size(), part.total),
                              {region_mae(pred, gt, frame.frame_pixels),
                               f_sum / double(curve.counts.size()), aucs[k]}});
      }
    }
  } catch (const std::exception& e) {
    out.row.reset();
    out.error = e.what();
  }
  return out;
}

inline void add_group_means(std::map<std::string, double>& dst, const std::string& name,
                            double sum, std::size_t n) {
  if (n > 0) dst[name] = sum / double(n);
}

}  // namespace detail

inline std::vector<std::string> select_metrics(const std::vector<std::string>& requested) {
  if (requested.empty() || (requested.size() == 1 && requested[0] == "all"))
    return {kTableMetrics.begin(), kTableMetrics.end()};
  std::vector<std::string> out;
  for (const char* name : kTableMetrics) {  // keep table column order
    if (std::find(requested.begin(), requested.end(), name) != requested.end()) out.push_back(name);
  }
  for (const auto& r : requested) {
    if (std::find(kTableMetrics.begin(), kTableMetrics.end(), r) == kTableMetrics.end())
      throw EvalError("unknown metric '" + r + "'");
  }
  return out;
}

inline EvalResult run_eval(const EvalJob& job) {
  job.config.validate();
  EvalResult result;
  result.metric_names = select_metrics(job.metrics);

  const auto preds = detail::index_images(job.pred_dir);
  const auto gts = detail::index_images(job.gt_dir);
  std::vector<std::string> orphans;
  for (const auto& [stem, path] : preds) {
    if (!gts.count(stem)) orphans.push_back(stem);
  }
  if (!orphans.empty()) {
    std::string msg = "predictions without ground truth:";
    for (const auto& o : orphans) msg += " " + o;
    throw EvalError(msg);
  }
  if (preds.empty()) throw EvalError("no prediction images in " + job.pred_dir.string());

  std::vector<std::string> ids;
  for (const auto& [stem, path] : preds) ids.push_back(stem);  // lexicographic by map order

  std::vector<detail::ImageOutcome> outcomes(ids.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < ids.size(); i = next++)
      outcomes[i] = detail::evaluate_pair(preds.at(ids[i]), gts.at(ids[i]), job);
  };
  const unsigned width = std::max(1u, std::min<unsigned>(job.threads, unsigned(ids.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < width; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  // Merge strictly in stem order.
  std::map<std::string, std::map<std::string, std::pair<double, std::size_t>>> groups;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    auto& o = outcomes[i];
    if (!o.row) {
      result.skipped.push_back({ids[i], o.error});
      continue;
    }
    MetricReport::Row row{ids[i], {}};
    const auto count_label = "objects=" + group_by_count(o.objects);
    for (std::size_t m = 0; m < kTableMetrics.size(); ++m) {
      const std::string name = kTableMetrics[m];
      if (std::find(result.metric_names.begin(), result.metric_names.end(), name) ==
          result.metric_names.end())
        continue;
      row.values[name] = (*o.row)[m];
      if ((*o.row)[m]) {
        auto& slot = groups[count_label][name];
        slot.first += *(*o.row)[m];
        ++slot.second;
      }
    }
    for (const auto& [decile, values] : o.frames) {
      const auto label = std::string("size-decile=") + (decile < 10 ? "0" : "") +
                         std::to_string(decile);
      for (std::size_t m = 0; m < values.size(); ++m) {
        if (!values[m]) continue;
        auto& slot = groups[label][frame_metric_names()[m]];
        slot.first += *values[m];
        ++slot.second;
      }
    }
    result.report.per_image.push_back(std::move(row));
    result.object_counts.push_back(o.objects);
  }
  result.report.aggregate(result.metric_names);
  for (const auto& [label, metrics] : groups) {
    auto& dst = result.report.group_breakdowns[label];
    for (const auto& [name, acc] : metrics) detail::add_group_means(dst, name, acc.first, acc.second);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::ordered_json config_to_json(const MetricConfig& cfg) {
  nlohmann::ordered_json j;
  j["threshold_count"] = cfg.threshold_count;
  j["beta_squared"] = cfg.beta_squared;
  j["connectivity"] = int(cfg.connectivity);
  j["tie_policy"] = cfg.tie_policy == TiePolicy::Strict ? "strict" : "half-credit";
  j["clamp_epsilon"] = cfg.clamp_epsilon;
  j["e_measure_mapping"] = cfg.e_measure_mapping == EMeasureMapping::Quarter ? "quarter" : "half";
  j["e_measure_stabilizer"] = cfg.e_measure_stabilizer;
  j["ssim_stabilizer"] = cfg.ssim_stabilizer;
  j["s_measure_alpha"] = cfg.s_measure_alpha;
  return j;
}

/// Offline description of a partition: frame boxes, sizes and alpha.
inline nlohmann::ordered_json partition_to_json(const FramePartition& part) {
  nlohmann::ordered_json j;
  j["strategy"] = to_string(part.strategy);
  if (part.seed) j["seed"] = *part.seed;
  j["height"] = part.shape.height;
  j["width"] = part.shape.width;
  j["frame_count"] = part.frame_count();
  j["component_count"] = part.component_count;
  j["alpha"] = part.alpha;
  j["total"] = part.total;
  j["positives"] = part.positives;
  j["negatives"] = part.negatives;
  j["background_size"] = part.background_pixels.size();
  auto frames = nlohmann::ordered_json::array();
  for (const auto& f : part.frames) {
    nlohmann::ordered_json jf;
    jf["bbox"] = {f.bbox.row_min, f.bbox.col_min, f.bbox.row_max, f.bbox.col_max};
    jf["size"] = f.size();
    jf["positive_size"] = f.positive_size();
    frames.push_back(std::move(jf));
  }
  j["frames"] = std::move(frames);
  return j;
}

inline nlohmann::ordered_json report_to_json(const EvalJob& job, const EvalResult& res) {
  nlohmann::ordered_json j;
  j["tool"] = "sieva eval";
  j["strategy"] = to_string(job.strategy);
  j["seed"] = job.seed;
  j["config"] = config_to_json(job.config);
  j["metrics"] = res.metric_names;

  auto images = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < res.report.per_image.size(); ++i) {
    const auto& row = res.report.per_image[i];
    nlohmann::ordered_json ji;
    ji["id"] = row.id;
    ji["objects"] = res.object_counts[i];
    nlohmann::ordered_json values;
    for (const auto& name : res.metric_names) {
      const auto& v = row.values.at(name);
      values[name] = v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
    }
    ji["values"] = std::move(values);
    images.push_back(std::move(ji));
  }
  j["images"] = std::move(images);

  nlohmann::ordered_json agg = nlohmann::ordered_json::object(), undef;
  for (const auto& name : res.metric_names) {
    if (auto it = res.report.aggregates.find(name); it != res.report.aggregates.end())
      agg[name] = it->second;
    else
      agg[name] = nullptr;
    undef[name] = res.report.undefined_counts.at(name);
  }
  j["aggregates"] = std::move(agg);
  j["undefined_counts"] = std::move(undef);

  nlohmann::ordered_json groups = nlohmann::ordered_json::object();
  for (const auto& [label, values] : res.report.group_breakdowns) {
    nlohmann::ordered_json jg = nlohmann::ordered_json::object();
    for (const auto& [name, v] : values) jg[name] = v;
    groups[label] = std::move(jg);
  }
  j["groups"] = std::move(groups);

  auto skipped = nlohmann::ordered_json::array();
  for (const auto& s : res.skipped) skipped.push_back({{"id", s.id}, {"reason", s.reason}});
  j["skipped"] = std::move(skipped);
  return j;
}

inline std::string format_number(std::optional<double> v) {
  if (!v) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", *v);
  return buf;
}

inline std::string report_to_csv(const EvalJob& job, const EvalResult& res) {
  std::ostringstream out;
  out << "# sieva eval strategy=" << to_string(job.strategy) << " seed=" << job.seed
      << " config=" << config_to_json(job.config).dump() << "\n";
  out << "image";
  for (const auto& name : res.metric_names) out << ',' << name;
  out << '\n';
  for (const auto& row : res.report.per_image) {
    out << row.id;
    for (const auto& name : res.metric_names) out << ',' << format_number(row.values.at(name));
    out << '\n';
  }
  auto emit_group = [&](const std::string& label, const std::map<std::string, double>& values,
                        const std::vector<std::string>& columns) {
    out << label;
    for (const auto& name : columns) {
      auto it = values.find(name);
      out << ',' << format_number(it == values.end() ? std::nullopt : std::optional(it->second));
    }
    out << '\n';
  };
  emit_group("mean", res.report.aggregates, res.metric_names);
  for (const auto& [label, values] : res.report.group_breakdowns) {
    if (label.rfind("objects=", 0) == 0) emit_group(label, values, res.metric_names);
  }
  out << "\ngroup";
  for (const auto& name : frame_metric_names()) out << ',' << name;
  out << '\n';
  for (const auto& [label, values] : res.report.group_breakdowns) {
    if (label.rfind("size-decile=", 0) == 0) emit_group(label, values, frame_metric_names());
  }
  for (const auto& s : res.skipped) out << "# skipped " << s.id << ": " << s.reason << '\n';
  return out.str();
}

inline void write_report(const fs::path& path, ReportFormat format, const EvalJob& job,
                         const EvalResult& res) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw EvalError("cannot write " + path.string());
  if (format == ReportFormat::Json) out << report_to_json(job, res).dump(2) << '\n';
  else out << report_to_csv(job, res);
  if (!out) throw EvalError("failed writing " + path.string());
}

}  // namespace sieva
