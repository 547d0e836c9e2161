// sieva command line: dataset evaluation, single-pair losses and synthetic scenes.
//
//   sieva eval --pred <dir> --gt <dir> [--metrics all|MAE,SI-MAE,...] --out report.json
//   sieva loss --pred p.png --gt g.png --kind si-auc [--grad grad.csv]
//   sieva synth --case prop34|propB2|scale-sweep --out <dir> [--seed n]
//   sieva partition --gt g.png --out frames.json

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sieva/evaluation.hpp"
#include "sieva/losses.hpp"
#include "sieva/synth.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFatal = 1;
constexpr int kExitPartial = 2;

const std::map<std::string, sieva::Strategy> kStrategies{
    {"boundings", sieva::Strategy::Boundings},
    {"random", sieva::Strategy::Random},
    {"nearest", sieva::Strategy::Nearest}};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void write_grad_csv(const std::string& path, const sieva::LossValueGrad& loss) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw sieva::io::ImageError("cannot write " + path);
  char buf[32];
  for (std::size_t r = 0; r < loss.shape.height; ++r) {
    for (std::size_t c = 0; c < loss.shape.width; ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", loss.grad[r * loss.shape.width + c]);
      if (c) out << ',';
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Size-invariant saliency evaluation"};
  app.require_subcommand(1);

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate a prediction directory against ground truth");
  sieva::EvalJob job;
  std::string pred_dir, gt_dir, metrics = "all", out_path, format = "json";
  sieva::Strategy strategy = sieva::Strategy::Boundings;
  int connectivity = 8;
  eval->add_option("--pred", pred_dir, "Prediction directory")->required()->check(CLI::ExistingDirectory);
  eval->add_option("--gt", gt_dir, "Ground-truth directory")->required()->check(CLI::ExistingDirectory);
  eval->add_option("--metrics", metrics, "Comma-separated metric names or 'all'");
  eval->add_option("--strategy", strategy, "Frame partition strategy")
      ->transform(CLI::CheckedTransformer(kStrategies, CLI::ignore_case));
  eval->add_option("--connectivity", connectivity, "Pixel connectivity")->check(CLI::IsMember({4, 8}));
  eval->add_option("--seed", job.seed, "Job seed");
  eval->add_option("--threads", job.threads, "Worker threads")->check(CLI::Range(1u, 1024u));
  eval->add_option("--out", out_path, "Report path")->required();
  eval->add_option("--format", format, "Report format")->check(CLI::IsMember({"json", "csv"}));

  // loss
  auto* loss = app.add_subcommand("loss", "Compute one loss value (and gradient) for an image pair");
  std::string loss_pred, loss_gt, kind_name, grad_path;
  sieva::Strategy loss_strategy = sieva::Strategy::Boundings;
  std::uint64_t loss_seed = 0;
  std::vector<std::string> kind_names;
  for (const auto& [k, n] : sieva::kLossNames) kind_names.emplace_back(n);
  loss->add_option("--pred", loss_pred, "Prediction image")->required()->check(CLI::ExistingFile);
  loss->add_option("--gt", loss_gt, "Ground-truth mask")->required()->check(CLI::ExistingFile);
  loss->add_option("--kind", kind_name, "Loss kind")->required()->check(CLI::IsMember(kind_names));
  loss->add_option("--grad", grad_path, "Write the gradient as CSV");
  loss->add_option("--strategy", loss_strategy, "Frame partition strategy for si-* kinds")
      ->transform(CLI::CheckedTransformer(kStrategies, CLI::ignore_case));
  loss->add_option("--seed", loss_seed, "Seed for the random strategy");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate synthetic counterexample scenes");
  std::string synth_case, synth_out;
  std::uint64_t synth_seed = 0;
  const std::map<std::string, sieva::synth::Case> cases{
      {"prop34", sieva::synth::Case::Prop34},
      {"propB2", sieva::synth::Case::PropB2},
      {"scale-sweep", sieva::synth::Case::ScaleSweep}};
  synth->add_option("--case", synth_case, "Scene family")->required()->check(
      CLI::IsMember({"prop34", "propB2", "scale-sweep"}));
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--seed", synth_seed, "Generator seed");

  // partition
  auto* partition = app.add_subcommand("partition", "Dump the frame partition of a mask as JSON");
  std::string part_gt, part_out;
  sieva::Strategy part_strategy = sieva::Strategy::Boundings;
  std::uint64_t part_seed = 0;
  partition->add_option("--gt", part_gt, "Ground-truth mask")->required()->check(CLI::ExistingFile);
  partition->add_option("--out", part_out, "Output JSON path (stdout when omitted)");
  partition->add_option("--strategy", part_strategy, "Frame partition strategy")
      ->transform(CLI::CheckedTransformer(kStrategies, CLI::ignore_case));
  partition->add_option("--seed", part_seed, "Seed for the random strategy");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*eval) {
      job.pred_dir = pred_dir;
      job.gt_dir = gt_dir;
      job.strategy = strategy;
      job.config.connectivity = connectivity == 4 ? sieva::Connectivity::Four : sieva::Connectivity::Eight;
      if (metrics != "all") job.metrics = split_list(metrics);
      const auto result = sieva::run_eval(job);
      sieva::write_report(out_path, format == "csv" ? sieva::ReportFormat::Csv : sieva::ReportFormat::Json,
                          job, result);
      for (const auto& s : result.skipped) std::cerr << "skipped " << s.id << ": " << s.reason << '\n';
      std::cout << "evaluated " << result.report.per_image.size() << " pairs";
      if (!result.skipped.empty()) std::cout << ", skipped " << result.skipped.size();
      std::cout << "; report written to " << out_path << '\n';
      return result.skipped.empty() ? kExitOk : kExitPartial;
    }

    if (*loss) {
      const auto pred = sieva::io::read_saliency(loss_pred);
      const auto gt = sieva::io::read_mask(loss_gt);
      sieva::check_same_shape(pred, gt);
      const auto part = sieva::build_partition(gt, loss_strategy, sieva::Connectivity::Eight, loss_seed);
      const auto result = sieva::compute_loss(*sieva::parse_loss_kind(kind_name), pred, gt, part);
      std::printf("%.17g\n", result.value);
      if (!grad_path.empty()) write_grad_csv(grad_path, result);
      return kExitOk;
    }

    if (*synth) {
      sieva::synth::write_case(cases.at(synth_case), synth_out, synth_seed);
      std::cout << synth_case << " scenes written to " << synth_out << '\n';
      return kExitOk;
    }

    if (*partition) {
      const auto gt = sieva::io::read_mask(part_gt);
      const auto part = sieva::build_partition(gt, part_strategy, sieva::Connectivity::Eight, part_seed);
      const auto text = sieva::partition_to_json(part).dump(2);
      if (part_out.empty()) {
        std::cout << text << '\n';
      } else {
        std::ofstream out(part_out, std::ios::binary);
        if (!(out << text << '\n')) throw sieva::io::ImageError("cannot write " + part_out);
      }
      return kExitOk;
    }
  } catch (const sieva::UndefinedError& e) {
    std::cerr << "undefined: " << e.what() << '\n';
    return kExitFatal;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFatal;
  }
  return kExitFatal;
}
