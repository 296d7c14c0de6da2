#include "cli/commands.hpp"

#include "cli/cli.hpp"

#include <atomic>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include <spdlog/spdlog.h>

#include "focalkit/augment.hpp"
#include "focalkit/camera.hpp"
#include "focalkit/error.hpp"
#include "focalkit/experiment.hpp"
#include "focalkit/focal_net/checkpoint.hpp"
#include "focalkit/focal_net/gradcheck.hpp"
#include "focalkit/metrics.hpp"
#include "focalkit/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace focalkit::cli {

inline constexpr int kReportSchemaVersion = 1;

ordered_json to_json(const GlobalOptions& o) {
  return {{"seed", o.seed}, {"jobs", o.jobs}, {"log_level", o.log_level}};
}
ordered_json to_json(const SynthOptions& o) {
  return {{"out", o.out},       {"count", o.count},   {"focal", o.focal},           {"height", o.height},
          {"width", o.width},   {"period", o.period}, {"depth_scale", o.depth_scale}};
}
ordered_json to_json(const AugmentCliOptions& o) {
  return {{"manifest", o.manifest}, {"out", o.out},
          {"ratio", o.ratio},       {"k_min", o.k_min},
          {"k_max", o.k_max},       {"keep_original", o.keep_original},
          {"bilinear_rgb", o.bilinear_rgb}};
}
ordered_json to_json(const EvalCliOptions& o) {
  return {{"pred_manifest", o.pred_manifest},
          {"gt_manifest", o.gt_manifest},
          {"cap", o.cap},
          {"aggregation", o.per_image ? "per_image" : "pooled"},
          {"out", o.out}};
}
ordered_json to_json(const ReconstructOptions& o) {
  ordered_json j{{"manifest", o.manifest}, {"out_dir", o.out_dir}};
  j["override_fx"] = o.override_fx ? ordered_json(*o.override_fx) : ordered_json(nullptr);
  return j;
}
ordered_json to_json(const TrainCliOptions& o) {
  return {{"manifest", o.manifest},
          {"test_manifest", o.test_manifest},
          {"out", o.out},
          {"epochs", o.epochs},
          {"base_lr", o.base_lr},
          {"backbone_ratio", o.backbone_ratio},
          {"weight_decay", o.weight_decay},
          {"batch_size", o.batch_size},
          {"ablate_focal", o.ablate_focal},
          {"focal_norm", o.focal_norm},
          {"bins", o.bins},
          {"silog_lambda", o.silog_lambda}};
}
ordered_json to_json(const GradcheckCliOptions& o) { return {{"seeds", o.seeds}}; }
ordered_json to_json(const ExperimentCliOptions& o) {
  return {{"seeds", o.seeds}, {"train_scenes", o.train_scenes}, {"test_scenes", o.test_scenes}, {"csv", o.csv}};
}

std::pair<double, double> parse_pair(const std::string& text, const char* what) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw ArgumentError(std::string(what) + " must look like a:b, got '" + text + "'");
  const auto parse = [&](std::string_view s) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      throw ArgumentError(std::string(what) + ": cannot parse '" + std::string(s) + "'");
    }
    return v;
  };
  const std::string_view all(text);
  return {parse(all.substr(0, colon)), parse(all.substr(colon + 1))};
}

namespace {

// Runs fn(i) for i in [0, n) on up to `jobs` threads; the first exception
// (lowest index) is rethrown after all workers finish.
template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto threads = static_cast<std::size_t>(std::max(1, jobs));
  if (threads == 1 || n <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < std::min(threads, n); ++t) pool.emplace_back(worker);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw IoError(path.string(), "cannot open for writing");
  f << text;
  if (!f) throw IoError(path.string(), "write failed");
}

std::vector<RgbdSample> load_all(const Manifest& m, int jobs) {
  std::vector<RgbdSample> out(m.records.size());
  parallel_for(out.size(), jobs, [&](std::size_t i) { out[i] = load_sample(m.records[i], m.base_dir); });
  return out;
}

}  // namespace

int cmd_synth(const GlobalOptions& g, const SynthOptions& o, std::ostream& out) {
  synth::SceneConfig cfg;
  cfg.height = o.height;
  cfg.width = o.width;
  cfg.texture_period = o.period;
  if (!(o.focal > 0.0)) throw ArgumentError("--focal must be positive");
  const auto samples = synth::make_dataset(static_cast<std::size_t>(o.count), o.focal, g.seed, cfg, "synth_");
  fs::create_directories(o.out);
  Manifest m;
  m.base_dir = o.out;
  std::size_t clamped = 0;
  for (const auto& s : samples) {
    auto written = write_sample(s, o.out, o.depth_scale);
    clamped += written.clamped_pixels;
    m.records.push_back(std::move(written.record));
  }
  write_manifest(m, fs::path(o.out) / "manifest.jsonl");
  if (clamped > 0) spdlog::warn("{} depth values clamped to the 16-bit range", clamped);
  out << "wrote " << m.records.size() << " samples to " << (fs::path(o.out) / "manifest.jsonl").string() << '\n';
  return kOk;
}

int cmd_augment(const GlobalOptions& g, const AugmentCliOptions& o, std::ostream& out, std::ostream& err) {
  const auto [fc, dr] = parse_pair(o.ratio, "--ratio");
  AugmentOptions opts;
  const double total = fc + dr;
  if (!(fc >= 0.0 && dr >= 0.0 && total > 0.0)) throw ArgumentError("--ratio parts must be non-negative");
  opts.policy.focal_change_fraction = fc / total;
  opts.policy.depth_rescale_fraction = dr / total;
  opts.policy.seed = g.seed;
  opts.k_range = {o.k_min, o.k_max};
  opts.keep_original = o.keep_original;
  opts.rgb_interp = o.bilinear_rgb ? RgbInterpolation::kBilinear : RgbInterpolation::kNearest;
  opts.jobs = g.jobs;
  const Manifest m = read_manifest(o.manifest);
  const AugmentReport r = augment_dataset(m, opts, o.out);
  if (r.clamped_pixels > 0) spdlog::warn("{} depth values clamped to the 16-bit range", r.clamped_pixels);
  out << "wrote " << r.manifest.records.size() << " records (" << r.focal_change_count << " focal_change, "
      << r.depth_rescale_count << " depth_rescale) to " << (fs::path(o.out) / "manifest.jsonl").string() << '\n';
  if (!r.failures.empty()) {
    err << r.failures.size() << " sample(s) failed:\n";
    for (const auto& f : r.failures) err << "  " << f.source_id << ": " << f.message << '\n';
    return kDataError;
  }
  return kOk;
}

int cmd_eval(const GlobalOptions& g, const EvalCliOptions& o, std::ostream& out) {
  const auto [lo, hi] = parse_pair(o.cap, "--cap");
  EvalOptions opts;
  opts.cap = {lo, hi};
  opts.cap.validate();
  const Manifest pred_m = read_manifest(o.pred_manifest);
  const Manifest gt_m = read_manifest(o.gt_manifest);
  std::map<std::string, std::size_t> pred_index;
  for (std::size_t i = 0; i < pred_m.records.size(); ++i) pred_index[pred_m.records[i].source_id] = i;
  for (const auto& r : gt_m.records) {
    if (!pred_index.contains(r.source_id)) throw ManifestError("no prediction for source_id '" + r.source_id + "'");
  }
  if (gt_m.records.empty()) throw EmptyEvaluationError("ground-truth manifest is empty");

  std::vector<MetricsReport> reports(gt_m.records.size());
  parallel_for(reports.size(), g.jobs, [&](std::size_t i) {
    const auto& gr = gt_m.records[i];
    const RgbdSample gt = load_sample(gr, gt_m.base_dir);
    const RgbdSample pred = load_sample(pred_m.records[pred_index.at(gr.source_id)], pred_m.base_dir);
    if (!pred.depth.same_shape(gt.depth)) {
      throw DimensionError("prediction and ground truth differ in size for '" + gr.source_id + "'");
    }
    reports[i] = evaluate(pred.depth, gt.depth, gt.valid_mask, opts);
  });
  const Aggregation mode = o.per_image ? Aggregation::kPerImage : Aggregation::kPooled;
  const MetricsReport all = aggregate(reports, mode, opts.silog);

  ordered_json j;
  j["schema_version"] = kReportSchemaVersion;
  j["aggregation"] = aggregation_name(mode);
  j["count"] = reports.size();
  j["metrics"] = to_json(all);
  ordered_json per = ordered_json::array();
  std::string csv = csv_header() + "\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    ordered_json e;
    e["source_id"] = gt_m.records[i].source_id;
    e["metrics"] = to_json(reports[i]);
    per.push_back(std::move(e));
    csv += to_csv_row(gt_m.records[i].source_id, reports[i]) + "\n";
  }
  j["per_image"] = std::move(per);
  csv += to_csv_row("all", all) + "\n";
  const fs::path json_path = o.out + ".json";
  const fs::path csv_path = o.out + ".csv";
  if (json_path.has_parent_path()) fs::create_directories(json_path.parent_path());
  write_text(json_path, j.dump(2) + "\n");
  write_text(csv_path, csv);
  out << csv_header() << '\n' << to_csv_row("all", all) << '\n';
  return kOk;
}

int cmd_reconstruct(const GlobalOptions& g, const ReconstructOptions& o, std::ostream& out) {
  if (o.override_fx && !(*o.override_fx > 0.0)) throw ArgumentError("--override-fx must be positive");
  const Manifest m = read_manifest(o.manifest);
  fs::create_directories(o.out_dir);
  std::vector<std::string> lines(m.records.size());
  parallel_for(m.records.size(), g.jobs, [&](std::size_t i) {
    const auto& rec = m.records[i];
    const RgbdSample s = load_sample(rec, m.base_dir);
    CameraIntrinsics used = s.intrinsics;
    if (o.override_fx) {
      used.fy = s.intrinsics.fy * (*o.override_fx / s.intrinsics.fx);
      used.fx = *o.override_fx;
    }
    const auto points = backproject(s.depth, s.valid_mask, used);
    std::vector<Rgb8> colors;
    colors.reserve(points.size());
    for (int v = 0; v < s.height(); ++v) {
      for (int u = 0; u < s.width(); ++u) {
        if (s.valid_mask(v, u) != 0.0) colors.push_back({s.rgb(v, u, 0), s.rgb(v, u, 1), s.rgb(v, u, 2)});
      }
    }
    const fs::path ply = fs::path(o.out_dir) / (sanitize_id(rec.source_id) + ".ply");
    export_ply(points, std::span<const Rgb8>(colors), ply);
    std::string line = rec.source_id + " points=" + std::to_string(points.size());
    if (points.empty()) {
      spdlog::warn("'{}' has no valid depth; wrote an empty point cloud", rec.source_id);
      line += " deformation_ratio=n/a";
    } else {
      const auto reference = backproject(s.depth, s.valid_mask, s.intrinsics);
      char buf[32];
      auto res = std::to_chars(buf, buf + sizeof buf, deformation_ratio(reference, points), std::chars_format::fixed, 6);
      line += " deformation_ratio=" + std::string(buf, res.ptr);
    }
    lines[i] = line + " -> " + ply.string();
  });
  for (const auto& l : lines) out << l << '\n';
  return kOk;
}

int cmd_toy_train(const GlobalOptions& g, const TrainCliOptions& o, std::ostream& out) {
  net::ModelConfig model;
  model.ablate_focal = o.ablate_focal;
  model.focal_norm = o.focal_norm == "width" ? net::FocalNormalization::kByWidth : net::FocalNormalization::kNone;
  model.head.n_bins = o.bins;
  net::TrainerConfig tc;
  tc.base_lr = o.base_lr;
  tc.backbone_lr_ratio = o.backbone_ratio;
  tc.weight_decay = o.weight_decay;
  tc.epochs = o.epochs;
  tc.batch_size = o.batch_size;
  tc.seed = g.seed;
  tc.validate();
  LossConfig lc;
  lc.silog_lambda = o.silog_lambda;
  lc.validate();

  const Manifest train_m = read_manifest(o.manifest);
  if (train_m.records.empty()) throw ArgumentError("training manifest is empty");
  const auto train_samples = load_all(train_m, g.jobs);
  std::vector<net::TrainExample> examples;
  examples.reserve(train_samples.size());
  for (const auto& s : train_samples) examples.push_back(net::make_example(s, model));

  const long steps_per_epoch = static_cast<long>((examples.size() + tc.batch_size - 1) / tc.batch_size);
  auto result = net::train(examples, model, tc, lc, net::init_parameters(model, g.seed), [&](long step, double loss) {
    if ((step + 1) % steps_per_epoch == 0) {
      spdlog::info("epoch {} done, step {}, batch loss {:.5f}", (step + 1) / steps_per_epoch, step, loss);
    } else {
      spdlog::debug("step {} loss {:.6f}", step, loss);
    }
  });

  fs::create_directories(o.out);
  net::Checkpoint ckpt;
  ckpt.model = model;
  ckpt.params = result.params;
  ckpt.extra["trainer"] = net::trainer_config_to_json(tc);
  ckpt.extra["silog_lambda"] = lc.silog_lambda;
  ckpt.extra["silog_alpha"] = lc.silog_alpha;
  ckpt.extra["train_manifest"] = o.manifest;
  net::save_checkpoint(ckpt, fs::path(o.out) / "checkpoint.json");
  net::write_loss_curve(result.losses, fs::path(o.out) / "loss_curve.csv");

  const Manifest eval_m = o.test_manifest.empty() ? train_m : read_manifest(o.test_manifest);
  const auto eval_samples = o.test_manifest.empty() ? train_samples : load_all(eval_m, g.jobs);
  std::vector<MetricsReport> reports(eval_samples.size());
  EvalOptions eo;
  eo.cap = {model.head.d_min, model.head.d_max};
  eo.silog = lc;
  parallel_for(reports.size(), g.jobs, [&](std::size_t i) {
    const auto& s = eval_samples[i];
    reports[i] = evaluate(net::predict(result.params, model, s.rgb, s.intrinsics.fx), s.depth, s.valid_mask, eo);
  });
  const MetricsReport all = aggregate(reports, Aggregation::kPooled, lc);
  ordered_json j;
  j["schema_version"] = kReportSchemaVersion;
  j["aggregation"] = aggregation_name(Aggregation::kPooled);
  j["count"] = reports.size();
  j["manifest"] = o.test_manifest.empty() ? o.manifest : o.test_manifest;
  j["metrics"] = to_json(all);
  write_text(fs::path(o.out) / "eval.json", j.dump(2) + "\n");
  write_text(fs::path(o.out) / "eval.csv", csv_header() + "\n" + to_csv_row("all", all) + "\n");
  out << "steps " << result.losses.size() << ", final batch loss " << (result.losses.empty() ? 0.0 : result.losses.back())
      << '\n'
      << csv_header() << '\n'
      << to_csv_row("all", all) << '\n';
  return kOk;
}

int cmd_gradcheck(const GlobalOptions& g, const GradcheckCliOptions& o, std::ostream& out) {
  constexpr double kTolerance = 1e-4;
  bool ok = true;
  for (int i = 0; i < o.seeds; ++i) {
    const std::uint64_t seed = g.seed + static_cast<std::uint64_t>(i);
    const auto report = net::gradcheck_model(seed);
    out << "seed " << seed << '\n';
    for (const auto& e : report.entries) {
      out << "  " << e.name << " n=" << e.checked << " max_rel=" << e.max_rel_error << " max_abs=" << e.max_abs_error
          << '\n';
    }
    ok = ok && report.passed(kTolerance);
  }
  net::ModelGradcheckConfig faulty;
  faulty.options.fault = std::make_pair(ad::Primitive::kChannelMix, 0.05);
  const double mutant = net::gradcheck_model(g.seed, faulty).max_rel_error();
  const bool detected = !(mutant < kTolerance);
  out << "fault injection (channel_mix adjoint x1.05): max_rel=" << mutant << (detected ? " detected" : " MISSED")
      << '\n';
  ok = ok && detected;
  out << (ok ? "PASS" : "FAIL") << '\n';
  return ok ? kOk : kNumericalError;
}

int cmd_experiment(const GlobalOptions&, const ExperimentCliOptions& o, std::ostream& out) {
  experiment::ExperimentConfig cfg;
  cfg.seeds = o.seeds;
  cfg.train_scenes = o.train_scenes;
  cfg.test_scenes = o.test_scenes;
  const auto r = experiment::run(cfg, [](const std::string& msg) { spdlog::info("{}", msg); });
  std::string csv = "seed,arm";
  for (double f : r.factors) csv += ",rmse_f" + std::to_string(f).substr(0, 4);
  csv += "\n";
  for (const auto& a : r.arms) {
    csv += std::to_string(a.seed) + (a.with_focal ? ",with_focal" : ",ablated");
    for (double v : a.rmse) csv += "," + std::to_string(v);
    csv += "\n";
  }
  out << csv;
  for (std::size_t i = 0; i < r.factors.size(); ++i) {
    out << "f = " << r.factors[i] << " f0: with " << r.mean_rmse(true, i) << ", ablated " << r.mean_rmse(false, i)
        << ", improvement " << 100.0 * r.relative_improvement(i) << "%\n";
  }
  if (!o.csv.empty()) write_text(o.csv, csv);
  return kOk;
}

}  // namespace focalkit::cli
