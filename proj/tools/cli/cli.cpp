#include "cli/cli.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "cli/commands.hpp"
#include "focalkit/error.hpp"

namespace focalkit::cli {

namespace {

void configure_logging(const std::string& level) {
  auto logger = spdlog::get("focalkit");
  if (!logger) {
    logger = spdlog::stderr_color_mt("focalkit");
    logger->set_pattern("[%l] %v");
  }
  spdlog::set_default_logger(logger);
  const auto lvl = spdlog::level::from_str(level);
  if (lvl == spdlog::level::off && level != "off") throw ArgumentError("unknown log level '" + level + "'");
  logger->set_level(lvl);
}

void log_config(const char* command, const GlobalOptions& g, const nlohmann::ordered_json& sub) {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["global"] = to_json(g);
  j["options"] = sub;
  spdlog::info("resolved configuration: {}", j.dump());
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"focalkit: focal-aware depth toolkit"};
  app.require_subcommand(1);
  GlobalOptions g;
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--jobs", g.jobs, "Worker threads for per-sample stages")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--log-level", g.log_level, "trace, debug, info, warn, error, off")->capture_default_str();

  SynthOptions so;
  auto* synth = app.add_subcommand("synth", "Render a synthetic textured-plane RGB-D dataset");
  synth->add_option("--out", so.out, "Output directory")->required();
  synth->add_option("--count", so.count, "Number of scenes")->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--focal", so.focal, "Focal length in pixels")->capture_default_str();
  synth->add_option("--height", so.height)->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--width", so.width)->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--period", so.period, "Texture period in meters")->capture_default_str();
  synth->add_option("--depth-scale", so.depth_scale, "Raw depth units per meter")->capture_default_str();

  AugmentCliOptions ao;
  auto* augment = app.add_subcommand("augment", "Focal-change / depth-rescale augmentation of a dataset");
  augment->add_option("--manifest", ao.manifest, "Input manifest (JSON Lines)")->required();
  augment->add_option("--out", ao.out, "Output directory")->required();
  augment->add_option("--ratio", ao.ratio, "FocalChange:DepthRescale mix")->capture_default_str();
  augment->add_option("--k-min", ao.k_min)->capture_default_str();
  augment->add_option("--k-max", ao.k_max)->capture_default_str();
  augment->add_flag("--keep-original", ao.keep_original, "Also write the unmodified records");
  augment->add_flag("--bilinear-rgb", ao.bilinear_rgb, "Bilinear instead of nearest resampling for rgb");

  EvalCliOptions eo;
  auto* eval = app.add_subcommand("eval", "Evaluate predicted depth against ground truth");
  eval->add_option("--pred-manifest", eo.pred_manifest)->required();
  eval->add_option("--gt-manifest", eo.gt_manifest)->required();
  eval->add_option("--cap", eo.cap, "Depth cap d_min:d_max in meters")->capture_default_str();
  auto* per_image = eval->add_flag("--per-image", eo.per_image, "Average per-image metrics");
  bool pooled = false;
  eval->add_flag("--pooled", pooled, "Pool pixels across images (default)")->excludes(per_image);
  eval->add_option("--out", eo.out, "Report path prefix (.json and .csv are appended)")->capture_default_str();

  ReconstructOptions ro;
  auto* recon = app.add_subcommand("reconstruct", "Back-project depth maps to PLY point clouds");
  recon->add_option("--manifest", ro.manifest)->required();
  recon->add_option("--out-dir", ro.out_dir)->required();
  recon->add_option("--override-fx", ro.override_fx, "Back-project with this fx (fy scaled alike)");

  TrainCliOptions to;
  auto* train = app.add_subcommand("toy-train", "Train the toy focal-conditioned depth model");
  train->add_option("--manifest", to.manifest, "Training manifest")->required();
  train->add_option("--test-manifest", to.test_manifest, "Evaluation manifest (defaults to the training one)");
  train->add_option("--out", to.out, "Output directory")->required();
  train->add_option("--epochs", to.epochs)->check(CLI::NonNegativeNumber)->capture_default_str();
  train->add_option("--base-lr", to.base_lr)->capture_default_str();
  train->add_option("--backbone-ratio", to.backbone_ratio)->capture_default_str();
  train->add_option("--weight-decay", to.weight_decay)->capture_default_str();
  train->add_option("--batch-size", to.batch_size)->check(CLI::PositiveNumber)->capture_default_str();
  auto* ablate = train->add_flag("--ablate-focal", to.ablate_focal, "Hold M at zero (no focal input)");
  bool with_focal = false;
  train->add_flag("--with-focal", with_focal, "Learn M (default)")->excludes(ablate);
  train->add_option("--focal-norm", to.focal_norm, "none or width")
      ->check(CLI::IsMember({"none", "width"}))
      ->capture_default_str();
  train->add_option("--bins", to.bins)->check(CLI::Range(2, 4096))->capture_default_str();
  train->add_option("--silog-lambda", to.silog_lambda)->capture_default_str();

  GradcheckCliOptions go;
  auto* grad = app.add_subcommand("gradcheck", "Finite-difference check of every model gradient");
  grad->add_option("--seeds", go.seeds, "Number of consecutive seeds starting at --seed")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  ExperimentCliOptions xo;
  auto* exper = app.add_subcommand("experiment", "Unseen-focal generalisation experiment on synthetic scenes");
  exper->add_option("--seeds", xo.seeds, "Seeds, one run pair each")->delimiter(',');
  exper->add_option("--train-scenes", xo.train_scenes)->check(CLI::PositiveNumber)->capture_default_str();
  exper->add_option("--test-scenes", xo.test_scenes)->check(CLI::PositiveNumber)->capture_default_str();
  exper->add_option("--csv", xo.csv, "Write per-run RMSE to this CSV");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsage;
  }

  try {
    configure_logging(g.log_level);
    if (*synth) {
      log_config("synth", g, to_json(so));
      return cmd_synth(g, so, out);
    }
    if (*augment) {
      log_config("augment", g, to_json(ao));
      return cmd_augment(g, ao, out, err);
    }
    if (*eval) {
      log_config("eval", g, to_json(eo));
      return cmd_eval(g, eo, out);
    }
    if (*recon) {
      log_config("reconstruct", g, to_json(ro));
      return cmd_reconstruct(g, ro, out);
    }
    if (*train) {
      log_config("toy-train", g, to_json(to));
      return cmd_toy_train(g, to, out);
    }
    if (*grad) {
      log_config("gradcheck", g, to_json(go));
      return cmd_gradcheck(g, go, out);
    }
    if (*exper) {
      log_config("experiment", g, to_json(xo));
      return cmd_experiment(g, xo, out);
    }
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumericalError;
  } catch (const ArgumentError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsage;
}

}  // namespace focalkit::cli
