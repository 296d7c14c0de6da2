#include "focalkit/experiment.hpp"

#include "focalkit/error.hpp"
#include "focalkit/numerics/random.hpp"

namespace focalkit::experiment {

ExperimentConfig::ExperimentConfig() {
  model.focal_norm = net::FocalNormalization::kByWidth;
  trainer.base_lr = 1e-2;
  trainer.epochs = 5;
}

std::vector<RgbdSample> training_set(const ExperimentConfig& cfg, std::uint64_t seed) {
  auto base = synth::make_dataset(cfg.train_scenes, cfg.f0, mix_seed(seed, 11), cfg.scene, "train_");
  MixPolicy policy = cfg.policy;
  policy.seed = mix_seed(seed, 12);
  const auto recipes = plan_recipes(base.size(), policy, cfg.k_range);
  std::vector<RgbdSample> out;
  out.reserve(base.size() * 2);
  for (std::size_t i = 0; i < base.size(); ++i) {
    out.push_back(apply_recipe(base[i], recipes[i]));
    if (cfg.keep_original) out.push_back(std::move(base[i]));
  }
  return out;
}

std::vector<RgbdSample> test_set(const ExperimentConfig& cfg, std::uint64_t seed, double factor) {
  return synth::make_dataset(cfg.test_scenes, factor * cfg.f0, mix_seed(seed, 21), cfg.scene, "test_");
}

double pooled_rmse(const net::ParamMap& params, const net::ModelConfig& model, const std::vector<RgbdSample>& samples) {
  std::vector<MetricsReport> reports;
  EvalOptions opts;
  opts.cap = {model.head.d_min, model.head.d_max};
  for (const auto& s : samples) {
    reports.push_back(evaluate(net::predict(params, model, s.rgb, s.intrinsics.fx), s.depth, s.valid_mask, opts));
  }
  return aggregate(reports, Aggregation::kPooled).rmse;
}

double mean_prediction(const net::ParamMap& params, const net::ModelConfig& model,
                       const std::vector<RgbdSample>& samples, double factor) {
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& s : samples) {
    const Plane2D p = net::predict(params, model, s.rgb, factor * s.intrinsics.fx);
    for (double v : p.data()) total += v;
    n += p.size();
  }
  return n == 0 ? 0.0 : total / static_cast<double>(n);
}

ArmResult run_arm(const ExperimentConfig& cfg, std::uint64_t seed, bool with_focal,
                  const std::vector<RgbdSample>& train, const std::vector<std::vector<RgbdSample>>& tests) {
  net::ModelConfig model = cfg.model;
  model.ablate_focal = !with_focal;
  net::TrainerConfig tc = cfg.trainer;
  tc.seed = mix_seed(seed, 31);
  std::vector<net::TrainExample> examples;
  examples.reserve(train.size());
  for (const auto& s : train) examples.push_back(net::make_example(s, model));
  // Both arms start from the same draw; the ablated arm only zeroes M.
  net::ModelConfig init_cfg = model;
  init_cfg.ablate_focal = false;
  net::ParamMap init = net::init_parameters(init_cfg, mix_seed(seed, 32));
  if (!with_focal) init["M"] = Plane2D(net::kFocalRows, net::kFocalCols);

  ArmResult out;
  out.with_focal = with_focal;
  out.seed = seed;
  auto trained = net::train(examples, model, tc, cfg.loss, std::move(init));
  out.params = std::move(trained.params);
  out.losses = std::move(trained.losses);
  for (const auto& t : tests) out.rmse.push_back(pooled_rmse(out.params, model, t));
  return out;
}

double ExperimentResult::mean_rmse(bool with_focal, std::size_t i) const {
  double total = 0.0;
  int n = 0;
  for (const auto& a : arms) {
    if (a.with_focal != with_focal) continue;
    total += a.rmse.at(i);
    ++n;
  }
  if (n == 0) throw StateError("no runs for the requested arm");
  return total / n;
}

double ExperimentResult::relative_improvement(std::size_t i) const {
  return 1.0 - mean_rmse(true, i) / mean_rmse(false, i);
}

ExperimentResult run(const ExperimentConfig& cfg, const Progress& progress) {
  if (cfg.seeds.empty()) throw ArgumentError("experiment needs at least one seed");
  ExperimentResult result;
  result.factors = cfg.test_factors;
  for (std::uint64_t seed : cfg.seeds) {
    const auto train = training_set(cfg, seed);
    std::vector<std::vector<RgbdSample>> tests;
    for (double f : cfg.test_factors) tests.push_back(test_set(cfg, seed, f));
    for (bool with_focal : {true, false}) {
      if (progress) {
        progress("seed " + std::to_string(seed) + (with_focal ? ": with focal" : ": ablated"));
      }
      result.arms.push_back(run_arm(cfg, seed, with_focal, train, tests));
    }
  }
  return result;
}

}  // namespace focalkit::experiment
