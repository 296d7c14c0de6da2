#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace focalkit::cli {

struct GlobalOptions {
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string log_level = "info";
};

struct SynthOptions {
  std::string out;
  int count = 20;
  double focal = 52.0;
  int height = 48;
  int width = 64;
  double period = 0.5;
  double depth_scale = 1000.0;
};

struct AugmentCliOptions {
  std::string manifest;
  std::string out;
  std::string ratio = "0.6:0.4";
  double k_min = 0.7;
  double k_max = 1.0;
  bool keep_original = false;
  bool bilinear_rgb = false;
};

struct EvalCliOptions {
  std::string pred_manifest;
  std::string gt_manifest;
  std::string cap = "0.001:10";
  bool per_image = false;
  std::string out = "eval";
};

struct ReconstructOptions {
  std::string manifest;
  std::string out_dir;
  std::optional<double> override_fx;
};

struct TrainCliOptions {
  std::string manifest;
  std::string test_manifest;
  std::string out;
  int epochs = 5;
  double base_lr = 1.6e-4;
  double backbone_ratio = 0.02;
  double weight_decay = 0.01;
  int batch_size = 4;
  bool ablate_focal = false;
  std::string focal_norm = "none";
  int bins = 64;
  double silog_lambda = 0.85;
};

struct GradcheckCliOptions {
  int seeds = 1;
};

struct ExperimentCliOptions {
  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::size_t train_scenes = 1000;
  std::size_t test_scenes = 40;
  std::string csv;
};

nlohmann::ordered_json to_json(const GlobalOptions& o);
nlohmann::ordered_json to_json(const SynthOptions& o);
nlohmann::ordered_json to_json(const AugmentCliOptions& o);
nlohmann::ordered_json to_json(const EvalCliOptions& o);
nlohmann::ordered_json to_json(const ReconstructOptions& o);
nlohmann::ordered_json to_json(const TrainCliOptions& o);
nlohmann::ordered_json to_json(const GradcheckCliOptions& o);
nlohmann::ordered_json to_json(const ExperimentCliOptions& o);

int cmd_synth(const GlobalOptions& g, const SynthOptions& o, std::ostream& out);
int cmd_augment(const GlobalOptions& g, const AugmentCliOptions& o, std::ostream& out, std::ostream& err);
int cmd_eval(const GlobalOptions& g, const EvalCliOptions& o, std::ostream& out);
int cmd_reconstruct(const GlobalOptions& g, const ReconstructOptions& o, std::ostream& out);
int cmd_toy_train(const GlobalOptions& g, const TrainCliOptions& o, std::ostream& out);
int cmd_gradcheck(const GlobalOptions& g, const GradcheckCliOptions& o, std::ostream& out);
int cmd_experiment(const GlobalOptions& g, const ExperimentCliOptions& o, std::ostream& out);

// "a:b" into two reals; throws ArgumentError.
std::pair<double, double> parse_pair(const std::string& text, const char* what);

}  // namespace focalkit::cli
