#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "focalkit/dataset_io.hpp"
#include "focalkit/loss.hpp"
#include "focalkit/numerics/plane.hpp"
#include "focalkit/numerics/tape.hpp"

namespace focalkit::net {

inline constexpr int kFocalRows = 12;
inline constexpr int kFocalCols = 16;
inline constexpr int kLevels = 5;  // scales 1/2 ... 1/32
inline constexpr int kBackboneInputs = 4;  // r, g, b, log texture energy

// Named parameter tensors. Names:
//   M                              focal encoding matrix (12 x 16)
//   head.weight / head.bias        per-pixel bin logit projection
//   head.bin_logits                unnormalised bin widths
//   backbone.level{j}.weight/.bias per-level channel mixing, j = 1..5
//   backbone.relative.weight/.bias relative-depth projection
using ParamMap = std::map<std::string, Plane2D>;
using VarMap = std::map<std::string, ad::Var>;

// A learnable 12x16 grid; F = f * M is the focal feature.
struct FocalEncodingMatrix {
  Plane2D values{kFocalRows, kFocalCols};
  std::uint64_t init_seed = 0;

  static FocalEncodingMatrix random(std::uint64_t seed, double stddev);
  static FocalEncodingMatrix zeros();
};

// Five feature stacks at 1/2 ... 1/32 of the base resolution.
struct ScalePyramid {
  std::vector<FeatureStack> levels;
  int base_height = 0;
  int base_width = 0;
};

// Level j (1..5) dimensions: round(H / 2^j) x round(W / 2^j), at least 1x1.
std::pair<int, int> level_dims(int height, int width, int level);

enum class FocalNormalization { kNone, kByWidth };

struct BinHeadConfig {
  int n_bins = 64;
  double d_min = 1e-3;
  double d_max = 10.0;

  void validate() const;
};

struct ModelConfig {
  std::array<int, kLevels> level_channels{4, 4, 4, 4, 4};
  BinHeadConfig head;
  FocalNormalization focal_norm = FocalNormalization::kNone;
  // M is held at zero and excluded from training; output is then independent of f.
  bool ablate_focal = false;
  double focal_init_std = 0.1;
  double head_init_std = 0.01;
  double backbone_init_std = 0.5;

  // Channels entering the bin head: sum_j (C_j + 1) plus the relative-depth channel.
  int head_input_channels() const;
};

// Freshly initialised parameters, fully determined by the seed.
ParamMap init_parameters(const ModelConfig& cfg, std::uint64_t seed);

bool is_backbone_parameter(const std::string& name);

// Focal value fed to the encoding, after optional normalisation.
double effective_focal(double fx, int image_width, FocalNormalization norm);

// ---- value-level operations ------------------------------------------------

// F = f * M bilinearly resized to every level of an H x W input; each level
// is a single channel. Throws ArgumentError for f <= 0.
ScalePyramid make_focal_pyramid(double f, const FocalEncodingMatrix& m, int height, int width);
// Same, without the f > 0 precondition.
ScalePyramid make_focal_pyramid_unchecked(double f, const FocalEncodingMatrix& m, int height, int width);

// Per-level channel concatenation, feature channels first.
ScalePyramid fuse(const ScalePyramid& features, const ScalePyramid& focal);

// Backbone inputs at full resolution and at every pyramid level. Each stack
// holds area-pooled r, g, b and log(eps + sqrt(a_x^2 + a_y^2)), where a_x, a_y
// are the area-pooled absolute luminance differences along each axis.
struct BackboneInputs {
  FeatureStack full;
  std::array<FeatureStack, kLevels> levels;

  int height() const noexcept { return full.height(); }
  int width() const noexcept { return full.width(); }
};
BackboneInputs backbone_inputs(const FeatureStack& rgb);
FeatureStack rgb_stack(const RgbImage& image);

struct BackboneOutput {
  Plane2D relative_depth;  // in [0, 1], input resolution
  ScalePyramid features;
};

// Strided average-pool pyramid with a per-level linear channel mix.
BackboneOutput toy_backbone(const FeatureStack& rgb, const ParamMap& params, const ModelConfig& cfg);

// Softmax over bins at level-1 resolution, depth = sum_i p_i c_i, resized to
// the input resolution.
Plane2D predict_depth(const ScalePyramid& fused, const Plane2D& relative_depth, const ParamMap& params,
                      const BinHeadConfig& head, int out_height, int out_width);

// Full forward pass.
Plane2D predict(const ParamMap& params, const ModelConfig& cfg, const RgbImage& rgb, double fx);

// Bin centers implied by the parameters.
std::vector<double> bin_centers(const ParamMap& params, const BinHeadConfig& head);

// ---- tape-level building blocks ---------------------------------------------

// Registers parameters on the tape; names for which `trainable` is false are
// recorded as constants.
VarMap bind_parameters(ad::Tape& tape, const ParamMap& params, const std::function<bool(const std::string&)>& trainable);

std::array<ad::Var, kLevels> focal_pyramid(ad::Tape& tape, ad::Var m, double f, int height, int width);

struct BackboneVars {
  ad::Var relative_depth;
  std::array<ad::Var, kLevels> levels;
};
BackboneVars backbone_forward(ad::Tape& tape, const VarMap& vars, const BackboneInputs& inputs, const ModelConfig& cfg);

struct HeadVars {
  ad::Var depth;  // out_height x out_width
  ad::Var probs;  // n_bins channels at level-1 resolution
  ad::Var centers;
};
HeadVars head_forward(ad::Tape& tape, const VarMap& vars, const std::array<ad::Var, kLevels>& fused,
                      ad::Var relative_depth, const BinHeadConfig& head, int out_height, int out_width);

struct ForwardVars {
  BackboneVars backbone;
  std::array<ad::Var, kLevels> focal;
  std::array<ad::Var, kLevels> fused;
  HeadVars head;
};
ForwardVars model_forward(ad::Tape& tape, const VarMap& vars, const ModelConfig& cfg, const BackboneInputs& inputs,
                          double focal_value);

// SILog built from tape primitives (log, mul, masked mean, sqrt).
ad::Var silog(ad::Tape& tape, ad::Var pred, const Plane2D& gt, const Plane2D& mask, const LossConfig& cfg);

}  // namespace focalkit::net
