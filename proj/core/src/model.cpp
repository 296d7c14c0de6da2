#include "focalkit/focal_net/model.hpp"

#include <cmath>
#include <string>

#include "focalkit/error.hpp"
#include "focalkit/numerics/random.hpp"
#include "focalkit/numerics/resample.hpp"

namespace focalkit::net {

namespace {

Plane2D random_plane(Rng& rng, int h, int w, double stddev) {
  Plane2D p(h, w);
  for (double& v : p.data()) v = rng.normal(0.0, stddev);
  return p;
}

std::string level_name(int j, const char* what) { return "backbone.level" + std::to_string(j) + "." + what; }

}  // namespace

FocalEncodingMatrix FocalEncodingMatrix::random(std::uint64_t seed, double stddev) {
  Rng rng(seed);
  return {random_plane(rng, kFocalRows, kFocalCols, stddev), seed};
}

FocalEncodingMatrix FocalEncodingMatrix::zeros() { return {}; }

std::pair<int, int> level_dims(int height, int width, int level) {
  if (level < 1 || level > kLevels) throw ArgumentError("pyramid level must be 1..5");
  const double s = std::ldexp(1.0, level);
  const int h = std::max(1, static_cast<int>(std::lround(height / s)));
  const int w = std::max(1, static_cast<int>(std::lround(width / s)));
  return {h, w};
}

void BinHeadConfig::validate() const {
  if (n_bins < 2) throw ArgumentError("bin head needs at least 2 bins");
  if (!(d_min > 0.0 && d_min < d_max)) throw ArgumentError("bin head needs 0 < d_min < d_max");
}

int ModelConfig::head_input_channels() const {
  int total = 1;
  for (int c : level_channels) total += c + 1;
  return total;
}

ParamMap init_parameters(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.head.validate();
  ParamMap p;
  p["M"] = cfg.ablate_focal ? Plane2D(kFocalRows, kFocalCols)
                            : FocalEncodingMatrix::random(mix_seed(seed, 1), cfg.focal_init_std).values;
  Rng rng(mix_seed(seed, 2));
  for (int j = 1; j <= kLevels; ++j) {
    const int c = cfg.level_channels[j - 1];
    if (c < 1) throw ArgumentError("every pyramid level needs at least one feature channel");
    p[level_name(j, "weight")] = random_plane(rng, c, kBackboneInputs, cfg.backbone_init_std);
    p[level_name(j, "bias")] = Plane2D(1, c);
  }
  p["backbone.relative.weight"] = random_plane(rng, 1, kBackboneInputs, cfg.backbone_init_std);
  p["backbone.relative.bias"] = Plane2D(1, 1);
  Rng head_rng(mix_seed(seed, 3));
  p["head.weight"] = random_plane(head_rng, cfg.head.n_bins, cfg.head_input_channels(), cfg.head_init_std);
  p["head.bias"] = Plane2D(1, cfg.head.n_bins);
  p["head.bin_logits"] = Plane2D(1, cfg.head.n_bins);
  return p;
}

bool is_backbone_parameter(const std::string& name) { return name.rfind("backbone.", 0) == 0; }

double effective_focal(double fx, int image_width, FocalNormalization norm) {
  return norm == FocalNormalization::kByWidth ? fx / image_width : fx;
}

VarMap bind_parameters(ad::Tape& tape, const ParamMap& params, const std::function<bool(const std::string&)>& trainable) {
  VarMap vars;
  for (const auto& [name, value] : params) {
    vars[name] = trainable(name) ? tape.parameter(name, value) : tape.constant(value);
  }
  return vars;
}

namespace {

ad::Var lookup(const VarMap& vars, const std::string& name) {
  auto it = vars.find(name);
  if (it == vars.end()) throw ArgumentError("missing parameter '" + name + "'");
  return it->second;
}

}  // namespace

std::array<ad::Var, kLevels> focal_pyramid(ad::Tape& tape, ad::Var m, double f, int height, int width) {
  const auto& mv = tape.value(m);
  if (mv.channels() != 1 || mv.height() != kFocalRows || mv.width() != kFocalCols) {
    throw DimensionError("focal encoding matrix must be 12x16");
  }
  // Resize M, then scale: each level is then exactly one multiplication by f.
  std::array<ad::Var, kLevels> out;
  for (int j = 1; j <= kLevels; ++j) {
    const auto [h, w] = level_dims(height, width, j);
    out[j - 1] = tape.scale(tape.resample_bilinear(m, h, w), f);
  }
  return out;
}

BackboneVars backbone_forward(ad::Tape& tape, const VarMap& vars, const BackboneInputs& inputs,
                              const ModelConfig& cfg) {
  if (inputs.full.channels() != kBackboneInputs) throw DimensionError("backbone expects 4 input channels");
  BackboneVars out;
  for (int j = 1; j <= kLevels; ++j) {
    const FeatureStack& level = inputs.levels[j - 1];
    const auto [lh, lw] = level_dims(inputs.height(), inputs.width(), j);
    if (level.channels() != kBackboneInputs || level.height() != lh || level.width() != lw) {
      throw DimensionError("backbone input level " + std::to_string(j) + " has the wrong shape");
    }
    const ad::Var wj = lookup(vars, level_name(j, "weight"));
    if (tape.value(wj)[0].height() != cfg.level_channels[j - 1]) {
      throw DimensionError("backbone level " + std::to_string(j) + " weight does not match the configured channels");
    }
    out.levels[j - 1] = tape.channel_mix(wj, tape.constant(level), lookup(vars, level_name(j, "bias")));
  }
  const ad::Var full = tape.constant(inputs.full);
  const ad::Var rel =
      tape.channel_mix(lookup(vars, "backbone.relative.weight"), full, lookup(vars, "backbone.relative.bias"));
  out.relative_depth = tape.sigmoid(rel);
  return out;
}

HeadVars head_forward(ad::Tape& tape, const VarMap& vars, const std::array<ad::Var, kLevels>& fused,
                      ad::Var relative_depth, const BinHeadConfig& head, int out_height, int out_width) {
  head.validate();
  const int wh = tape.value(fused[0]).height();
  const int ww = tape.value(fused[0]).width();
  ad::Var x = tape.resample_bilinear(fused[0], wh, ww);
  for (int j = 1; j < kLevels; ++j) x = tape.concat(x, tape.resample_bilinear(fused[j], wh, ww));
  x = tape.concat(x, tape.resample_bilinear(relative_depth, wh, ww));

  const ad::Var weight = lookup(vars, "head.weight");
  const auto& wv = tape.value(weight)[0];
  if (wv.width() != tape.value(x).channels() || wv.height() != head.n_bins) {
    throw DimensionError("bin head expects " + std::to_string(wv.width()) + " input channels and " +
                         std::to_string(wv.height()) + " bins, got " + std::to_string(tape.value(x).channels()) +
                         " channels and " + std::to_string(head.n_bins) + " bins");
  }
  HeadVars out;
  const ad::Var logits = tape.channel_mix(weight, x, lookup(vars, "head.bias"));
  out.probs = tape.softmax(logits);
  out.centers = tape.bin_centers(lookup(vars, "head.bin_logits"), head.d_min, head.d_max);
  const ad::Var depth = tape.channel_mix(out.centers, out.probs);
  out.depth = tape.resample_bilinear(depth, out_height, out_width);
  return out;
}

ForwardVars model_forward(ad::Tape& tape, const VarMap& vars, const ModelConfig& cfg, const BackboneInputs& inputs,
                          double focal_value) {
  ForwardVars out;
  out.backbone = backbone_forward(tape, vars, inputs, cfg);
  out.focal = focal_pyramid(tape, lookup(vars, "M"), focal_value, inputs.height(), inputs.width());
  for (int j = 0; j < kLevels; ++j) out.fused[j] = tape.concat(out.backbone.levels[j], out.focal[j]);
  out.head = head_forward(tape, vars, out.fused, out.backbone.relative_depth, cfg.head, inputs.height(),
                          inputs.width());
  return out;
}

ad::Var silog(ad::Tape& tape, ad::Var pred, const Plane2D& gt, const Plane2D& mask, const LossConfig& cfg) {
  cfg.validate();
  const auto& pv = tape.value(pred);
  if (pv.channels() != 1 || !pv[0].same_shape(gt) || !gt.same_shape(mask)) {
    throw DimensionError("silog: pred, gt and mask shapes differ");
  }
  Plane2D neg_log_gt(gt.height(), gt.width());
  bool any = false;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (mask.data()[i] == 0.0) continue;
    if (!(gt.data()[i] > 0.0)) throw ArgumentError("silog: non-positive ground truth under the mask");
    neg_log_gt.data()[i] = -std::log(gt.data()[i]);
    any = true;
  }
  if (!any) throw ArgumentError("silog: empty mask");
  const ad::Var g = tape.add(tape.log(pred), tape.constant(std::move(neg_log_gt)));
  // D = var(g) + (1 - lambda) mean(g)^2; the centered form avoids cancellation.
  const ad::Var m1 = tape.mean(g, mask);
  const ad::Var centered = tape.channel_mix(tape.scalar_constant(1.0), g, tape.scale(m1, -1.0));
  const ad::Var var = tape.mean(tape.mul(centered, centered), mask);
  const ad::Var d = tape.add(var, tape.scale(tape.mul(m1, m1), 1.0 - cfg.silog_lambda));
  return tape.scale(tape.sqrt(d, kSilogFloor), cfg.silog_alpha);
}

// ---- value-level wrappers -----------------------------------------------------

ScalePyramid make_focal_pyramid_unchecked(double f, const FocalEncodingMatrix& m, int height, int width) {
  ad::Tape tape;
  const auto levels = focal_pyramid(tape, tape.constant(m.values), f, height, width);
  ScalePyramid out;
  out.base_height = height;
  out.base_width = width;
  for (const auto& v : levels) out.levels.push_back(tape.value(v));
  return out;
}

ScalePyramid make_focal_pyramid(double f, const FocalEncodingMatrix& m, int height, int width) {
  if (!(f > 0.0) || !std::isfinite(f)) throw ArgumentError("focal length must be positive, got " + std::to_string(f));
  return make_focal_pyramid_unchecked(f, m, height, width);
}

ScalePyramid fuse(const ScalePyramid& features, const ScalePyramid& focal) {
  if (features.levels.size() != kLevels || focal.levels.size() != kLevels) {
    throw DimensionError("fuse: both pyramids need exactly 5 levels");
  }
  ScalePyramid out;
  out.base_height = features.base_height;
  out.base_width = features.base_width;
  for (int j = 0; j < kLevels; ++j) out.levels.push_back(concat_channels(features.levels[j], focal.levels[j]));
  return out;
}

FeatureStack rgb_stack(const RgbImage& image) {
  return FeatureStack(std::vector<Plane2D>{image.channel(0), image.channel(1), image.channel(2)});
}

namespace {

// One quantisation step of an 8-bit image.
constexpr double kTextureEps = 1.0 / 255.0;

FeatureStack pooled_inputs(const FeatureStack& rgb, const Plane2D& ax, const Plane2D& ay, int h, int w) {
  std::vector<Plane2D> planes;
  for (const auto& p : rgb.planes()) planes.push_back(resample_area(p, h, w));
  const Plane2D px = resample_area(ax, h, w);
  const Plane2D py = resample_area(ay, h, w);
  Plane2D energy(h, w);
  for (std::size_t i = 0; i < energy.size(); ++i) {
    energy.data()[i] = std::log(kTextureEps + std::hypot(px.data()[i], py.data()[i]));
  }
  planes.push_back(std::move(energy));
  return FeatureStack(std::move(planes));
}

}  // namespace

BackboneInputs backbone_inputs(const FeatureStack& rgb) {
  if (rgb.channels() != 3) throw DimensionError("backbone input must have 3 channels");
  const int h = rgb.height();
  const int w = rgb.width();
  Plane2D lum(h, w);
  for (std::size_t i = 0; i < lum.size(); ++i) {
    lum.data()[i] = (rgb[0].data()[i] + rgb[1].data()[i] + rgb[2].data()[i]) / 3.0;
  }
  // Forward differences; the last row/column repeats its neighbour.
  Plane2D ax(h, w);
  Plane2D ay(h, w);
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      const int u0 = (u + 1 < w) ? u : std::max(u - 1, 0);
      const int v0 = (v + 1 < h) ? v : std::max(v - 1, 0);
      ax(v, u) = w > 1 ? std::abs(lum(v, u0 + 1) - lum(v, u0)) : 0.0;
      ay(v, u) = h > 1 ? std::abs(lum(v0 + 1, u) - lum(v0, u)) : 0.0;
    }
  }
  BackboneInputs out;
  out.full = pooled_inputs(rgb, ax, ay, h, w);
  for (int j = 1; j <= kLevels; ++j) {
    const auto [lh, lw] = level_dims(h, w, j);
    out.levels[j - 1] = pooled_inputs(rgb, ax, ay, lh, lw);
  }
  return out;
}

BackboneOutput toy_backbone(const FeatureStack& rgb, const ParamMap& params, const ModelConfig& cfg) {
  ad::Tape tape;
  const VarMap vars = bind_parameters(tape, params, [](const std::string&) { return false; });
  const auto bv = backbone_forward(tape, vars, backbone_inputs(rgb), cfg);
  BackboneOutput out;
  out.relative_depth = tape.value(bv.relative_depth)[0];
  out.features.base_height = rgb.height();
  out.features.base_width = rgb.width();
  for (const auto& v : bv.levels) out.features.levels.push_back(tape.value(v));
  return out;
}

Plane2D predict_depth(const ScalePyramid& fused, const Plane2D& relative_depth, const ParamMap& params,
                      const BinHeadConfig& head, int out_height, int out_width) {
  if (fused.levels.size() != kLevels) throw DimensionError("predict_depth: fused pyramid needs 5 levels");
  ad::Tape tape;
  const VarMap vars = bind_parameters(tape, params, [](const std::string&) { return false; });
  std::array<ad::Var, kLevels> levels;
  for (int j = 0; j < kLevels; ++j) levels[j] = tape.constant(fused.levels[j]);
  const auto hv = head_forward(tape, vars, levels, tape.constant(relative_depth), head, out_height, out_width);
  return tape.value(hv.depth)[0];
}

Plane2D predict(const ParamMap& params, const ModelConfig& cfg, const RgbImage& rgb, double fx) {
  ad::Tape tape;
  const VarMap vars = bind_parameters(tape, params, [](const std::string&) { return false; });
  const double f = effective_focal(fx, rgb.width(), cfg.focal_norm);
  const auto fv = model_forward(tape, vars, cfg, backbone_inputs(rgb_stack(rgb)), f);
  return tape.value(fv.head.depth)[0];
}

std::vector<double> bin_centers(const ParamMap& params, const BinHeadConfig& head) {
  ad::Tape tape;
  auto it = params.find("head.bin_logits");
  if (it == params.end()) throw ArgumentError("missing parameter 'head.bin_logits'");
  const auto v = tape.bin_centers(tape.constant(it->second), head.d_min, head.d_max);
  const auto d = tape.value(v)[0].data();
  return {d.begin(), d.end()};
}

}  // namespace focalkit::net
