#include "focalkit/focal_net/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "focalkit/error.hpp"
#include "focalkit/numerics/random.hpp"

namespace focalkit::net {

double GradcheckReport::max_rel_error() const {
  double worst = 0.0;
  for (const auto& e : entries) worst = std::max(worst, e.max_rel_error);
  return worst;
}

bool GradcheckReport::passed(double tolerance) const {
  if (entries.empty()) return false;
  for (const auto& e : entries) {
    if (!(e.max_rel_error < tolerance)) return false;
  }
  return true;
}

namespace {

double evaluate(const LossBuilder& loss, const ParamMap& params) {
  ad::Tape tape;
  const VarMap vars = bind_parameters(tape, params, [](const std::string&) { return false; });
  return tape.scalar(loss(tape, vars));
}

}  // namespace

GradcheckReport gradcheck(const LossBuilder& loss, const ParamMap& params, const std::vector<std::string>& names,
                          const GradcheckOptions& opts) {
  for (const auto& n : names) {
    if (!params.contains(n)) throw ArgumentError("gradcheck: unknown parameter '" + n + "'");
  }
  ad::Gradients analytic;
  {
    ad::Tape tape;
    if (opts.fault) tape.inject_adjoint_fault(opts.fault->first, opts.fault->second);
    const VarMap vars = bind_parameters(tape, params, [&](const std::string& n) {
      return std::find(names.begin(), names.end(), n) != names.end();
    });
    analytic = tape.backward(loss(tape, vars));
  }

  GradcheckReport report;
  ParamMap work = params;
  for (const auto& name : names) {
    Plane2D& p = work.at(name);
    const auto& a = analytic.at(name)[0];
    std::vector<double> numeric(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double theta = p.data()[i];
      const double h = opts.step_scale * std::max(1.0, std::abs(theta));
      p.data()[i] = theta + h;
      const double up = evaluate(loss, work);
      p.data()[i] = theta - h;
      const double down = evaluate(loss, work);
      p.data()[i] = theta;
      numeric[i] = (up - down) / (2.0 * h);
    }
    double scale = 0.0;
    for (double n : numeric) scale = std::max(scale, std::abs(n));
    const double floor = std::max(1e-3 * scale, 1e-300);
    GradcheckEntry e;
    e.name = name;
    e.checked = p.size();
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double ai = a.data()[i];
      const double err = std::abs(ai - numeric[i]);
      e.max_abs_error = std::max(e.max_abs_error, err);
      const double denom = std::max({std::abs(ai), std::abs(numeric[i]), floor});
      e.max_rel_error = std::max(e.max_rel_error, err / denom);
    }
    report.entries.push_back(std::move(e));
  }
  return report;
}

ModelGradcheckConfig::ModelGradcheckConfig() {
  model.level_channels = {2, 2, 2, 2, 2};
  model.head.n_bins = 16;
  model.head_init_std = 0.1;
}

GradcheckReport gradcheck_model(std::uint64_t seed, const ModelGradcheckConfig& cfg) {
  ParamMap params = init_parameters(cfg.model, seed);
  Rng rng(mix_seed(seed, 0x6763ULL));
  for (double& v : params.at("head.bias").data()) v = rng.normal(0.0, 0.5);
  for (double& v : params.at("head.bin_logits").data()) v = rng.normal(0.0, 0.5);

  const int h = cfg.height;
  const int w = cfg.width;
  FeatureStack rgb(3, h, w);
  for (int c = 0; c < 3; ++c) {
    for (double& v : rgb[c].data()) v = rng.uniform();
  }
  const BackboneInputs inputs = backbone_inputs(rgb);
  Plane2D gt(h, w);
  Plane2D mask(h, w);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    gt.data()[i] = rng.uniform(0.5, 8.0);
    mask.data()[i] = rng.uniform() < 0.8 ? 1.0 : 0.0;
  }
  mask.data()[0] = 1.0;
  const double focal = rng.uniform(20.0, 60.0);  // px, raw (unnormalised) focal

  const ModelConfig model_cfg = cfg.model;
  const LossConfig loss_cfg = cfg.loss;
  const LossBuilder loss = [&](ad::Tape& tape, const VarMap& vars) {
    const auto fv = model_forward(tape, vars, model_cfg, inputs, focal);
    return silog(tape, fv.head.depth, gt, mask, loss_cfg);
  };
  std::vector<std::string> names;
  for (const auto& [name, value] : params) names.push_back(name);
  return gradcheck(loss, params, names, cfg.options);
}

GradcheckReport gradcheck_passthrough(std::uint64_t seed) {
  Rng rng(seed);
  ParamMap params{{"theta", Plane2D(1, 1, rng.normal())}};
  const LossBuilder loss = [](ad::Tape& tape, const VarMap& vars) { return tape.scale(vars.at("theta"), 3.0); };
  return gradcheck(loss, params, {"theta"});
}

}  // namespace focalkit::net
