#include "focalkit/focal_net/trainer.hpp"

#include <cmath>
#include <numeric>

#include "focalkit/error.hpp"
#include "focalkit/numerics/random.hpp"

namespace focalkit::net {

void TrainerConfig::validate() const {
  if (!(base_lr > 0.0) || !std::isfinite(base_lr)) throw ArgumentError("base_lr must be positive");
  if (!(backbone_lr_ratio >= 0.0 && backbone_lr_ratio <= 1.0)) {
    throw ArgumentError("backbone_lr_ratio must lie in [0, 1]");
  }
  if (!(weight_decay >= 0.0)) throw ArgumentError("weight_decay must be non-negative");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ArgumentError("betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw ArgumentError("epsilon must be positive");
  if (epochs < 0) throw ArgumentError("epochs must be non-negative");
  if (batch_size < 1) throw ArgumentError("batch_size must be at least 1");
}

AdamW::AdamW(TrainerConfig cfg) : cfg_(cfg) { cfg_.validate(); }

double AdamW::group_scale(const std::string& name) const {
  return is_backbone_parameter(name) ? cfg_.backbone_lr_ratio : 1.0;
}

ParamMap AdamW::step(ParamMap& params, const ad::Gradients& grads) {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  ParamMap deltas;
  for (const auto& [name, g] : grads) {
    auto it = params.find(name);
    if (it == params.end()) throw ArgumentError("gradient for unknown parameter '" + name + "'");
    Plane2D& p = it->second;
    if (g.channels() != 1 || !g[0].same_shape(p)) throw DimensionError("gradient shape differs for '" + name + "'");
    auto [st, fresh] = state_.try_emplace(name);
    if (fresh) {
      st->second.m = Plane2D(p.height(), p.width());
      st->second.v = Plane2D(p.height(), p.width());
    }
    auto pd = p.data();
    auto gd = g[0].data();
    auto md = st->second.m.data();
    auto vd = st->second.v.data();
    const double scale = group_scale(name);
    Plane2D delta(p.height(), p.width());
    auto dd = delta.data();
    for (std::size_t i = 0; i < pd.size(); ++i) {
      md[i] = cfg_.beta1 * md[i] + (1.0 - cfg_.beta1) * gd[i];
      vd[i] = cfg_.beta2 * vd[i] + (1.0 - cfg_.beta2) * gd[i] * gd[i];
      const double mhat = md[i] / bc1;
      const double vhat = vd[i] / bc2;
      const double head_rate = cfg_.base_lr * (cfg_.weight_decay * pd[i] + mhat / (std::sqrt(vhat) + cfg_.epsilon));
      dd[i] = scale == 1.0 ? head_rate : scale * head_rate;
      pd[i] -= dd[i];
    }
    deltas.emplace(name, std::move(delta));
  }
  return deltas;
}

TrainExample make_example(const RgbdSample& sample, const ModelConfig& cfg) {
  sample.validate();
  TrainExample ex;
  ex.inputs = backbone_inputs(rgb_stack(sample.rgb));
  ex.depth = sample.depth;
  ex.mask = Plane2D(sample.height(), sample.width());
  for (std::size_t i = 0; i < ex.mask.size(); ++i) {
    const double d = sample.depth.data()[i];
    if (sample.valid_mask.data()[i] != 0.0 && d > cfg.head.d_min && d <= cfg.head.d_max) ex.mask.data()[i] = 1.0;
  }
  ex.focal = effective_focal(sample.intrinsics.fx, sample.width(), cfg.focal_norm);
  ex.id = sample.source_id;
  return ex;
}

std::function<bool(const std::string&)> trainable_filter(const ModelConfig& model_cfg, const TrainerConfig& cfg) {
  const bool ablate = model_cfg.ablate_focal;
  const bool freeze = cfg.backbone_lr_ratio == 0.0;
  return [ablate, freeze](const std::string& name) {
    if (name == "M") return !ablate;
    if (is_backbone_parameter(name)) return !freeze;
    return true;
  };
}

LossAndGrad loss_and_grad(const TrainExample& ex, const ParamMap& params, const ModelConfig& model_cfg,
                          const LossConfig& loss_cfg, const std::function<bool(const std::string&)>& trainable) {
  ad::Tape tape;
  const VarMap vars = bind_parameters(tape, params, trainable);
  const auto fv = model_forward(tape, vars, model_cfg, ex.inputs, ex.focal);
  const ad::Var loss = silog(tape, fv.head.depth, ex.depth, ex.mask, loss_cfg);
  LossAndGrad out;
  out.loss = tape.scalar(loss);
  out.clamped = tape.clamped();
  out.grads = tape.backward(loss);
  return out;
}

TrainResult train(const std::vector<TrainExample>& data, const ModelConfig& model_cfg, const TrainerConfig& cfg,
                  const LossConfig& loss_cfg, ParamMap init, const StepCallback& on_step) {
  cfg.validate();
  loss_cfg.validate();
  if (data.empty()) throw ArgumentError("training set is empty");
  if (model_cfg.ablate_focal) {
    auto it = init.find("M");
    if (it != init.end()) {
      for (double v : it->second.data()) {
        if (v != 0.0) throw ArgumentError("focal ablation requires M to be zero");
      }
    }
  }
  const auto trainable = trainable_filter(model_cfg, cfg);
  AdamW opt(cfg);
  TrainResult out;
  out.params = std::move(init);
  Rng rng(mix_seed(cfg.seed, 0x7261696eULL));
  std::vector<std::size_t> order(data.size());
  long step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const double inv = 1.0 / static_cast<double>(end - start);
      ad::Gradients sum;
      double batch_loss = 0.0;
      for (std::size_t b = start; b < end; ++b) {
        const TrainExample& ex = data[order[b]];
        LossAndGrad lg = loss_and_grad(ex, out.params, model_cfg, loss_cfg, trainable);
        if (!std::isfinite(lg.loss)) {
          throw NumericalError(step, ex.id,
                               "non-finite loss at step " + std::to_string(step) + " on sample '" + ex.id + "'");
        }
        batch_loss += lg.loss * inv;
        for (auto& [name, g] : lg.grads) {
          g[0] *= inv;
          auto [it, fresh] = sum.try_emplace(name, std::move(g));
          if (!fresh) it->second[0] += g[0];
        }
      }
      opt.step(out.params, sum);
      for (const auto& [name, p] : out.params) {
        if (!p.all_finite()) {
          throw NumericalError(step, data[order[start]].id,
                               "parameter '" + name + "' became non-finite at step " + std::to_string(step));
        }
      }
      out.losses.push_back(batch_loss);
      if (on_step) on_step(step, batch_loss);
      ++step;
    }
  }
  return out;
}

}  // namespace focalkit::net
