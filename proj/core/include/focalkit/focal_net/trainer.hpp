#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "focalkit/dataset_io.hpp"
#include "focalkit/focal_net/model.hpp"
#include "focalkit/loss.hpp"

namespace focalkit::net {

struct TrainerConfig {
  double base_lr = 1.6e-4;
  double backbone_lr_ratio = 1.0 / 50.0;  // 0 freezes the backbone
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int epochs = 5;
  int batch_size = 4;
  std::uint64_t seed = 0;

  void validate() const;
};

// Decoupled-weight-decay Adam with two groups. Head-group parameters
// ("M", "head.*") step at base_lr; backbone parameters at
// base_lr * backbone_lr_ratio. The backbone update is formed as
// ratio * (head-rate update), so identical optimizer state yields updates
// that differ by exactly that factor.
class AdamW {
 public:
  explicit AdamW(TrainerConfig cfg);

  // Updates every parameter that has a gradient and returns the applied
  // deltas (param_new = param_old - delta).
  ParamMap step(ParamMap& params, const ad::Gradients& grads);

  long steps() const noexcept { return t_; }
  double group_scale(const std::string& name) const;

 private:
  struct Moments {
    Plane2D m;
    Plane2D v;
  };
  TrainerConfig cfg_;
  std::map<std::string, Moments> state_;
  long t_ = 0;
};

// One training example, preprocessed for the model.
struct TrainExample {
  BackboneInputs inputs;
  Plane2D depth;
  Plane2D mask;  // valid and inside the bin range
  double focal = 0.0;  // after normalisation
  std::string id;
};

TrainExample make_example(const RgbdSample& sample, const ModelConfig& cfg);

struct TrainResult {
  ParamMap params;
  std::vector<double> losses;  // one per optimizer step (batch mean)
};

// Called after every step with the step index (0-based) and batch loss.
using StepCallback = std::function<void(long step, double loss)>;

// Trains from `init`. Backbone parameters are constants when the ratio is
// zero; M is a constant (and must be zero) when cfg.ablate_focal is set.
// Throws NumericalError naming the step and sample on a non-finite loss or
// parameter.
TrainResult train(const std::vector<TrainExample>& data, const ModelConfig& model_cfg, const TrainerConfig& cfg,
                  const LossConfig& loss_cfg, ParamMap init, const StepCallback& on_step = {});

// Loss and gradients for one example; names that are not trainable get no
// gradient.
struct LossAndGrad {
  double loss = 0.0;
  ad::Gradients grads;
  bool clamped = false;
};
LossAndGrad loss_and_grad(const TrainExample& ex, const ParamMap& params, const ModelConfig& model_cfg,
                          const LossConfig& loss_cfg, const std::function<bool(const std::string&)>& trainable);

// Names trained under the given configs.
std::function<bool(const std::string&)> trainable_filter(const ModelConfig& model_cfg, const TrainerConfig& cfg);

}  // namespace focalkit::net
