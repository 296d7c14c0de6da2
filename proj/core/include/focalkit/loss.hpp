#pragma once

#include "focalkit/numerics/plane.hpp"

namespace focalkit {

// Scale-invariant log loss, alpha * sqrt(mean(g^2) - lambda * mean(g)^2)
// with g = log(pred) - log(gt) over masked pixels.
struct LossConfig {
  double silog_lambda = 0.85;
  double silog_alpha = 10.0;

  void validate() const;
};

// Below this sqrt argument the loss is treated as degenerate: the value is
// still alpha * sqrt(max(D, 0)) but the gradient is zero and `clamped` is
// set. Reached when lambda = 1 and g is constant.
inline constexpr double kSilogFloor = 1e-12;

struct SilogResult {
  double loss = 0.0;
  Plane2D grad;  // d loss / d pred, zero outside the mask
  bool clamped = false;
};

// Hand-differentiated loss. Throws ArgumentError on an empty mask or a
// non-positive pred/gt under the mask.
SilogResult silog_loss(const Plane2D& pred, const Plane2D& gt, const Plane2D& mask, const LossConfig& cfg);

// Loss value from the mean and (population) variance of g, using
// D = var + (1 - lambda) * mean^2, which equals mean(g^2) - lambda * mean(g)^2
// without the cancellation.
double silog_from_moments(double mean_g, double var_g, const LossConfig& cfg, bool* clamped = nullptr);

}  // namespace focalkit
