#include "focalkit/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "focalkit/error.hpp"

namespace focalkit {

void LossConfig::validate() const {
  if (!(silog_lambda >= 0.0 && silog_lambda <= 1.0)) throw ArgumentError("silog lambda must lie in [0, 1]");
  if (!(silog_alpha > 0.0)) throw ArgumentError("silog alpha must be positive");
}

double silog_from_moments(double mean_g, double var_g, const LossConfig& cfg, bool* clamped) {
  const double d = var_g + (1.0 - cfg.silog_lambda) * mean_g * mean_g;
  if (clamped) *clamped = d < kSilogFloor;
  return cfg.silog_alpha * std::sqrt(std::max(d, 0.0));
}

SilogResult silog_loss(const Plane2D& pred, const Plane2D& gt, const Plane2D& mask, const LossConfig& cfg) {
  cfg.validate();
  if (!pred.same_shape(gt) || !pred.same_shape(mask)) throw DimensionError("silog_loss: shape mismatch");
  const auto p = pred.data();
  const auto t = gt.data();
  const auto m = mask.data();
  std::vector<double> g(p.size(), 0.0);
  double s1 = 0.0;
  double s2 = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (m[i] == 0.0) continue;
    if (!(p[i] > 0.0) || !(t[i] > 0.0)) {
      throw ArgumentError("silog_loss: pred and gt must be positive under the mask (index " + std::to_string(i) + ")");
    }
    g[i] = std::log(p[i]) - std::log(t[i]);
    s1 += g[i];
    ++n;
  }
  if (n == 0) throw ArgumentError("silog_loss: empty mask");
  const double nn = static_cast<double>(n);
  const double mean_g = s1 / nn;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (m[i] != 0.0) s2 += (g[i] - mean_g) * (g[i] - mean_g);
  }

  SilogResult out;
  out.loss = silog_from_moments(mean_g, s2 / nn, cfg, &out.clamped);
  out.grad = Plane2D(pred.height(), pred.width());
  if (out.clamped) return out;
  // dL/dpred_i = alpha / (2 sqrt(D)) * (2 g_i - 2 lambda mean_g) / n / pred_i
  const double sqrt_d = out.loss / cfg.silog_alpha;
  const double coef = cfg.silog_alpha / (sqrt_d * nn);
  auto gr = out.grad.data();
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (m[i] == 0.0) continue;
    gr[i] = coef * (g[i] - cfg.silog_lambda * mean_g) / p[i];
  }
  return out;
}

}  // namespace focalkit
