#include "focalkit/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <vector>

#include "focalkit/error.hpp"

namespace focalkit {

void DepthCap::validate() const {
  if (!(min >= 0.0 && min < max)) throw ArgumentError("depth cap must satisfy 0 <= d_min < d_max");
}

MetricsReport evaluate(const Plane2D& pred, const Plane2D& gt, const Plane2D& mask, const EvalOptions& options) {
  options.cap.validate();
  if (!pred.same_shape(gt) || !pred.same_shape(mask)) throw DimensionError("evaluate: pred, gt and mask shapes differ");
  const auto p = pred.data();
  const auto t = gt.data();
  const auto m = mask.data();

  std::size_t n = 0;
  std::size_t hit[3] = {0, 0, 0};
  double sum_rel = 0.0;
  double sum_sq = 0.0;
  double sum_log10 = 0.0;
  double sum_g = 0.0;
  std::vector<double> logs;
  logs.reserve(p.size());
  const double thresholds[3] = {1.25, 1.25 * 1.25, 1.25 * 1.25 * 1.25};
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (m[i] == 0.0) continue;
    const double y = t[i];
    if (!(y > options.cap.min && y <= options.cap.max)) continue;
    const double x = std::max(p[i], options.pred_floor);
    const double ratio = std::max(x / y, y / x);
    for (int k = 0; k < 3; ++k) {
      if (ratio < thresholds[k]) ++hit[k];
    }
    sum_rel += std::abs(x - y) / y;
    sum_sq += (x - y) * (x - y);
    sum_log10 += std::abs(std::log10(x) - std::log10(y));
    const double g = std::log(x) - std::log(y);
    sum_g += g;
    logs.push_back(g);
    ++n;
  }
  if (n == 0) throw EmptyEvaluationError("evaluate: no valid pixels inside the depth cap");

  const double nn = static_cast<double>(n);
  MetricsReport r;
  r.delta1 = hit[0] / nn;
  r.delta2 = hit[1] / nn;
  r.delta3 = hit[2] / nn;
  r.abs_rel = sum_rel / nn;
  r.rmse = std::sqrt(sum_sq / nn);
  r.log10_err = sum_log10 / nn;
  r.mean_log_diff = sum_g / nn;
  double sum_dev = 0.0;
  for (double g : logs) sum_dev += (g - r.mean_log_diff) * (g - r.mean_log_diff);
  r.var_log_diff = sum_dev / nn;
  r.silog = silog_from_moments(r.mean_log_diff, r.var_log_diff, options.silog);
  r.valid_pixels = n;
  r.depth_cap = options.cap;
  return r;
}

const char* aggregation_name(Aggregation a) noexcept { return a == Aggregation::kPooled ? "pooled" : "per_image"; }

MetricsReport aggregate(std::span<const MetricsReport> reports, Aggregation mode, const LossConfig& silog) {
  if (reports.empty()) throw ArgumentError("aggregate: no reports");
  if (reports.size() == 1) return reports.front();
  MetricsReport out;
  out.depth_cap = reports.front().depth_cap;
  double total = 0.0;
  double mse = 0.0;
  for (const auto& r : reports) {
    if (r.valid_pixels == 0) throw ArgumentError("aggregate: report with zero valid pixels");
    const double w = mode == Aggregation::kPooled ? static_cast<double>(r.valid_pixels) : 1.0;
    total += w;
    out.delta1 += w * r.delta1;
    out.delta2 += w * r.delta2;
    out.delta3 += w * r.delta3;
    out.abs_rel += w * r.abs_rel;
    out.log10_err += w * r.log10_err;
    out.mean_log_diff += w * r.mean_log_diff;
    out.silog += w * r.silog;
    if (mode == Aggregation::kPooled) {
      mse += w * r.rmse * r.rmse;
    } else {
      out.rmse += r.rmse;
    }
    out.valid_pixels += r.valid_pixels;
  }
  out.delta1 /= total;
  out.delta2 /= total;
  out.delta3 /= total;
  out.abs_rel /= total;
  out.log10_err /= total;
  out.mean_log_diff /= total;
  if (mode == Aggregation::kPooled) {
    // Pooled variance: within-image variance plus spread of the image means.
    double var = 0.0;
    for (const auto& r : reports) {
      const double dm = r.mean_log_diff - out.mean_log_diff;
      var += static_cast<double>(r.valid_pixels) * (r.var_log_diff + dm * dm);
    }
    out.var_log_diff = var / total;
    out.rmse = std::sqrt(mse / total);
    out.silog = silog_from_moments(out.mean_log_diff, out.var_log_diff, silog);
  } else {
    out.rmse /= total;
    out.silog /= total;
  }
  return out;
}

nlohmann::ordered_json to_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["delta1"] = r.delta1;
  j["delta2"] = r.delta2;
  j["delta3"] = r.delta3;
  j["abs_rel"] = r.abs_rel;
  j["rmse"] = r.rmse;
  j["log10_err"] = r.log10_err;
  j["silog"] = r.silog;
  j["valid_pixels"] = r.valid_pixels;
  j["depth_cap"] = {r.depth_cap.min, r.depth_cap.max};
  return j;
}

MetricsReport report_from_json(const nlohmann::json& j) {
  MetricsReport r;
  try {
    r.delta1 = j.at("delta1").get<double>();
    r.delta2 = j.at("delta2").get<double>();
    r.delta3 = j.at("delta3").get<double>();
    r.abs_rel = j.at("abs_rel").get<double>();
    r.rmse = j.at("rmse").get<double>();
    r.log10_err = j.at("log10_err").get<double>();
    r.silog = j.at("silog").get<double>();
    r.valid_pixels = j.at("valid_pixels").get<std::size_t>();
    const auto& cap = j.at("depth_cap");
    r.depth_cap = {cap.at(0).get<double>(), cap.at(1).get<double>()};
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError(std::string("metrics report: ") + e.what());
  }
  return r;
}

std::string csv_header() { return "label,delta1,delta2,delta3,abs_rel,rmse,log10_err,silog,valid_pixels,d_min,d_max"; }

namespace {

std::string num(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

}  // namespace

std::string to_csv_row(const std::string& label, const MetricsReport& r) {
  std::string out = label;
  for (double v : {r.delta1, r.delta2, r.delta3, r.abs_rel, r.rmse, r.log10_err, r.silog}) out += "," + num(v);
  out += "," + std::to_string(r.valid_pixels);
  out += "," + num(r.depth_cap.min) + "," + num(r.depth_cap.max);
  return out;
}

}  // namespace focalkit
