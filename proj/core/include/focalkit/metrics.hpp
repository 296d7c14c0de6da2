#pragma once

#include <cstddef>
#include <span>
#include <string>

#include <nlohmann/json.hpp>

#include "focalkit/loss.hpp"
#include "focalkit/numerics/plane.hpp"

namespace focalkit {

struct DepthCap {
  double min = 1e-3;  // exclusive
  double max = 10.0;  // inclusive

  void validate() const;
  friend bool operator==(const DepthCap&, const DepthCap&) = default;
};

struct MetricsReport {
  double delta1 = 0.0;
  double delta2 = 0.0;
  double delta3 = 0.0;
  double abs_rel = 0.0;
  double rmse = 0.0;
  double log10_err = 0.0;
  double silog = 0.0;
  std::size_t valid_pixels = 0;
  DepthCap depth_cap;

  // Mean and variance of g = ln(pred) - ln(gt); lets aggregate() pool SILog
  // exactly. Not part of the serialised report.
  double mean_log_diff = 0.0;
  double var_log_diff = 0.0;
};

struct EvalOptions {
  DepthCap cap;
  double pred_floor = 1e-3;  // predictions are clamped to >= this before any ratio or log
  LossConfig silog;
};

// Metrics over pixels with mask != 0 and gt in (cap.min, cap.max].
// Throws EmptyEvaluationError when no pixel qualifies.
MetricsReport evaluate(const Plane2D& pred, const Plane2D& gt, const Plane2D& mask, const EvalOptions& options = {});

enum class Aggregation { kPooled, kPerImage };

const char* aggregation_name(Aggregation a) noexcept;

// kPooled: pixel-weighted means, RMSE as sqrt of the pixel-weighted mean MSE,
// SILog from pooled log moments. kPerImage: unweighted mean of each field.
MetricsReport aggregate(std::span<const MetricsReport> reports, Aggregation mode = Aggregation::kPooled,
                        const LossConfig& silog = {});

nlohmann::ordered_json to_json(const MetricsReport& r);
MetricsReport report_from_json(const nlohmann::json& j);

std::string csv_header();
std::string to_csv_row(const std::string& label, const MetricsReport& r);

}  // namespace focalkit
