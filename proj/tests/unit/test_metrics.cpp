#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "focalkit/error.hpp"
#include "focalkit/metrics.hpp"
#include "support.hpp"

using namespace focalkit;
using focalkit::testing::random_plane;

namespace {

struct Oracle {
  long double d1 = 0, d2 = 0, d3 = 0, rel = 0, rmse = 0, log10 = 0, silog = 0;
  std::size_t n = 0;
};

// Straight transcription of the definitions in long double, two passes.
Oracle brute(const Plane2D& pred, const Plane2D& gt, const Plane2D& mask, double lambda, double alpha) {
  Oracle o;
  std::vector<long double> g;
  long double sq = 0;
  for (int v = 0; v < gt.height(); ++v) {
    for (int u = 0; u < gt.width(); ++u) {
      if (mask(v, u) == 0.0 || !(gt(v, u) > 1e-3 && gt(v, u) <= 10.0)) continue;
      const long double p = std::max(pred(v, u), 1e-3);
      const long double t = gt(v, u);
      const long double d = std::max(p / t, t / p);
      o.d1 += d < 1.25L;
      o.d2 += d < 1.25L * 1.25L;
      o.d3 += d < 1.25L * 1.25L * 1.25L;
      o.rel += std::fabs(p - t) / t;
      sq += (p - t) * (p - t);
      o.log10 += std::fabs(std::log10(p) - std::log10(t));
      g.push_back(std::log(p) - std::log(t));
      ++o.n;
    }
  }
  const long double n = o.n;
  o.d1 /= n;
  o.d2 /= n;
  o.d3 /= n;
  o.rel /= n;
  o.log10 /= n;
  o.rmse = std::sqrt(sq / n);
  long double m = 0, m2 = 0;
  for (auto x : g) m += x;
  m /= n;
  for (auto x : g) m2 += x * x;
  m2 /= n;
  o.silog = alpha * std::sqrt(std::max(m2 - lambda * m * m, 0.0L));
  return o;
}

Plane2D random_mask(Rng& rng, int h, int w, double p) {
  Plane2D m(h, w);
  for (double& v : m.data()) v = rng.uniform() < p ? 1.0 : 0.0;
  m(0, 0) = 1.0;
  return m;
}

}  // namespace

TEST(Metrics, MatchBruteForceOracle) {
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const Plane2D gt = random_plane(rng, 8, 8, 0.5, 12.0);
    const Plane2D pred = random_plane(rng, 8, 8, 0.0005, 12.0);
    Plane2D mask = random_mask(rng, 8, 8, 0.8);
    mask(0, 0) = 1.0;
    Plane2D g2 = gt;
    g2(0, 0) = 5.0;
    const MetricsReport r = evaluate(pred, g2, mask);
    const Oracle o = brute(pred, g2, mask, 0.85, 10.0);
    EXPECT_EQ(r.valid_pixels, o.n);
    EXPECT_NEAR(r.delta1, static_cast<double>(o.d1), 1e-12);
    EXPECT_NEAR(r.delta2, static_cast<double>(o.d2), 1e-12);
    EXPECT_NEAR(r.delta3, static_cast<double>(o.d3), 1e-12);
    EXPECT_NEAR(r.abs_rel, static_cast<double>(o.rel), 1e-12);
    EXPECT_NEAR(r.rmse, static_cast<double>(o.rmse), 1e-12);
    EXPECT_NEAR(r.log10_err, static_cast<double>(o.log10), 1e-12);
    EXPECT_NEAR(r.silog, static_cast<double>(o.silog), 1e-12);
  }
}

TEST(Metrics, PerfectPredictionAndCap) {
  Rng rng(2);
  const Plane2D gt = random_plane(rng, 6, 6, 0.5, 9.0);
  const MetricsReport r = evaluate(gt, gt, Plane2D(6, 6, 1.0));
  EXPECT_EQ(r.delta1, 1.0);
  EXPECT_EQ(r.abs_rel, 0.0);
  EXPECT_EQ(r.rmse, 0.0);
  EXPECT_EQ(r.silog, 0.0);
  Plane2D far = gt;
  far(1, 1) = 10.0;   // inclusive upper bound
  far(2, 2) = 10.5;   // excluded
  far(3, 3) = 1e-3;   // exclusive lower bound
  EXPECT_EQ(evaluate(far, far, Plane2D(6, 6, 1.0)).valid_pixels, 34u);
  EXPECT_THROW(evaluate(gt, gt, Plane2D(6, 6, 0.0)), EmptyEvaluationError);
  EXPECT_THROW(evaluate(gt, Plane2D(5, 6, 1.0), Plane2D(6, 6, 1.0)), DimensionError);
}

TEST(Metrics, PredictionFloorAppliesBeforeLogs) {
  const Plane2D gt(1, 2, 1.0);
  Plane2D pred(1, 2, 1.0);
  pred(0, 1) = -3.0;
  const MetricsReport r = evaluate(pred, gt, Plane2D(1, 2, 1.0));
  EXPECT_TRUE(std::isfinite(r.silog));
  EXPECT_NEAR(r.log10_err, 1.5, 1e-12);
}

TEST(Metrics, DeltaThresholdsAreNestedAndSymmetric) {
  Rng rng(3);
  for (int trial = 0; trial < 1000; ++trial) {
    const Plane2D a = random_plane(rng, 4, 4, 0.5, 9.0);
    const Plane2D b = random_plane(rng, 4, 4, 0.5, 9.0);
    const Plane2D mask(4, 4, 1.0);
    const MetricsReport ab = evaluate(a, b, mask);
    const MetricsReport ba = evaluate(b, a, mask);
    EXPECT_LE(ab.delta1, ab.delta2);
    EXPECT_LE(ab.delta2, ab.delta3);
    EXPECT_EQ(ab.delta1, ba.delta1);
    EXPECT_EQ(ab.delta3, ba.delta3);
    EXPECT_NEAR(ab.rmse, ba.rmse, 1e-12);
    EXPECT_NEAR(ab.log10_err, ba.log10_err, 1e-12);
  }
}

TEST(Metrics, PullingPredictionsTowardTruthNeverLowersDelta) {
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const Plane2D gt = random_plane(rng, 5, 5, 0.5, 5.0);
    Plane2D pred = random_plane(rng, 5, 5, 0.5, 5.0);
    const Plane2D mask(5, 5, 1.0);
    const MetricsReport before = evaluate(pred, gt, mask);
    for (std::size_t i = 0; i < pred.size(); ++i) {
      pred.data()[i] = std::sqrt(pred.data()[i] * gt.data()[i]);
    }
    const MetricsReport after = evaluate(pred, gt, mask);
    EXPECT_GE(after.delta1, before.delta1);
    EXPECT_GE(after.delta2, before.delta2);
    EXPECT_GE(after.delta3, before.delta3);
    EXPECT_LE(after.silog, before.silog + 1e-12);
  }
}

TEST(Metrics, JointScalingKeepsRatioMetrics) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const Plane2D gt = random_plane(rng, 4, 4, 0.5, 4.0);
    const Plane2D pred = random_plane(rng, 4, 4, 0.5, 4.0);
    const Plane2D mask(4, 4, 1.0);
    const double c = rng.uniform(0.5, 2.0);
    const MetricsReport a = evaluate(pred, gt, mask);
    const MetricsReport b = evaluate(pred * c, gt * c, mask);
    EXPECT_EQ(a.delta1, b.delta1);
    EXPECT_NEAR(a.abs_rel, b.abs_rel, 1e-12);
    EXPECT_NEAR(a.silog, b.silog, 1e-10);
    EXPECT_NEAR(b.rmse, c * a.rmse, 1e-12);
  }
}

TEST(Metrics, PooledAggregateEqualsConcatenation) {
  Rng rng(6);
  std::vector<MetricsReport> parts;
  std::vector<Plane2D> preds, gts;
  for (int i = 0; i < 5; ++i) {
    preds.push_back(random_plane(rng, 3, 4 + i, 0.5, 8.0));
    gts.push_back(random_plane(rng, 3, 4 + i, 0.5, 8.0));
    parts.push_back(evaluate(preds.back(), gts.back(), Plane2D(3, 4 + i, 1.0)));
  }
  std::vector<double> pc, gc;
  for (int i = 0; i < 5; ++i) {
    pc.insert(pc.end(), preds[i].data().begin(), preds[i].data().end());
    gc.insert(gc.end(), gts[i].data().begin(), gts[i].data().end());
  }
  const int total = static_cast<int>(pc.size());
  const MetricsReport whole = evaluate(Plane2D(1, total, pc), Plane2D(1, total, gc), Plane2D(1, total, 1.0));
  const MetricsReport pooled = aggregate(parts, Aggregation::kPooled);
  EXPECT_EQ(pooled.valid_pixels, whole.valid_pixels);
  EXPECT_NEAR(pooled.delta1, whole.delta1, 1e-12);
  EXPECT_NEAR(pooled.abs_rel, whole.abs_rel, 1e-12);
  EXPECT_NEAR(pooled.rmse, whole.rmse, 1e-12);
  EXPECT_NEAR(pooled.log10_err, whole.log10_err, 1e-12);
  EXPECT_NEAR(pooled.silog, whole.silog, 1e-12);

  const MetricsReport per = aggregate(parts, Aggregation::kPerImage);
  double mean_rmse = 0;
  for (const auto& p : parts) mean_rmse += p.rmse / 5;
  EXPECT_NEAR(per.rmse, mean_rmse, 1e-14);
  EXPECT_THROW(aggregate(std::vector<MetricsReport>{}), ArgumentError);
}

TEST(Metrics, JsonAndCsvRoundTrip) {
  Rng rng(7);
  const MetricsReport r = evaluate(random_plane(rng, 5, 5, 0.5, 5), random_plane(rng, 5, 5, 0.5, 5), Plane2D(5, 5, 1.0));
  const MetricsReport back = report_from_json(nlohmann::json::parse(to_json(r).dump()));
  EXPECT_EQ(back.delta1, r.delta1);
  EXPECT_EQ(back.rmse, r.rmse);
  EXPECT_EQ(back.silog, r.silog);
  EXPECT_EQ(back.valid_pixels, r.valid_pixels);
  EXPECT_EQ(back.depth_cap, r.depth_cap);

  const std::string row = to_csv_row("img", r);
  std::istringstream in(row);
  std::vector<std::string> cells;
  for (std::string c; std::getline(in, c, ',');) cells.push_back(c);
  std::istringstream hdr(csv_header());
  std::vector<std::string> names;
  for (std::string c; std::getline(hdr, c, ',');) names.push_back(c);
  ASSERT_EQ(cells.size(), names.size());
  EXPECT_EQ(cells[0], "img");
  EXPECT_EQ(std::stod(cells[5]), r.rmse);
  EXPECT_EQ(std::stod(cells[7]), r.silog);
}
