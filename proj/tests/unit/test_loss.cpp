#include <gtest/gtest.h>

#include <cmath>

#include "focalkit/error.hpp"
#include "focalkit/focal_net/model.hpp"
#include "focalkit/loss.hpp"
#include "support.hpp"

using namespace focalkit;
using focalkit::testing::random_plane;

namespace {

double naive(const Plane2D& pred, const Plane2D& gt, const Plane2D& mask, const LossConfig& cfg) {
  long double s = 0, s2 = 0, n = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (mask.data()[i] == 0.0) continue;
    const long double g = std::log(static_cast<long double>(pred.data()[i])) - std::log(static_cast<long double>(gt.data()[i]));
    s += g;
    s2 += g * g;
    n += 1;
  }
  return cfg.silog_alpha * std::sqrt(static_cast<double>(std::max(s2 / n - cfg.silog_lambda * (s / n) * (s / n), 0.0L)));
}

}  // namespace

TEST(Silog, ZeroForPerfectPrediction) {
  Rng rng(1);
  const Plane2D gt = random_plane(rng, 6, 7, 0.5, 8);
  const SilogResult r = silog_loss(gt, gt, Plane2D(6, 7, 1.0), {});
  EXPECT_EQ(r.loss, 0.0);
  EXPECT_TRUE(r.clamped);
  for (double g : r.grad.data()) EXPECT_EQ(g, 0.0);
}

TEST(Silog, MatchesDefinition) {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const Plane2D gt = random_plane(rng, 5, 5, 0.5, 8);
    const Plane2D pred = random_plane(rng, 5, 5, 0.5, 8);
    Plane2D mask(5, 5, 1.0);
    mask(2, 2) = 0.0;
    const LossConfig cfg{rng.uniform(0, 1), rng.uniform(1, 10)};
    EXPECT_NEAR(silog_loss(pred, gt, mask, cfg).loss, naive(pred, gt, mask, cfg), 1e-10);
  }
}

TEST(Silog, UniformScaleErrorLeavesOnlyMeanTerm) {
  Rng rng(3);
  const Plane2D gt = random_plane(rng, 4, 4, 0.5, 8);
  const Plane2D mask(4, 4, 1.0);
  const LossConfig cfg{0.85, 10.0};
  for (double c : {0.5, 0.9, 1.3, 3.0}) {
    const double expected = cfg.silog_alpha * std::sqrt(1 - cfg.silog_lambda) * std::abs(std::log(c));
    EXPECT_NEAR(silog_loss(gt * c, gt, mask, cfg).loss, expected, 1e-10);
  }
  // with lambda = 1 the loss ignores a global scale entirely
  const Plane2D pred = random_plane(rng, 4, 4, 0.5, 8);
  const LossConfig inv{1.0, 10.0};
  EXPECT_NEAR(silog_loss(pred * 2.7, gt, mask, inv).loss, silog_loss(pred, gt, mask, inv).loss, 1e-10);
}

TEST(Silog, HandGradientMatchesFiniteDifferences) {
  Rng rng(4);
  const Plane2D gt = random_plane(rng, 5, 6, 0.5, 8);
  Plane2D pred = random_plane(rng, 5, 6, 0.5, 8);
  Plane2D mask(5, 6, 1.0);
  mask(0, 3) = 0.0;
  const LossConfig cfg;
  const SilogResult r = silog_loss(pred, gt, mask, cfg);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double v = pred.data()[i];
    const double h = 1e-6 * v;
    pred.data()[i] = v + h;
    const double up = silog_loss(pred, gt, mask, cfg).loss;
    pred.data()[i] = v - h;
    const double down = silog_loss(pred, gt, mask, cfg).loss;
    pred.data()[i] = v;
    EXPECT_NEAR(r.grad.data()[i], (up - down) / (2 * h), 1e-6 * std::max(1.0, std::abs(r.grad.data()[i])));
  }
  EXPECT_EQ(r.grad(0, 3), 0.0);
}

TEST(Silog, TapeMatchesHandDifferentiation) {
  Rng rng(5);
  const Plane2D gt = random_plane(rng, 5, 6, 0.5, 8);
  const Plane2D pred = random_plane(rng, 5, 6, 0.5, 8);
  Plane2D mask(5, 6, 1.0);
  mask(4, 4) = 0.0;
  const LossConfig cfg;
  const SilogResult hand = silog_loss(pred, gt, mask, cfg);
  ad::Tape t;
  const ad::Var p = t.parameter("pred", pred);
  const ad::Var loss = net::silog(t, p, gt, mask, cfg);
  EXPECT_NEAR(t.scalar(loss), hand.loss, 1e-12);
  const auto g = t.backward(loss);
  for (std::size_t i = 0; i < pred.size(); ++i) EXPECT_NEAR(g.at("pred")[0].data()[i], hand.grad.data()[i], 1e-12);
}

TEST(Silog, MomentsFormAgreesWithDirectForm) {
  Rng rng(6);
  for (int i = 0; i < 100; ++i) {
    const double m = rng.uniform(-2, 2);
    const double var = rng.uniform(0, 3);
    const LossConfig cfg{rng.uniform(0, 1), 10.0};
    const double direct = cfg.silog_alpha * std::sqrt((var + m * m) - cfg.silog_lambda * m * m);
    EXPECT_NEAR(silog_from_moments(m, var, cfg), direct, 1e-11);
  }
  bool clamped = false;
  EXPECT_EQ(silog_from_moments(0.3, 0.0, LossConfig{1.0, 10.0}, &clamped), 0.0);
  EXPECT_TRUE(clamped);
}

TEST(Silog, RejectsBadInput) {
  const Plane2D one(2, 2, 1.0);
  EXPECT_THROW(silog_loss(one, one, Plane2D(2, 2, 0.0), {}), ArgumentError);
  Plane2D neg = one;
  neg(1, 1) = -1.0;
  EXPECT_THROW(silog_loss(neg, one, one, {}), ArgumentError);
  EXPECT_THROW(silog_loss(one, Plane2D(2, 3, 1.0), one, {}), DimensionError);
  EXPECT_THROW((LossConfig{1.5, 10.0}).validate(), ArgumentError);
}
