#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "focalkit/error.hpp"
#include "focalkit/numerics/plane.hpp"
#include "focalkit/numerics/resample.hpp"
#include "support.hpp"

using namespace focalkit;
using focalkit::testing::random_plane;

namespace {

// Nearest source pixel by exhaustive search in doubled integer coordinates:
// minimise |(2j+1) * dst - (2i+1) * src|, ties to the lower index.
int brute_nearest(int i, int src, int dst) {
  int best = 0;
  long long best_d = -1;
  for (int j = 0; j < src; ++j) {
    const long long d = std::llabs(static_cast<long long>(2 * j + 1) * dst - static_cast<long long>(2 * i + 1) * src);
    if (best_d < 0 || d < best_d) {
      best_d = d;
      best = j;
    }
  }
  return best;
}

double brute_bilinear(const Plane2D& src, int out_h, int out_w, int r, int c) {
  auto coord = [](int i, int n_src, int n_dst, int& lo, int& hi, double& t) {
    double s = (i + 0.5) * n_src / n_dst - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(n_src - 1));
    lo = static_cast<int>(std::floor(s));
    hi = std::min(lo + 1, n_src - 1);
    t = s - lo;
  };
  int r0, r1, c0, c1;
  double tr, tc;
  coord(r, src.height(), out_h, r0, r1, tr);
  coord(c, src.width(), out_w, c0, c1, tc);
  const double top = src(r0, c0) * (1 - tc) + src(r0, c1) * tc;
  const double bot = src(r1, c0) * (1 - tc) + src(r1, c1) * tc;
  return top * (1 - tr) + bot * tr;
}

}  // namespace

TEST(Plane, ConstructionAndAccess) {
  Plane2D p(2, 3, 1.5);
  EXPECT_EQ(p.height(), 2);
  EXPECT_EQ(p.width(), 3);
  EXPECT_EQ(p.size(), 6u);
  p(1, 2) = -4.0;
  EXPECT_EQ(p.data()[5], -4.0);
  EXPECT_EQ(p.min(), -4.0);
  EXPECT_EQ(p.max(), 1.5);
  EXPECT_THROW(Plane2D(2, 2, std::vector<double>(3)), DimensionError);
}

TEST(Plane, ArithmeticAndFiniteness) {
  Plane2D a(2, 2, 1.0);
  Plane2D b(2, 2, 2.0);
  EXPECT_EQ((a + b)(1, 1), 3.0);
  EXPECT_EQ((a * 4.0)(0, 1), 4.0);
  EXPECT_THROW(a += Plane2D(3, 2), DimensionError);
  EXPECT_TRUE(a.all_finite());
  a(0, 0) = std::nan("");
  EXPECT_FALSE(a.all_finite());
}

TEST(FeatureStack, ConcatKeepsOrderAndChecksShape) {
  FeatureStack a(2, 3, 4, 1.0);
  FeatureStack b(1, 3, 4, 7.0);
  const auto c = concat_channels(a, b);
  ASSERT_EQ(c.channels(), 3);
  EXPECT_EQ(c[0], a[0]);
  EXPECT_EQ(c[2], b[0]);
  EXPECT_EQ(concat_channels(FeatureStack{}, b), b);
  EXPECT_THROW(concat_channels(a, FeatureStack(1, 3, 5)), DimensionError);
  FeatureStack s;
  s.push_back(Plane2D(2, 2));
  EXPECT_THROW(s.push_back(Plane2D(2, 3)), DimensionError);
}

TEST(Resample, NearestIndexMatchesExhaustiveSearch) {
  for (int src = 1; src <= 40; ++src) {
    for (int dst = 1; dst <= 40; ++dst) {
      for (int i = 0; i < dst; ++i) {
        ASSERT_EQ(nearest_source_index(i, src, dst), brute_nearest(i, src, dst))
            << "i=" << i << " src=" << src << " dst=" << dst;
      }
    }
  }
}

TEST(Resample, NearestIntegerUpsampleRepeatsBlocks) {
  Rng rng(1);
  const Plane2D src = random_plane(rng, 3, 4, 0, 1);
  const Plane2D up = resample_nearest(src, 6, 12);
  for (int r = 0; r < 6; ++r) {
    for (int c = 0; c < 12; ++c) EXPECT_EQ(up(r, c), src(r / 2, c / 3));
  }
}

TEST(Resample, BilinearMatchesDirectFormula) {
  Rng rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    const int h = 1 + static_cast<int>(rng.index(9));
    const int w = 1 + static_cast<int>(rng.index(9));
    const int oh = 1 + static_cast<int>(rng.index(17));
    const int ow = 1 + static_cast<int>(rng.index(17));
    const Plane2D src = random_plane(rng, h, w, -3, 3);
    const Plane2D out = resample_bilinear(src, oh, ow);
    for (int r = 0; r < oh; ++r) {
      for (int c = 0; c < ow; ++c) EXPECT_NEAR(out(r, c), brute_bilinear(src, oh, ow, r, c), 1e-12);
    }
  }
}

TEST(Resample, BilinearPreservesConstantsAndRange) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const int h = 1 + static_cast<int>(rng.index(12));
    const int w = 1 + static_cast<int>(rng.index(12));
    const int oh = 1 + static_cast<int>(rng.index(30));
    const int ow = 1 + static_cast<int>(rng.index(30));
    const double v = rng.uniform(-5, 5);
    const Plane2D flat = resample_bilinear(Plane2D(h, w, v), oh, ow);
    for (double x : flat.data()) ASSERT_EQ(x, v);
    const Plane2D src = random_plane(rng, h, w, -1, 2);
    const Plane2D out = resample_bilinear(src, oh, ow);
    EXPECT_GE(out.min(), src.min());
    EXPECT_LE(out.max(), src.max());
  }
}

TEST(Resample, IdentitySizesReturnInput) {
  Rng rng(4);
  const Plane2D src = random_plane(rng, 5, 7, 0, 1);
  EXPECT_EQ(resample_nearest(src, 5, 7), src);
  EXPECT_EQ(resample_bilinear(src, 5, 7), src);
  EXPECT_EQ(resample_area(src, 5, 7), src);
}

TEST(Resample, AreaIntegerFactorIsBlockMean) {
  Rng rng(5);
  const Plane2D src = random_plane(rng, 8, 12, 0, 1);
  const Plane2D out = resample_area(src, 2, 3);
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 3; ++c) {
      double s = 0;
      for (int y = 0; y < 4; ++y) {
        for (int x = 0; x < 4; ++x) s += src(4 * r + y, 4 * c + x);
      }
      EXPECT_NEAR(out(r, c), s / 16.0, 1e-14);
    }
  }
}

TEST(Resample, AreaPreservesMeanAndConstants) {
  Rng rng(6);
  for (int trial = 0; trial < 40; ++trial) {
    const int h = 1 + static_cast<int>(rng.index(20));
    const int w = 1 + static_cast<int>(rng.index(20));
    const int oh = 1 + static_cast<int>(rng.index(h));
    const int ow = 1 + static_cast<int>(rng.index(w));
    const Plane2D src = random_plane(rng, h, w, 0, 1);
    const Plane2D out = resample_area(src, oh, ow);
    double ms = 0, mo = 0;
    for (double v : src.data()) ms += v;
    for (double v : out.data()) mo += v;
    EXPECT_NEAR(ms / src.size(), mo / out.size(), 1e-12);
    const Plane2D flat = resample_area(Plane2D(h, w, 0.3), oh, ow);
    for (double v : flat.data()) EXPECT_NEAR(v, 0.3, 1e-15);
  }
}

TEST(Resample, TapsReproduceBilinearRows) {
  const auto taps = bilinear_taps(5, 13);
  ASSERT_EQ(taps.size(), 13u);
  for (const auto& t : taps) {
    EXPECT_GE(t.weight, 0.0);
    EXPECT_LE(t.weight, 1.0);
    EXPECT_LE(t.lo, t.hi);
    EXPECT_LT(t.hi, 5);
  }
}

TEST(Resample, RejectsEmptyAndZeroTargets) {
  EXPECT_THROW(resample_bilinear(Plane2D(), 2, 2), DimensionError);
  EXPECT_THROW(resample_nearest(Plane2D(2, 2), 0, 2), DimensionError);
  EXPECT_THROW(resample_area(Plane2D(2, 2), 2, -1), DimensionError);
}
