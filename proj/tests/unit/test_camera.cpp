#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "focalkit/camera.hpp"
#include "focalkit/error.hpp"
#include "support.hpp"

using namespace focalkit;
using focalkit::testing::TempDir;

TEST(Camera, ProjectUnprojectRoundTrip) {
  Rng rng(1);
  const CameraIntrinsics cam{500.0, 480.0, 320.0, 240.0};
  for (int i = 0; i < 1000; ++i) {
    const WorldPoint p{rng.uniform(-3, 3), rng.uniform(-2, 2), rng.uniform(0.2, 20)};
    const PixelCoord s = project(p, cam);
    EXPECT_NEAR(s.x, cam.fx * p.x / p.z, 1e-12);
    const WorldPoint q = unproject(s, p.z, cam);
    EXPECT_NEAR(q.x, p.x, 1e-12);
    EXPECT_NEAR(q.y, p.y, 1e-12);
    EXPECT_DOUBLE_EQ(q.z, p.z);
  }
}

TEST(Camera, BehindCameraThrows) {
  const CameraIntrinsics cam{100, 100, 0, 0};
  EXPECT_THROW(project({1, 1, 0}, cam), BehindCameraError);
  EXPECT_THROW(project({1, 1, -2}, cam), BehindCameraError);
}

TEST(Camera, ValidateRejectsBadIntrinsics) {
  EXPECT_THROW((CameraIntrinsics{0, 1, 0, 0}).validate(), ArgumentError);
  EXPECT_THROW((CameraIntrinsics{1, -1, 0, 0}).validate(), ArgumentError);
  EXPECT_THROW((CameraIntrinsics{1, 1, 50, 5}).validate(10, 10), ArgumentError);
  EXPECT_NO_THROW((CameraIntrinsics{1, 1, 4.5, 4.5}).validate(10, 10));
}

TEST(Camera, BackprojectFollowsMaskAndFormula) {
  Rng rng(2);
  const Plane2D depth = focalkit::testing::random_plane(rng, 5, 7, 1, 4);
  Plane2D mask(5, 7, 1.0);
  mask(1, 2) = 0.0;
  mask(4, 6) = 0.0;
  const CameraIntrinsics cam{30, 25, 3.0, 2.0};
  const auto pts = backproject(depth, mask, cam);
  ASSERT_EQ(pts.size(), 33u);
  std::size_t k = 0;
  for (int v = 0; v < 5; ++v) {
    for (int u = 0; u < 7; ++u) {
      if (mask(v, u) == 0.0) continue;
      const double z = depth(v, u);
      EXPECT_NEAR(pts[k].x, (u - 3.0) * z / 30.0, 1e-14);
      EXPECT_NEAR(pts[k].y, (v - 2.0) * z / 25.0, 1e-14);
      EXPECT_EQ(pts[k].z, z);
      ++k;
    }
  }
}

TEST(Camera, PlyIsParseable) {
  TempDir dir("ply");
  const std::vector<WorldPoint> pts = {{0, 0, 1}, {1.5, -2.25, 3}, {1e-7, 2, 0.5}};
  const std::vector<Rgb8> rgb = {{1, 2, 3}, {255, 0, 0}, {0, 0, 255}};
  export_ply(pts, std::span<const Rgb8>(rgb), dir / "c.ply");
  std::ifstream in(dir / "c.ply");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "ply");
  std::getline(in, line);
  EXPECT_EQ(line, "format ascii 1.0");
  std::size_t vertices = 0;
  bool has_color = false;
  while (std::getline(in, line) && line != "end_header") {
    if (line.rfind("element vertex ", 0) == 0) vertices = std::stoul(line.substr(15));
    if (line == "property uchar red") has_color = true;
  }
  ASSERT_EQ(vertices, 3u);
  EXPECT_TRUE(has_color);
  for (std::size_t i = 0; i < 3; ++i) {
    ASSERT_TRUE(std::getline(in, line));
    std::istringstream row(line);
    double x, y, z;
    int r, g, b;
    row >> x >> y >> z >> r >> g >> b;
    EXPECT_DOUBLE_EQ(x, pts[i].x);
    EXPECT_DOUBLE_EQ(y, pts[i].y);
    EXPECT_DOUBLE_EQ(z, pts[i].z);
    EXPECT_EQ(r, rgb[i].r);
    EXPECT_EQ(b, rgb[i].b);
  }
}

TEST(Camera, PlyRejectsColorCountMismatch) {
  TempDir dir("ply");
  const std::vector<WorldPoint> pts(2);
  const std::vector<Rgb8> rgb(1);
  EXPECT_THROW(export_ply(pts, std::span<const Rgb8>(rgb), dir / "c.ply"), Error);
}

TEST(Camera, DeformationRatioOfScaledCloud) {
  Rng rng(3);
  std::vector<WorldPoint> a, b;
  for (int i = 0; i < 200; ++i) {
    const WorldPoint p{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(1, 5)};
    a.push_back(p);
    b.push_back({1.25 * p.x, 1.25 * p.y, p.z});
  }
  EXPECT_NEAR(deformation_ratio(a, b), 1.25, 1e-12);
  EXPECT_NEAR(deformation_ratio(a, a), 1.0, 1e-15);
  const std::vector<WorldPoint> axis = {{0, 0, 1}};
  EXPECT_EQ(deformation_ratio(axis, axis), 1.0);
}

TEST(Camera, ChangedFocalStretchesBackprojection) {
  // Same depth, focal scaled by k: the lateral extent scales by 1/k.
  Rng rng(4);
  const Plane2D depth = focalkit::testing::random_plane(rng, 12, 16, 1, 5);
  const Plane2D mask(12, 16, 1.0);
  const CameraIntrinsics cam{40, 40, 7.5, 5.5};
  CameraIntrinsics scaled = cam;
  scaled.fx *= 0.8;
  scaled.fy *= 0.8;
  EXPECT_NEAR(deformation_ratio(backproject(depth, mask, cam), backproject(depth, mask, scaled)), 1.25, 1e-12);
}
