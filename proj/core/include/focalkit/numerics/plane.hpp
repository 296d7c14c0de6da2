#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace focalkit {

// Dense row-major 2-D array of doubles. Depth maps, masks and single
// feature channels are all Plane2D.
class Plane2D {
 public:
  Plane2D() = default;
  Plane2D(int height, int width, double fill = 0.0);
  Plane2D(int height, int width, std::vector<double> data);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double operator()(int row, int col) const noexcept {
    return data_[static_cast<std::size_t>(row) * width_ + col];
  }
  double& operator()(int row, int col) noexcept {
    return data_[static_cast<std::size_t>(row) * width_ + col];
  }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  bool same_shape(const Plane2D& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_;
  }
  bool all_finite() const noexcept;
  double min() const;
  double max() const;

  Plane2D& operator+=(const Plane2D& rhs);
  Plane2D& operator*=(double s) noexcept;

  // Bit-equality of shape and contents.
  friend bool operator==(const Plane2D&, const Plane2D&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<double> data_;
};

Plane2D operator+(Plane2D lhs, const Plane2D& rhs);
Plane2D operator*(Plane2D lhs, double s);
Plane2D operator*(double s, Plane2D rhs);

// Ordered list of equally sized planes. A stack with zero channels has no
// spatial dimensions and acts as the identity for concatenation.
class FeatureStack {
 public:
  FeatureStack() = default;
  explicit FeatureStack(std::vector<Plane2D> planes);
  FeatureStack(int channels, int height, int width, double fill = 0.0);

  int channels() const noexcept { return static_cast<int>(planes_.size()); }
  int height() const noexcept { return planes_.empty() ? 0 : planes_.front().height(); }
  int width() const noexcept { return planes_.empty() ? 0 : planes_.front().width(); }
  bool empty() const noexcept { return planes_.empty(); }

  const Plane2D& operator[](int c) const { return planes_[static_cast<std::size_t>(c)]; }
  Plane2D& operator[](int c) { return planes_[static_cast<std::size_t>(c)]; }
  const std::vector<Plane2D>& planes() const noexcept { return planes_; }

  void push_back(Plane2D plane);
  bool same_shape(const FeatureStack& other) const noexcept;

  friend bool operator==(const FeatureStack&, const FeatureStack&) = default;

 private:
  std::vector<Plane2D> planes_;
};

// Channel concatenation, `a`'s planes first.
FeatureStack concat_channels(const FeatureStack& a, const FeatureStack& b);

}  // namespace focalkit
