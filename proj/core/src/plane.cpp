#include "focalkit/numerics/plane.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "focalkit/error.hpp"

namespace focalkit {

namespace {

std::string shape_str(int h, int w) { return std::to_string(h) + "x" + std::to_string(w); }

}  // namespace

Plane2D::Plane2D(int height, int width, double fill) : height_(height), width_(width) {
  if (height < 0 || width < 0) throw DimensionError("negative plane dimensions " + shape_str(height, width));
  data_.assign(static_cast<std::size_t>(height) * static_cast<std::size_t>(width), fill);
}

Plane2D::Plane2D(int height, int width, std::vector<double> data)
    : height_(height), width_(width), data_(std::move(data)) {
  if (height < 0 || width < 0) throw DimensionError("negative plane dimensions " + shape_str(height, width));
  if (data_.size() != static_cast<std::size_t>(height) * static_cast<std::size_t>(width)) {
    throw DimensionError("plane data length " + std::to_string(data_.size()) + " does not match " +
                         shape_str(height, width));
  }
}

bool Plane2D::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

double Plane2D::min() const {
  if (data_.empty()) throw DimensionError("min of empty plane");
  return *std::min_element(data_.begin(), data_.end());
}

double Plane2D::max() const {
  if (data_.empty()) throw DimensionError("max of empty plane");
  return *std::max_element(data_.begin(), data_.end());
}

Plane2D& Plane2D::operator+=(const Plane2D& rhs) {
  if (!same_shape(rhs)) {
    throw DimensionError("plane add " + shape_str(height_, width_) + " vs " + shape_str(rhs.height_, rhs.width_));
  }
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += rhs.data_[i];
  return *this;
}

Plane2D& Plane2D::operator*=(double s) noexcept {
  for (double& v : data_) v *= s;
  return *this;
}

Plane2D operator+(Plane2D lhs, const Plane2D& rhs) { return lhs += rhs; }
Plane2D operator*(Plane2D lhs, double s) { return lhs *= s; }
Plane2D operator*(double s, Plane2D rhs) { return rhs *= s; }

FeatureStack::FeatureStack(std::vector<Plane2D> planes) {
  planes_.reserve(planes.size());
  for (auto& p : planes) push_back(std::move(p));
}

FeatureStack::FeatureStack(int channels, int height, int width, double fill) {
  if (channels < 0) throw DimensionError("negative channel count");
  planes_.assign(static_cast<std::size_t>(channels), Plane2D(height, width, fill));
}

void FeatureStack::push_back(Plane2D plane) {
  if (!planes_.empty() && !planes_.front().same_shape(plane)) {
    throw DimensionError("stack plane " + shape_str(plane.height(), plane.width()) + " does not match " +
                         shape_str(height(), width()));
  }
  planes_.push_back(std::move(plane));
}

bool FeatureStack::same_shape(const FeatureStack& other) const noexcept {
  return channels() == other.channels() && height() == other.height() && width() == other.width();
}

FeatureStack concat_channels(const FeatureStack& a, const FeatureStack& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  if (a.height() != b.height() || a.width() != b.width()) {
    throw DimensionError("concat_channels: " + shape_str(a.height(), a.width()) + " vs " +
                         shape_str(b.height(), b.width()));
  }
  std::vector<Plane2D> planes = a.planes();
  planes.insert(planes.end(), b.planes().begin(), b.planes().end());
  return FeatureStack(std::move(planes));
}

}  // namespace focalkit
