#include "focalkit/numerics/resample.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "focalkit/error.hpp"

namespace focalkit {

namespace {

void check_args(const Plane2D& src, int out_h, int out_w, const char* op) {
  if (src.height() < 1 || src.width() < 1) {
    throw DimensionError(std::string(op) + ": zero-sized source plane");
  }
  if (out_h < 1 || out_w < 1) {
    throw DimensionError(std::string(op) + ": output dimensions must be >= 1, got " + std::to_string(out_h) +
                         "x" + std::to_string(out_w));
  }
}

long long ceil_div(long long num, long long den) {
  long long q = num / den;
  if ((num % den != 0) && ((num > 0) == (den > 0))) ++q;
  return q;
}

}  // namespace

int nearest_source_index(int i, int src_size, int dst_size) {
  // ceil(x - 1/2) with x = (2i + 1) * src / (2 * dst) - 1/2
  const long long num = (2LL * i + 1) * src_size - 2LL * dst_size;
  const long long den = 2LL * dst_size;
  const long long idx = ceil_div(num, den);
  return static_cast<int>(std::clamp<long long>(idx, 0, src_size - 1));
}

Plane2D resample_nearest(const Plane2D& src, int out_h, int out_w) {
  check_args(src, out_h, out_w, "resample_nearest");
  if (out_h == src.height() && out_w == src.width()) return src;
  std::vector<int> rows(static_cast<std::size_t>(out_h));
  std::vector<int> cols(static_cast<std::size_t>(out_w));
  for (int i = 0; i < out_h; ++i) rows[i] = nearest_source_index(i, src.height(), out_h);
  for (int j = 0; j < out_w; ++j) cols[j] = nearest_source_index(j, src.width(), out_w);
  Plane2D out(out_h, out_w);
  for (int i = 0; i < out_h; ++i) {
    for (int j = 0; j < out_w; ++j) out(i, j) = src(rows[i], cols[j]);
  }
  return out;
}

std::vector<LinearTap> bilinear_taps(int src_size, int dst_size) {
  std::vector<LinearTap> taps(static_cast<std::size_t>(dst_size));
  const double scale = static_cast<double>(src_size) / dst_size;
  for (int i = 0; i < dst_size; ++i) {
    double x = (i + 0.5) * scale - 0.5;
    x = std::clamp(x, 0.0, static_cast<double>(src_size - 1));
    const int lo = static_cast<int>(std::floor(x));
    const int hi = std::min(lo + 1, src_size - 1);
    taps[i] = {lo, hi, x - lo};
  }
  return taps;
}

Plane2D resample_bilinear(const Plane2D& src, int out_h, int out_w) {
  check_args(src, out_h, out_w, "resample_bilinear");
  if (out_h == src.height() && out_w == src.width()) return src;
  const auto ty = bilinear_taps(src.height(), out_h);
  const auto tx = bilinear_taps(src.width(), out_w);
  Plane2D out(out_h, out_w);
  for (int i = 0; i < out_h; ++i) {
    const auto& r = ty[i];
    for (int j = 0; j < out_w; ++j) {
      const auto& c = tx[j];
      // std::lerp keeps results inside [a, b] and is exact for constant input.
      const double top = std::lerp(src(r.lo, c.lo), src(r.lo, c.hi), c.weight);
      const double bot = std::lerp(src(r.hi, c.lo), src(r.hi, c.hi), c.weight);
      out(i, j) = std::lerp(top, bot, r.weight);
    }
  }
  return out;
}

namespace {

// Row-stochastic coverage matrix in compressed form: for each output index,
// a list of (source index, weight) pairs.
std::vector<std::vector<std::pair<int, double>>> area_weights(int src_size, int dst_size) {
  std::vector<std::vector<std::pair<int, double>>> out(static_cast<std::size_t>(dst_size));
  const double scale = static_cast<double>(src_size) / dst_size;
  for (int i = 0; i < dst_size; ++i) {
    const double a = i * scale;
    const double b = (i + 1) * scale;
    const int first = static_cast<int>(std::floor(a));
    const int last = std::min(static_cast<int>(std::ceil(b)), src_size);
    double total = 0.0;
    for (int s = first; s < last; ++s) {
      const double overlap = std::min(b, s + 1.0) - std::max(a, static_cast<double>(s));
      if (overlap > 0.0) {
        out[i].emplace_back(s, overlap);
        total += overlap;
      }
    }
    for (auto& [s, w] : out[i]) w /= total;
  }
  return out;
}

}  // namespace

Plane2D resample_area(const Plane2D& src, int out_h, int out_w) {
  check_args(src, out_h, out_w, "resample_area");
  if (out_h == src.height() && out_w == src.width()) return src;
  const auto wy = area_weights(src.height(), out_h);
  const auto wx = area_weights(src.width(), out_w);
  Plane2D rows(out_h, src.width());
  for (int i = 0; i < out_h; ++i) {
    for (int c = 0; c < src.width(); ++c) {
      double acc = 0.0;
      for (const auto& [s, w] : wy[i]) acc += w * src(s, c);
      rows(i, c) = acc;
    }
  }
  Plane2D out(out_h, out_w);
  for (int i = 0; i < out_h; ++i) {
    for (int j = 0; j < out_w; ++j) {
      double acc = 0.0;
      for (const auto& [s, w] : wx[j]) acc += w * rows(i, s);
      out(i, j) = acc;
    }
  }
  return out;
}

}  // namespace focalkit
