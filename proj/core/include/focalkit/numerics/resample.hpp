#pragma once

#include <vector>

#include "focalkit/numerics/plane.hpp"

namespace focalkit {

// All resamplers use the pixel-center convention (align_corners = false):
// output pixel i covers source coordinate (i + 0.5) * src / dst - 0.5.

// Source index that nearest-neighbour resampling reads for output index
// `i`. Ties round down. Computed in exact integer arithmetic so the map is
// reproducible bit for bit.
int nearest_source_index(int i, int src_size, int dst_size);

Plane2D resample_nearest(const Plane2D& src, int out_h, int out_w);
Plane2D resample_bilinear(const Plane2D& src, int out_h, int out_w);

// Box-filter (area) downsampling; each output pixel is the coverage-weighted
// mean of the source pixels under its footprint.
Plane2D resample_area(const Plane2D& src, int out_h, int out_w);

// One-dimensional bilinear taps: out[i] = (1 - weight) * src[lo] + weight * src[hi].
struct LinearTap {
  int lo;
  int hi;
  double weight;
};
std::vector<LinearTap> bilinear_taps(int src_size, int dst_size);

}  // namespace focalkit
