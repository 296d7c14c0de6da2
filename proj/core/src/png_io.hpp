#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace focalkit::detail {

struct PngData {
  int width = 0;
  int height = 0;
  int channels = 0;   // 1 gray, 2 gray+alpha, 3 rgb, 4 rgba
  int bit_depth = 0;  // 8 or 16 after expansion of sub-byte depths
  std::vector<std::uint16_t> samples;  // row-major, interleaved
};

PngData read_png(const std::filesystem::path& path);
void write_png_rgb8(const std::filesystem::path& path, int width, int height, const std::vector<std::uint8_t>& rgb);
void write_png_gray16(const std::filesystem::path& path, int width, int height,
                      const std::vector<std::uint16_t>& gray);

}  // namespace focalkit::detail
