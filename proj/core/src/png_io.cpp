#include "png_io.hpp"

#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <memory>
#include <string>

#include "focalkit/error.hpp"

namespace focalkit::detail {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const noexcept {
    if (f) std::fclose(f);
  }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

struct ReadHandles {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~ReadHandles() { png_destroy_read_struct(&png, info ? &info : nullptr, nullptr); }
};

struct WriteHandles {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~WriteHandles() { png_destroy_write_struct(&png, info ? &info : nullptr); }
};

void warning_sink(png_structp, png_const_charp) {}

// Everything libpng touches between setjmp and a possible longjmp lives in
// heap storage owned by the caller, so no automatic variable is clobbered.
bool decode(std::FILE* fp, ReadHandles& h, PngData& out, std::vector<png_bytep>& rows,
            std::vector<std::uint8_t>& raw) {
  if (setjmp(png_jmpbuf(h.png))) return false;
  png_init_io(h.png, fp);
  png_read_info(h.png, h.info);
  const auto color = png_get_color_type(h.png, h.info);
  int depth = png_get_bit_depth(h.png, h.info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(h.png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) {
    png_set_expand_gray_1_2_4_to_8(h.png);
    depth = 8;
  }
  if (depth == 16) png_set_swap(h.png);  // host little-endian samples
  png_read_update_info(h.png, h.info);
  out.width = static_cast<int>(png_get_image_width(h.png, h.info));
  out.height = static_cast<int>(png_get_image_height(h.png, h.info));
  out.channels = png_get_channels(h.png, h.info);
  out.bit_depth = png_get_bit_depth(h.png, h.info);
  const std::size_t rowbytes = png_get_rowbytes(h.png, h.info);
  raw.resize(rowbytes * static_cast<std::size_t>(out.height));
  rows.resize(static_cast<std::size_t>(out.height));
  for (int r = 0; r < out.height; ++r) rows[r] = raw.data() + rowbytes * r;
  png_read_image(h.png, rows.data());
  png_read_end(h.png, nullptr);
  return true;
}

bool encode(std::FILE* fp, WriteHandles& h, int width, int height, int bit_depth, int color_type,
            std::vector<png_bytep>& rows) {
  if (setjmp(png_jmpbuf(h.png))) return false;
  png_init_io(h.png, fp);
  png_set_compression_level(h.png, 6);
  png_set_IHDR(h.png, h.info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), bit_depth,
               color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(h.png, h.info);
  if (bit_depth == 16) png_set_swap(h.png);
  png_write_image(h.png, rows.data());
  png_write_end(h.png, nullptr);
  return true;
}

File open_for_write(const std::filesystem::path& path) {
  File fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw IoError(path.string(), "cannot open for writing");
  return fp;
}

void write_png(const std::filesystem::path& path, int width, int height, int bit_depth, int color_type,
               std::vector<png_bytep>& rows) {
  File fp = open_for_write(path);
  WriteHandles h;
  h.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, warning_sink);
  if (!h.png) throw IoError(path.string(), "png_create_write_struct failed");
  h.info = png_create_info_struct(h.png);
  if (!h.info) throw IoError(path.string(), "png_create_info_struct failed");
  if (!encode(fp.get(), h, width, height, bit_depth, color_type, rows)) {
    throw IoError(path.string(), "PNG encoding failed");
  }
  if (std::fflush(fp.get()) != 0) throw IoError(path.string(), "write failed");
}

}  // namespace

PngData read_png(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) throw MissingFileError(path.string());
  File fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw IoError(path.string(), "cannot open for reading");
  png_byte sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw IoError(path.string(), "not a PNG file");
  }
  ReadHandles h;
  h.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, warning_sink);
  if (!h.png) throw IoError(path.string(), "png_create_read_struct failed");
  h.info = png_create_info_struct(h.png);
  if (!h.info) throw IoError(path.string(), "png_create_info_struct failed");
  png_set_sig_bytes(h.png, 8);

  PngData out;
  std::vector<png_bytep> rows;
  std::vector<std::uint8_t> raw;
  if (!decode(fp.get(), h, out, rows, raw)) throw IoError(path.string(), "corrupt PNG data");

  const std::size_t n = static_cast<std::size_t>(out.width) * out.height * out.channels;
  out.samples.resize(n);
  if (out.bit_depth == 16) {
    for (std::size_t i = 0; i < n; ++i) {
      out.samples[i] = static_cast<std::uint16_t>(raw[2 * i] | (raw[2 * i + 1] << 8));
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) out.samples[i] = raw[i];
  }
  return out;
}

void write_png_rgb8(const std::filesystem::path& path, int width, int height, const std::vector<std::uint8_t>& rgb) {
  if (rgb.size() != static_cast<std::size_t>(width) * height * 3) {
    throw DimensionError("write_png_rgb8: buffer size mismatch");
  }
  std::vector<png_bytep> rows(static_cast<std::size_t>(height));
  auto* base = const_cast<std::uint8_t*>(rgb.data());
  for (int r = 0; r < height; ++r) rows[r] = base + static_cast<std::size_t>(r) * width * 3;
  write_png(path, width, height, 8, PNG_COLOR_TYPE_RGB, rows);
}

void write_png_gray16(const std::filesystem::path& path, int width, int height,
                      const std::vector<std::uint16_t>& gray) {
  if (gray.size() != static_cast<std::size_t>(width) * height) {
    throw DimensionError("write_png_gray16: buffer size mismatch");
  }
  std::vector<std::uint8_t> le(gray.size() * 2);
  for (std::size_t i = 0; i < gray.size(); ++i) {
    le[2 * i] = static_cast<std::uint8_t>(gray[i] & 0xFF);
    le[2 * i + 1] = static_cast<std::uint8_t>(gray[i] >> 8);
  }
  std::vector<png_bytep> rows(static_cast<std::size_t>(height));
  for (int r = 0; r < height; ++r) rows[r] = le.data() + static_cast<std::size_t>(r) * width * 2;
  write_png(path, width, height, 16, PNG_COLOR_TYPE_GRAY, rows);
}

}  // namespace focalkit::detail
