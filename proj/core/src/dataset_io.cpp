#include "focalkit/dataset_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "focalkit/error.hpp"
#include "png_io.hpp"

namespace focalkit {

namespace fs = std::filesystem;

RgbImage::RgbImage(int height, int width, std::uint8_t fill)
    : height_(height), width_(width), data_(static_cast<std::size_t>(height) * width * 3, fill) {
  if (height < 0 || width < 0) throw DimensionError("negative image dimensions");
}

RgbImage::RgbImage(int height, int width, std::vector<std::uint8_t> data)
    : height_(height), width_(width), data_(std::move(data)) {
  if (height < 0 || width < 0) throw DimensionError("negative image dimensions");
  if (data_.size() != static_cast<std::size_t>(height) * width * 3) {
    throw DimensionError("rgb buffer holds " + std::to_string(data_.size()) + " bytes, expected " +
                         std::to_string(static_cast<std::size_t>(height) * width * 3));
  }
}

Plane2D RgbImage::channel(int c) const {
  Plane2D out(height_, width_);
  for (int v = 0; v < height_; ++v) {
    for (int u = 0; u < width_; ++u) out(v, u) = (*this)(v, u, c) / 255.0;
  }
  return out;
}

const char* mode_name(AugmentationMode mode) noexcept {
  switch (mode) {
    case AugmentationMode::kOriginal: return "original";
    case AugmentationMode::kFocalChange: return "focal_change";
    case AugmentationMode::kDepthRescale: return "depth_rescale";
  }
  return "original";
}

namespace {

std::string shortest(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

}  // namespace

std::string AugmentationTag::to_string() const {
  if (mode == AugmentationMode::kOriginal) return "original";
  return std::string(mode_name(mode)) + "(" + shortest(k) + ")";
}

AugmentationTag AugmentationTag::parse(const std::string& text) {
  if (text == "original") return original();
  for (auto mode : {AugmentationMode::kFocalChange, AugmentationMode::kDepthRescale}) {
    const std::string prefix = std::string(mode_name(mode)) + "(";
    if (text.size() > prefix.size() + 1 && text.compare(0, prefix.size(), prefix) == 0 && text.back() == ')') {
      double k = 0.0;
      const char* first = text.data() + prefix.size();
      const char* last = text.data() + text.size() - 1;
      auto [ptr, ec] = std::from_chars(first, last, k);
      if (ec != std::errc() || ptr != last) break;
      return {mode, k};
    }
  }
  throw ManifestError("unrecognised augmentation tag '" + text + "'");
}

void RgbdSample::validate() const {
  if (rgb.height() != depth.height() || rgb.width() != depth.width()) {
    throw DimensionError("sample '" + source_id + "': rgb and depth sizes differ");
  }
  if (!depth.same_shape(valid_mask)) throw DimensionError("sample '" + source_id + "': mask size differs");
  for (std::size_t i = 0; i < depth.size(); ++i) {
    const double m = valid_mask.data()[i];
    if (m != 0.0 && m != 1.0) throw ArgumentError("sample '" + source_id + "': mask values must be 0 or 1");
    if (m == 1.0 && !(depth.data()[i] > 0.0)) {
      throw ArgumentError("sample '" + source_id + "': non-positive depth under a valid mask pixel");
    }
  }
  intrinsics.validate();
}

fs::path Manifest::resolve(const std::string& p) const {
  fs::path path(p);
  return path.is_absolute() ? path : base_dir / path;
}

ManifestRecord parse_manifest_line(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw ManifestError(std::string("malformed manifest line: ") + e.what());
  }
  if (!j.is_object()) throw ManifestError("manifest line is not a JSON object");
  ManifestRecord r;
  try {
    r.rgb_path = j.at("rgb_path").get<std::string>();
    r.depth_path = j.at("depth_path").get<std::string>();
    r.fx = j.at("fx").get<double>();
    r.fy = j.at("fy").get<double>();
    r.cx = j.at("cx").get<double>();
    r.cy = j.at("cy").get<double>();
    r.depth_scale = j.value("depth_scale", kDefaultDepthScale);
    r.source_id = j.at("source_id").get<std::string>();
    if (j.contains("augmentation")) r.augmentation = AugmentationTag::parse(j.at("augmentation").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw ManifestError(std::string("manifest record: ") + e.what());
  }
  if (!(r.depth_scale > 0.0)) throw ManifestError("record '" + r.source_id + "': depth_scale must be > 0");
  return r;
}

std::string format_manifest_line(const ManifestRecord& r) {
  nlohmann::ordered_json j;
  j["rgb_path"] = r.rgb_path;
  j["depth_path"] = r.depth_path;
  j["fx"] = r.fx;
  j["fy"] = r.fy;
  j["cx"] = r.cx;
  j["cy"] = r.cy;
  j["depth_scale"] = r.depth_scale;
  j["source_id"] = r.source_id;
  j["augmentation"] = r.augmentation.to_string();
  return j.dump();
}

Manifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    if (!fs::exists(path)) throw MissingFileError(path.string());
    throw IoError(path.string(), "cannot open manifest");
  }
  Manifest m;
  m.base_dir = path.parent_path();
  std::set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) continue;
    ManifestRecord r;
    try {
      r = parse_manifest_line(line);
    } catch (const ManifestError& e) {
      throw ManifestError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (!seen.insert(r.source_id).second) {
      throw ManifestError(path.string() + ":" + std::to_string(lineno) + ": duplicate source_id '" + r.source_id + "'");
    }
    m.records.push_back(std::move(r));
  }
  return m;
}

void write_manifest(const Manifest& manifest, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError(path.string(), "cannot open manifest for writing");
  for (const auto& r : manifest.records) out << format_manifest_line(r) << '\n';
  if (!out) throw IoError(path.string(), "write failed");
}

RgbdSample load_sample(const ManifestRecord& record, const fs::path& base_dir) {
  const auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base_dir / p; };
  const fs::path rgb_path = resolve(record.rgb_path);
  const fs::path depth_path = resolve(record.depth_path);

  const auto rgb = detail::read_png(rgb_path);
  if (rgb.bit_depth != 8 || (rgb.channels != 3 && rgb.channels != 4)) {
    throw BitDepthError(rgb_path.string(), "rgb must be 8-bit RGB(A), got " + std::to_string(rgb.channels) +
                                               " channel(s) at " + std::to_string(rgb.bit_depth) + " bits");
  }
  const auto depth = detail::read_png(depth_path);
  if (depth.bit_depth != 16 || depth.channels != 1) {
    throw BitDepthError(depth_path.string(), "depth must be single-channel 16-bit, got " +
                                                 std::to_string(depth.channels) + " channel(s) at " +
                                                 std::to_string(depth.bit_depth) + " bits");
  }
  if (rgb.width != depth.width || rgb.height != depth.height) {
    throw DimensionError("record '" + record.source_id + "': rgb is " + std::to_string(rgb.height) + "x" +
                         std::to_string(rgb.width) + ", depth is " + std::to_string(depth.height) + "x" +
                         std::to_string(depth.width));
  }

  RgbdSample s;
  const int h = depth.height;
  const int w = depth.width;
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(h) * w * 3);
  for (std::size_t p = 0; p < static_cast<std::size_t>(h) * w; ++p) {
    for (int c = 0; c < 3; ++c) bytes[p * 3 + c] = static_cast<std::uint8_t>(rgb.samples[p * rgb.channels + c]);
  }
  s.rgb = RgbImage(h, w, std::move(bytes));
  s.depth = Plane2D(h, w);
  s.valid_mask = Plane2D(h, w);
  for (std::size_t p = 0; p < depth.samples.size(); ++p) {
    const std::uint16_t raw = depth.samples[p];
    if (raw > 0) {
      s.depth.data()[p] = raw / record.depth_scale;
      s.valid_mask.data()[p] = 1.0;
    }
  }
  s.intrinsics = record.intrinsics();
  s.source_id = record.source_id;
  s.augmentation = record.augmentation;
  return s;
}

std::string sanitize_id(const std::string& id) {
  std::string out = id;
  for (char& c : out) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
    if (!ok) c = '_';
  }
  if (out.empty() || out == "." || out == "..") out = "_" + out;
  return out;
}

WrittenSample write_sample(const RgbdSample& sample, const fs::path& dir, double depth_scale) {
  if (!(depth_scale > 0.0)) throw ArgumentError("depth_scale must be > 0");
  if (sample.rgb.height() != sample.depth.height() || sample.rgb.width() != sample.depth.width() ||
      !sample.depth.same_shape(sample.valid_mask)) {
    throw DimensionError("write_sample '" + sample.source_id + "': inconsistent sample dimensions");
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError(dir.string(), "cannot create directory: " + ec.message());

  const std::string stem = sanitize_id(sample.source_id);
  WrittenSample out;
  out.record.rgb_path = stem + "_rgb.png";
  out.record.depth_path = stem + "_depth.png";
  out.record.fx = sample.intrinsics.fx;
  out.record.fy = sample.intrinsics.fy;
  out.record.cx = sample.intrinsics.cx;
  out.record.cy = sample.intrinsics.cy;
  out.record.depth_scale = depth_scale;
  out.record.source_id = sample.source_id;
  out.record.augmentation = sample.augmentation;

  std::vector<std::uint16_t> raw(sample.depth.size(), 0);
  for (std::size_t p = 0; p < raw.size(); ++p) {
    if (sample.valid_mask.data()[p] == 0.0) continue;
    const double scaled = std::round(sample.depth.data()[p] * depth_scale);
    // Valid pixels keep a non-zero raw value so the mask survives the round trip.
    if (scaled < 1.0 || scaled > 65535.0 || !std::isfinite(scaled)) ++out.clamped_pixels;
    raw[p] = static_cast<std::uint16_t>(std::isfinite(scaled) ? std::clamp(scaled, 1.0, 65535.0) : 65535.0);
  }
  detail::write_png_rgb8(dir / out.record.rgb_path, sample.rgb.width(), sample.rgb.height(), sample.rgb.bytes());
  detail::write_png_gray16(dir / out.record.depth_path, sample.depth.width(), sample.depth.height(), raw);
  return out;
}

}  // namespace focalkit
