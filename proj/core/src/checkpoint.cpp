#include "focalkit/focal_net/checkpoint.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "focalkit/error.hpp"

namespace focalkit::net {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

const char* norm_name(FocalNormalization n) { return n == FocalNormalization::kByWidth ? "width" : "none"; }

FocalNormalization parse_norm(const std::string& s) {
  if (s == "none") return FocalNormalization::kNone;
  if (s == "width") return FocalNormalization::kByWidth;
  throw ArgumentError("unknown focal normalisation '" + s + "'");
}

}  // namespace

ordered_json model_config_to_json(const ModelConfig& cfg) {
  ordered_json j;
  j["level_channels"] = cfg.level_channels;
  j["n_bins"] = cfg.head.n_bins;
  j["d_min"] = cfg.head.d_min;
  j["d_max"] = cfg.head.d_max;
  j["focal_norm"] = norm_name(cfg.focal_norm);
  j["ablate_focal"] = cfg.ablate_focal;
  return j;
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig cfg;
  cfg.level_channels = j.at("level_channels").get<std::array<int, kLevels>>();
  cfg.head.n_bins = j.at("n_bins").get<int>();
  cfg.head.d_min = j.at("d_min").get<double>();
  cfg.head.d_max = j.at("d_max").get<double>();
  cfg.focal_norm = parse_norm(j.at("focal_norm").get<std::string>());
  cfg.ablate_focal = j.at("ablate_focal").get<bool>();
  cfg.head.validate();
  return cfg;
}

ordered_json trainer_config_to_json(const TrainerConfig& cfg) {
  ordered_json j;
  j["base_lr"] = cfg.base_lr;
  j["backbone_lr_ratio"] = cfg.backbone_lr_ratio;
  j["weight_decay"] = cfg.weight_decay;
  j["beta1"] = cfg.beta1;
  j["beta2"] = cfg.beta2;
  j["epsilon"] = cfg.epsilon;
  j["epochs"] = cfg.epochs;
  j["batch_size"] = cfg.batch_size;
  j["seed"] = cfg.seed;
  return j;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  ordered_json j;
  j["format"] = kCheckpointFormat;
  j["version"] = kCheckpointVersion;
  j["model"] = model_config_to_json(ckpt.model);
  j["extra"] = ckpt.extra;
  ordered_json tensors = ordered_json::object();
  for (const auto& [name, p] : ckpt.params) {
    ordered_json t;
    t["shape"] = {p.height(), p.width()};
    t["data"] = p.values();
    tensors[name] = std::move(t);
  }
  j["tensors"] = std::move(tensors);
  std::ofstream out(path);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  // nlohmann prints doubles with round-trip precision.
  out << j.dump(1) << '\n';
  if (!out) throw IoError(path.string(), "write failed");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingFileError(path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw IoError(path.string(), std::string("malformed checkpoint: ") + e.what());
  }
  if (j.value("format", "") != kCheckpointFormat) throw IoError(path.string(), "not a focalkit checkpoint");
  if (j.value("version", 0) != kCheckpointVersion) {
    throw IoError(path.string(), "unsupported checkpoint version " + j.value("version", json()).dump());
  }
  Checkpoint ckpt;
  try {
    ckpt.model = model_config_from_json(j.at("model"));
    if (j.contains("extra")) ckpt.extra = j["extra"];
    for (const auto& [name, t] : j.at("tensors").items()) {
      const auto shape = t.at("shape").get<std::vector<int>>();
      auto data = t.at("data").get<std::vector<double>>();
      if (shape.size() != 2 || shape[0] < 0 || shape[1] < 0 ||
          static_cast<std::size_t>(shape[0]) * static_cast<std::size_t>(shape[1]) != data.size()) {
        throw IoError(path.string(), "tensor '" + name + "' has inconsistent shape");
      }
      ckpt.params.emplace(name, Plane2D(shape[0], shape[1], std::move(data)));
    }
  } catch (const json::exception& e) {
    throw IoError(path.string(), std::string("malformed checkpoint: ") + e.what());
  }
  return ckpt;
}

void write_loss_curve(const std::vector<double>& losses, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out << "step,loss\n";
  char buf[64];
  for (std::size_t i = 0; i < losses.size(); ++i) {
    auto res = std::to_chars(buf, buf + sizeof buf, losses[i]);
    out << i << ',' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf)) << '\n';
  }
  if (!out) throw IoError(path.string(), "write failed");
}

std::vector<double> read_loss_curve(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingFileError(path.string());
  std::string line;
  std::getline(in, line);
  if (line != "step,loss") throw IoError(path.string(), "missing step,loss header");
  std::vector<double> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw IoError(path.string(), "malformed row '" + line + "'");
    double v = 0.0;
    const char* first = line.data() + comma + 1;
    auto res = std::from_chars(first, line.data() + line.size(), v);
    if (res.ec != std::errc()) throw IoError(path.string(), "malformed loss '" + line + "'");
    out.push_back(v);
  }
  return out;
}

}  // namespace focalkit::net
