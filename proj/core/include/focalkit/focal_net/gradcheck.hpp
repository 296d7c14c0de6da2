#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "focalkit/focal_net/model.hpp"

namespace focalkit::net {

struct GradcheckEntry {
  std::string name;
  std::size_t checked = 0;
  double max_abs_error = 0.0;
  // max_i |a_i - n_i| / max(|a_i|, |n_i|, floor), floor = 1e-3 * max_i |n_i|
  double max_rel_error = 0.0;
};

struct GradcheckReport {
  std::vector<GradcheckEntry> entries;

  double max_rel_error() const;
  bool passed(double tolerance = 1e-4) const;
};

// Builds a scalar loss on the tape from bound parameters.
using LossBuilder = std::function<ad::Var(ad::Tape&, const VarMap&)>;

struct GradcheckOptions {
  double step_scale = 1e-5;  // h = step_scale * max(1, |theta|)
  std::optional<std::pair<ad::Primitive, double>> fault;
};

// Central differences against tape gradients for every entry of the named
// tensors.
GradcheckReport gradcheck(const LossBuilder& loss, const ParamMap& params, const std::vector<std::string>& names,
                          const GradcheckOptions& opts = {});

struct ModelGradcheckConfig {
  int height = 24;
  int width = 32;
  ModelConfig model;
  LossConfig loss;
  GradcheckOptions options;

  ModelGradcheckConfig();
};

// Full toy model on a random scene: backbone, focal pyramid, fuse, bin head,
// bin centers and SILog. Checks M, head.*, and backbone.*.
GradcheckReport gradcheck_model(std::uint64_t seed, const ModelGradcheckConfig& cfg = {});

// loss = 3 * theta on a single scalar.
GradcheckReport gradcheck_passthrough(std::uint64_t seed);

}  // namespace focalkit::net
