#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "focalkit/numerics/plane.hpp"

namespace focalkit::ad {

// The closed set of operations the tape can differentiate.
enum class Primitive {
  kLeaf,
  kAdd,
  kMul,
  kScale,
  kResampleBilinear,
  kConcat,
  kChannelMix,
  kSoftmax,
  kSigmoid,
  kLog,
  kMean,
  kSqrt,
  kBinCenters,
};

const char* to_string(Primitive p) noexcept;

// Handle to a value recorded on a Tape.
struct Var {
  int id = -1;
  bool valid() const noexcept { return id >= 0; }
};

using Gradients = std::map<std::string, FeatureStack>;

// Single-owner reverse-mode tape. Values are FeatureStacks; a scalar is a
// 1-channel 1x1 stack, a matrix a 1-channel rows x cols stack.
//
// Every op appends one node; backward() visits nodes in exact reverse
// order of recording and then marks the tape consumed.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  Var constant(FeatureStack value);
  Var constant(Plane2D value);
  Var scalar_constant(double v);
  Var parameter(const std::string& name, FeatureStack value);
  Var parameter(const std::string& name, Plane2D value);

  const FeatureStack& value(Var v) const;
  double scalar(Var v) const;

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double s);
  Var resample_bilinear(Var a, int out_h, int out_w);
  Var concat(Var a, Var b);
  // Per-pixel affine channel map: y_o = sum_i W(o, i) * x_i (+ b_o).
  // `weight` is a 1 x (out x in) matrix, `bias` a 1 x (1 x out) row.
  Var channel_mix(Var weight, Var x);
  Var channel_mix(Var weight, Var x, Var bias);
  // Softmax across channels, independently at each pixel.
  Var softmax(Var logits);
  Var sigmoid(Var a);
  Var log(Var a);
  Var mean(Var a);
  // Mean of a single-channel value over pixels where mask == 1.
  Var mean(Var a, const Plane2D& mask);
  Var sum(Var a);
  // sqrt(max(a, 0)). Where a < floor the adjoint is zero and clamped() is set.
  Var sqrt(Var a, double floor = 0.0);
  // Depth-bin centers from unnormalised width logits: widths are the
  // softmax of the logits, centers sit at the midpoints of the cumulative
  // partition of [d_min, d_max].
  Var bin_centers(Var width_logits, double d_min, double d_max);

  // True once any sqrt on this tape hit its floor.
  bool clamped() const noexcept { return clamped_; }
  std::size_t size() const noexcept { return nodes_.size(); }
  bool consumed() const noexcept { return consumed_; }

  // Returns d(loss)/d(parameter) for every named parameter, scaled by
  // `loss_adjoint`. Consumes the tape.
  Gradients backward(Var loss, double loss_adjoint = 1.0);

  // Fault injection for gradient-check mutation tests: every adjoint
  // contribution produced by `p` is multiplied by (1 + relative_error).
  void inject_adjoint_fault(Primitive p, double relative_error = 0.05);

 private:
  using Adjoint = std::function<void(Tape&, int self)>;

  struct Node {
    Primitive op = Primitive::kLeaf;
    FeatureStack value;
    FeatureStack grad;
    bool requires_grad = false;
    std::string name;
    Adjoint adjoint;
  };

  const Node& node(Var v) const;
  Var push(Primitive op, FeatureStack value, bool requires_grad, Adjoint adjoint);
  bool needs(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].requires_grad; }
  FeatureStack& grad_of(int id);
  double fault(Primitive p) const noexcept;

  std::vector<Node> nodes_;
  std::vector<std::pair<std::string, int>> parameters_;
  std::optional<std::pair<Primitive, double>> fault_;
  bool clamped_ = false;
  bool consumed_ = false;
};

}  // namespace focalkit::ad
