#include "focalkit/numerics/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "focalkit/error.hpp"
#include "focalkit/numerics/resample.hpp"

namespace focalkit::ad {

const char* to_string(Primitive p) noexcept {
  switch (p) {
    case Primitive::kLeaf: return "leaf";
    case Primitive::kAdd: return "add";
    case Primitive::kMul: return "mul";
    case Primitive::kScale: return "scale";
    case Primitive::kResampleBilinear: return "resample_bilinear";
    case Primitive::kConcat: return "concat";
    case Primitive::kChannelMix: return "channel_mix";
    case Primitive::kSoftmax: return "softmax";
    case Primitive::kSigmoid: return "sigmoid";
    case Primitive::kLog: return "log";
    case Primitive::kMean: return "mean";
    case Primitive::kSqrt: return "sqrt";
    case Primitive::kBinCenters: return "bin_centers";
  }
  return "unknown";
}

namespace {

std::string shape_of(const FeatureStack& s) {
  return std::to_string(s.channels()) + "x" + std::to_string(s.height()) + "x" + std::to_string(s.width());
}

void require_same_shape(const FeatureStack& a, const FeatureStack& b, const char* op) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_of(a) + " vs " + shape_of(b));
  }
}

FeatureStack scalar_stack(double v) { return FeatureStack(std::vector<Plane2D>{Plane2D(1, 1, v)}); }

}  // namespace

void Tape::inject_adjoint_fault(Primitive p, double relative_error) { fault_ = std::make_pair(p, relative_error); }

double Tape::fault(Primitive p) const noexcept {
  return (fault_ && fault_->first == p) ? 1.0 + fault_->second : 1.0;
}

const Tape::Node& Tape::node(Var v) const {
  if (v.id < 0 || static_cast<std::size_t>(v.id) >= nodes_.size()) {
    throw StateError("variable " + std::to_string(v.id) + " is not recorded on this tape");
  }
  return nodes_[static_cast<std::size_t>(v.id)];
}

Var Tape::push(Primitive op, FeatureStack value, bool requires_grad, Adjoint adjoint) {
  if (consumed_) throw StateError("tape already consumed by backward()");
  Node n;
  n.op = op;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  if (requires_grad) n.adjoint = std::move(adjoint);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

FeatureStack& Tape::grad_of(int id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (n.grad.empty() && !n.value.empty()) {
    n.grad = FeatureStack(n.value.channels(), n.value.height(), n.value.width());
  }
  return n.grad;
}

Var Tape::constant(FeatureStack value) { return push(Primitive::kLeaf, std::move(value), false, {}); }

Var Tape::constant(Plane2D value) { return constant(FeatureStack(std::vector<Plane2D>{std::move(value)})); }

Var Tape::scalar_constant(double v) { return constant(scalar_stack(v)); }

Var Tape::parameter(const std::string& name, FeatureStack value) {
  for (const auto& [existing, id] : parameters_) {
    if (existing == name) throw ArgumentError("duplicate parameter name '" + name + "'");
  }
  Var v = push(Primitive::kLeaf, std::move(value), true, {});
  nodes_.back().name = name;
  parameters_.emplace_back(name, v.id);
  return v;
}

Var Tape::parameter(const std::string& name, Plane2D value) {
  return parameter(name, FeatureStack(std::vector<Plane2D>{std::move(value)}));
}

const FeatureStack& Tape::value(Var v) const { return node(v).value; }

double Tape::scalar(Var v) const {
  const auto& s = node(v).value;
  if (s.channels() != 1 || s.height() != 1 || s.width() != 1) {
    throw DimensionError("value is not a scalar: " + shape_of(s));
  }
  return s[0](0, 0);
}

Var Tape::add(Var a, Var b) {
  const auto& va = value(a);
  const auto& vb = value(b);
  require_same_shape(va, vb, "add");
  FeatureStack out = va;
  for (int c = 0; c < out.channels(); ++c) out[c] += vb[c];
  return push(Primitive::kAdd, std::move(out), needs(a) || needs(b), [a, b](Tape& t, int self) {
    const double f = t.fault(Primitive::kAdd);
    for (Var in : {a, b}) {
      if (!t.needs(in)) continue;
      const FeatureStack& g = t.nodes_[self].grad;
      FeatureStack& gi = t.grad_of(in.id);
      for (int c = 0; c < g.channels(); ++c) {
        auto src = g[c].data();
        auto dst = gi[c].data();
        for (std::size_t k = 0; k < src.size(); ++k) dst[k] += f * src[k];
      }
    }
  });
}

Var Tape::sub(Var a, Var b) { return add(a, scale(b, -1.0)); }

Var Tape::mul(Var a, Var b) {
  const auto& va = value(a);
  const auto& vb = value(b);
  require_same_shape(va, vb, "mul");
  FeatureStack out = va;
  for (int c = 0; c < out.channels(); ++c) {
    auto o = out[c].data();
    auto y = vb[c].data();
    for (std::size_t k = 0; k < o.size(); ++k) o[k] *= y[k];
  }
  return push(Primitive::kMul, std::move(out), needs(a) || needs(b), [a, b](Tape& t, int self) {
    const double f = t.fault(Primitive::kMul);
    const FeatureStack& g = t.nodes_[self].grad;
    const auto accumulate = [&](Var target, Var other) {
      if (!t.needs(target)) return;
      const FeatureStack& vo = t.nodes_[other.id].value;
      FeatureStack& gt = t.grad_of(target.id);
      for (int c = 0; c < g.channels(); ++c) {
        auto gs = g[c].data();
        auto os = vo[c].data();
        auto dst = gt[c].data();
        for (std::size_t k = 0; k < gs.size(); ++k) dst[k] += f * gs[k] * os[k];
      }
    };
    accumulate(a, b);
    accumulate(b, a);
  });
}

Var Tape::scale(Var a, double s) {
  FeatureStack out = value(a);
  for (int c = 0; c < out.channels(); ++c) out[c] *= s;
  return push(Primitive::kScale, std::move(out), needs(a), [a, s](Tape& t, int self) {
    const double f = t.fault(Primitive::kScale);
    const FeatureStack& g = t.nodes_[self].grad;
    FeatureStack& ga = t.grad_of(a.id);
    for (int c = 0; c < g.channels(); ++c) {
      auto gs = g[c].data();
      auto dst = ga[c].data();
      for (std::size_t k = 0; k < gs.size(); ++k) dst[k] += f * s * gs[k];
    }
  });
}

Var Tape::resample_bilinear(Var a, int out_h, int out_w) {
  const auto& va = value(a);
  FeatureStack out;
  for (const auto& p : va.planes()) out.push_back(focalkit::resample_bilinear(p, out_h, out_w));
  const int in_h = va.height();
  const int in_w = va.width();
  return push(Primitive::kResampleBilinear, std::move(out), needs(a), [a, in_h, in_w](Tape& t, int self) {
    const double f = t.fault(Primitive::kResampleBilinear);
    const FeatureStack& g = t.nodes_[self].grad;
    FeatureStack& ga = t.grad_of(a.id);
    const int oh = g.height();
    const int ow = g.width();
    if (oh == in_h && ow == in_w) {
      for (int c = 0; c < g.channels(); ++c) {
        auto gs = g[c].data();
        auto dst = ga[c].data();
        for (std::size_t k = 0; k < gs.size(); ++k) dst[k] += f * gs[k];
      }
      return;
    }
    const auto ty = bilinear_taps(in_h, oh);
    const auto tx = bilinear_taps(in_w, ow);
    for (int c = 0; c < g.channels(); ++c) {
      const Plane2D& gp = g[c];
      Plane2D& dp = ga[c];
      for (int i = 0; i < oh; ++i) {
        const auto& r = ty[i];
        for (int j = 0; j < ow; ++j) {
          const auto& q = tx[j];
          const double v = f * gp(i, j);
          dp(r.lo, q.lo) += v * (1.0 - r.weight) * (1.0 - q.weight);
          dp(r.lo, q.hi) += v * (1.0 - r.weight) * q.weight;
          dp(r.hi, q.lo) += v * r.weight * (1.0 - q.weight);
          dp(r.hi, q.hi) += v * r.weight * q.weight;
        }
      }
    }
  });
}

Var Tape::concat(Var a, Var b) {
  FeatureStack out = concat_channels(value(a), value(b));
  const int ca = value(a).channels();
  return push(Primitive::kConcat, std::move(out), needs(a) || needs(b), [a, b, ca](Tape& t, int self) {
    const double f = t.fault(Primitive::kConcat);
    const FeatureStack& g = t.nodes_[self].grad;
    const auto route = [&](Var target, int offset, int count) {
      if (!t.needs(target) || count == 0) return;
      FeatureStack& gt = t.grad_of(target.id);
      for (int c = 0; c < count; ++c) {
        auto gs = g[offset + c].data();
        auto dst = gt[c].data();
        for (std::size_t k = 0; k < gs.size(); ++k) dst[k] += f * gs[k];
      }
    };
    route(a, 0, ca);
    route(b, ca, g.channels() - ca);
  });
}

Var Tape::channel_mix(Var weight, Var x) { return channel_mix(weight, x, Var{}); }

Var Tape::channel_mix(Var weight, Var x, Var bias) {
  const auto& vw = value(weight);
  const auto& vx = value(x);
  if (vw.channels() != 1) throw DimensionError("channel_mix: weight must be a single matrix plane");
  const Plane2D& W = vw[0];
  const int n_out = W.height();
  const int n_in = W.width();
  if (vx.channels() != n_in) {
    throw DimensionError("channel_mix: weight expects " + std::to_string(n_in) + " input channels, got " +
                         std::to_string(vx.channels()));
  }
  const bool has_bias = bias.valid();
  if (has_bias) {
    const auto& vb = value(bias);
    if (vb.channels() != 1 || static_cast<int>(vb[0].size()) != n_out) {
      throw DimensionError("channel_mix: bias must hold " + std::to_string(n_out) + " values");
    }
  }
  const int h = vx.height();
  const int w = vx.width();
  const std::size_t px = static_cast<std::size_t>(h) * w;
  FeatureStack out(n_out, h, w);
  for (int o = 0; o < n_out; ++o) {
    auto dst = out[o].data();
    const double b0 = has_bias ? value(bias)[0].data()[o] : 0.0;
    std::fill(dst.begin(), dst.end(), b0);
    for (int i = 0; i < n_in; ++i) {
      const double wv = W(o, i);
      auto src = vx[i].data();
      for (std::size_t k = 0; k < px; ++k) dst[k] += wv * src[k];
    }
  }
  const bool req = needs(weight) || needs(x) || (has_bias && needs(bias));
  return push(Primitive::kChannelMix, std::move(out), req, [weight, x, bias, has_bias, n_out, n_in, px](Tape& t, int self) {
    const double f = t.fault(Primitive::kChannelMix);
    const FeatureStack& g = t.nodes_[self].grad;
    const Plane2D& Wv = t.nodes_[weight.id].value[0];
    const FeatureStack& xv = t.nodes_[x.id].value;
    if (t.needs(x)) {
      FeatureStack& gx = t.grad_of(x.id);
      for (int i = 0; i < n_in; ++i) {
        auto dst = gx[i].data();
        for (int o = 0; o < n_out; ++o) {
          const double wv = f * Wv(o, i);
          auto gs = g[o].data();
          for (std::size_t k = 0; k < px; ++k) dst[k] += wv * gs[k];
        }
      }
    }
    if (t.needs(weight)) {
      Plane2D& gw = t.grad_of(weight.id)[0];
      for (int o = 0; o < n_out; ++o) {
        auto gs = g[o].data();
        for (int i = 0; i < n_in; ++i) {
          auto xs = xv[i].data();
          double acc = 0.0;
          for (std::size_t k = 0; k < px; ++k) acc += gs[k] * xs[k];
          gw(o, i) += f * acc;
        }
      }
    }
    if (has_bias && t.needs(bias)) {
      auto gb = t.grad_of(bias.id)[0].data();
      for (int o = 0; o < n_out; ++o) {
        auto gs = g[o].data();
        double acc = 0.0;
        for (std::size_t k = 0; k < px; ++k) acc += gs[k];
        gb[o] += f * acc;
      }
    }
  });
}

Var Tape::softmax(Var logits) {
  const auto& v = value(logits);
  const int n = v.channels();
  if (n < 1) throw DimensionError("softmax over zero channels");
  const std::size_t px = static_cast<std::size_t>(v.height()) * v.width();
  FeatureStack out(n, v.height(), v.width());
  std::vector<double> col(static_cast<std::size_t>(n));
  for (std::size_t k = 0; k < px; ++k) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < n; ++c) mx = std::max(mx, v[c].data()[k]);
    double total = 0.0;
    for (int c = 0; c < n; ++c) {
      col[c] = std::exp(v[c].data()[k] - mx);
      total += col[c];
    }
    for (int c = 0; c < n; ++c) out[c].data()[k] = col[c] / total;
  }
  return push(Primitive::kSoftmax, std::move(out), needs(logits), [logits, n, px](Tape& t, int self) {
    const double f = t.fault(Primitive::kSoftmax);
    const FeatureStack& g = t.nodes_[self].grad;
    const FeatureStack& y = t.nodes_[self].value;
    FeatureStack& gx = t.grad_of(logits.id);
    for (std::size_t k = 0; k < px; ++k) {
      double dot = 0.0;
      for (int c = 0; c < n; ++c) dot += y[c].data()[k] * g[c].data()[k];
      for (int c = 0; c < n; ++c) gx[c].data()[k] += f * y[c].data()[k] * (g[c].data()[k] - dot);
    }
  });
}

Var Tape::sigmoid(Var a) {
  FeatureStack out = value(a);
  for (int c = 0; c < out.channels(); ++c) {
    for (double& e : out[c].data()) e = 1.0 / (1.0 + std::exp(-e));
  }
  return push(Primitive::kSigmoid, std::move(out), needs(a), [a](Tape& t, int self) {
    const double f = t.fault(Primitive::kSigmoid);
    const FeatureStack& g = t.nodes_[self].grad;
    const FeatureStack& y = t.nodes_[self].value;
    FeatureStack& ga = t.grad_of(a.id);
    for (int c = 0; c < g.channels(); ++c) {
      auto gs = g[c].data();
      auto ys = y[c].data();
      auto dst = ga[c].data();
      for (std::size_t k = 0; k < gs.size(); ++k) dst[k] += f * gs[k] * ys[k] * (1.0 - ys[k]);
    }
  });
}

Var Tape::log(Var a) {
  FeatureStack out = value(a);
  for (int c = 0; c < out.channels(); ++c) {
    for (double& e : out[c].data()) {
      // NaN passes through so callers can report it as a numerical failure.
      if (e <= 0.0) throw ArgumentError("log of non-positive value " + std::to_string(e));
      e = std::log(e);
    }
  }
  return push(Primitive::kLog, std::move(out), needs(a), [a](Tape& t, int self) {
    const double f = t.fault(Primitive::kLog);
    const FeatureStack& g = t.nodes_[self].grad;
    const FeatureStack& x = t.nodes_[a.id].value;
    FeatureStack& ga = t.grad_of(a.id);
    for (int c = 0; c < g.channels(); ++c) {
      auto gs = g[c].data();
      auto xs = x[c].data();
      auto dst = ga[c].data();
      for (std::size_t k = 0; k < gs.size(); ++k) dst[k] += f * gs[k] / xs[k];
    }
  });
}

Var Tape::sum(Var a) {
  const auto& v = value(a);
  double total = 0.0;
  for (const auto& p : v.planes()) {
    for (double e : p.data()) total += e;
  }
  return push(Primitive::kMean, scalar_stack(total), needs(a), [a](Tape& t, int self) {
    const double g = t.fault(Primitive::kMean) * t.nodes_[self].grad[0](0, 0);
    FeatureStack& ga = t.grad_of(a.id);
    for (int c = 0; c < ga.channels(); ++c) {
      for (double& e : ga[c].data()) e += g;
    }
  });
}

Var Tape::mean(Var a) {
  const auto& v = value(a);
  const double n = static_cast<double>(v.channels()) * v.height() * v.width();
  if (n == 0) throw ArgumentError("mean of empty value");
  double total = 0.0;
  for (const auto& p : v.planes()) {
    for (double e : p.data()) total += e;
  }
  return push(Primitive::kMean, scalar_stack(total / n), needs(a), [a, n](Tape& t, int self) {
    const double g = t.fault(Primitive::kMean) * t.nodes_[self].grad[0](0, 0) / n;
    FeatureStack& ga = t.grad_of(a.id);
    for (int c = 0; c < ga.channels(); ++c) {
      for (double& e : ga[c].data()) e += g;
    }
  });
}

Var Tape::mean(Var a, const Plane2D& mask) {
  const auto& v = value(a);
  if (v.channels() != 1) throw DimensionError("masked mean expects a single-channel value");
  if (!v[0].same_shape(mask)) throw DimensionError("masked mean: mask shape mismatch");
  auto m = std::make_shared<const Plane2D>(mask);
  double total = 0.0;
  std::size_t n = 0;
  auto vs = v[0].data();
  auto ms = m->data();
  for (std::size_t k = 0; k < vs.size(); ++k) {
    if (ms[k] != 0.0) {
      total += vs[k];
      ++n;
    }
  }
  if (n == 0) throw ArgumentError("masked mean over an empty mask");
  const double count = static_cast<double>(n);
  return push(Primitive::kMean, scalar_stack(total / count), needs(a), [a, m, count](Tape& t, int self) {
    const double g = t.fault(Primitive::kMean) * t.nodes_[self].grad[0](0, 0) / count;
    auto dst = t.grad_of(a.id)[0].data();
    auto mk = m->data();
    for (std::size_t k = 0; k < dst.size(); ++k) {
      if (mk[k] != 0.0) dst[k] += g;
    }
  });
}

Var Tape::sqrt(Var a, double floor) {
  FeatureStack out = value(a);
  auto active = std::make_shared<std::vector<char>>();
  for (int c = 0; c < out.channels(); ++c) {
    for (double& e : out[c].data()) {
      const bool clamp = e < floor || e <= 0.0;
      active->push_back(clamp ? 0 : 1);
      if (clamp) clamped_ = true;
      e = std::sqrt(std::max(e, 0.0));
    }
  }
  return push(Primitive::kSqrt, std::move(out), needs(a), [a, active](Tape& t, int self) {
    const double f = t.fault(Primitive::kSqrt);
    const FeatureStack& g = t.nodes_[self].grad;
    const FeatureStack& y = t.nodes_[self].value;
    FeatureStack& ga = t.grad_of(a.id);
    std::size_t idx = 0;
    for (int c = 0; c < g.channels(); ++c) {
      auto gs = g[c].data();
      auto ys = y[c].data();
      auto dst = ga[c].data();
      for (std::size_t k = 0; k < gs.size(); ++k, ++idx) {
        if ((*active)[idx]) dst[k] += f * gs[k] / (2.0 * ys[k]);
      }
    }
  });
}

Var Tape::bin_centers(Var width_logits, double d_min, double d_max) {
  const auto& v = value(width_logits);
  if (v.channels() != 1) throw DimensionError("bin_centers expects a single plane of logits");
  if (!(d_max > d_min)) throw ArgumentError("bin_centers: d_max must exceed d_min");
  const auto logits = v[0].data();
  const int n = static_cast<int>(logits.size());
  if (n < 1) throw DimensionError("bin_centers: no bins");
  const double range = d_max - d_min;
  auto probs = std::make_shared<std::vector<double>>(static_cast<std::size_t>(n));
  const double mx = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    (*probs)[i] = std::exp(logits[i] - mx);
    total += (*probs)[i];
  }
  for (double& p : *probs) p /= total;
  Plane2D centers(1, n);
  double cum = 0.0;
  for (int i = 0; i < n; ++i) {
    centers(0, i) = std::clamp(d_min + range * (cum + 0.5 * (*probs)[i]), d_min, d_max);
    cum += (*probs)[i];
  }
  return push(Primitive::kBinCenters, FeatureStack(std::vector<Plane2D>{std::move(centers)}), needs(width_logits),
              [width_logits, probs, range, n](Tape& t, int self) {
                const double f = t.fault(Primitive::kBinCenters);
                auto gc = t.nodes_[self].grad[0].data();
                // d c_i / d p_j = range * (1 if j < i, 1/2 if j == i)
                std::vector<double> gp(static_cast<std::size_t>(n));
                double suffix = 0.0;
                for (int j = n - 1; j >= 0; --j) {
                  gp[j] = range * (0.5 * gc[j] + suffix);
                  suffix += gc[j];
                }
                double dot = 0.0;
                for (int j = 0; j < n; ++j) dot += (*probs)[j] * gp[j];
                auto dst = t.grad_of(width_logits.id)[0].data();
                for (int j = 0; j < n; ++j) dst[j] += f * (*probs)[j] * (gp[j] - dot);
              });
}

Gradients Tape::backward(Var loss, double loss_adjoint) {
  if (consumed_) throw StateError("backward() called twice on the same tape");
  if (nodes_.empty()) throw StateError("backward() without a recorded forward pass");
  const Node& ln = node(loss);
  if (ln.value.channels() != 1 || ln.value.height() != 1 || ln.value.width() != 1) {
    throw DimensionError("backward() needs a scalar loss, got " + shape_of(ln.value));
  }
  if (ln.requires_grad) {
    grad_of(loss.id)[0](0, 0) = loss_adjoint;
    for (int id = loss.id; id >= 0; --id) {
      Node& n = nodes_[static_cast<std::size_t>(id)];
      if (n.adjoint && !n.grad.empty()) n.adjoint(*this, id);
    }
  }
  Gradients out;
  for (const auto& [name, id] : parameters_) {
    grad_of(id);
    out.emplace(name, std::move(nodes_[static_cast<std::size_t>(id)].grad));
  }
  consumed_ = true;
  return out;
}

}  // namespace focalkit::ad
