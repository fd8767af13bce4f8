#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "mcconv/errors.hpp"
#include "mcconv/geometry.hpp"
#include "mcconv/rng.hpp"

namespace mcconv {

// Parameters of one shared kernel MLP: 3 -> hidden -> hidden -> outputs,
// ReLU on the hidden layers, linear output so kernel values may go negative.
// One trunk produces `outputs` kernel values per offset evaluation.
struct KernelParams {
  int hidden = 8;
  int outputs = 8;
  std::vector<double> w1;  // hidden x 3, row-major
  std::vector<double> b1;  // hidden
  std::vector<double> w2;  // hidden x hidden
  std::vector<double> b2;  // hidden
  std::vector<double> w3;  // outputs x hidden
  std::vector<double> b3;  // outputs

  static KernelParams zeros(int hidden, int outputs) {
    if (hidden < 1 || outputs < 1) {
      throw InvalidParameterError("KernelParams: hidden and outputs must be >= 1");
    }
    KernelParams p;
    p.hidden = hidden;
    p.outputs = outputs;
    p.w1.assign(static_cast<std::size_t>(hidden) * 3, 0.0);
    p.b1.assign(hidden, 0.0);
    p.w2.assign(static_cast<std::size_t>(hidden) * hidden, 0.0);
    p.b2.assign(hidden, 0.0);
    p.w3.assign(static_cast<std::size_t>(outputs) * hidden, 0.0);
    p.b3.assign(outputs, 0.0);
    return p;
  }

  std::size_t parameter_count() const {
    return w1.size() + b1.size() + w2.size() + b2.size() + w3.size() + b3.size();
  }
};

// Zero-mean uniform init scaled by 1 / sqrt(fan_in) per layer; biases zero.
inline KernelParams kernel_init(RngStream& stream, int hidden, int outputs) {
  KernelParams p = KernelParams::zeros(hidden, outputs);
  auto fill = [&stream](std::vector<double>& w, int fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double& v : w) v = stream.uniform(-bound, bound);
  };
  fill(p.w1, 3);
  fill(p.w2, hidden);
  fill(p.w3, hidden);
  return p;
}

inline KernelParams kernel_init(const Rng& rng, int hidden, int outputs) {
  RngStream stream = rng.stream("kernel-init");
  return kernel_init(stream, hidden, outputs);
}

// Reused hidden-activation and backward buffers; one per thread.
struct KernelScratch {
  std::vector<double> h1;
  std::vector<double> h2;
  std::vector<double> g1;
  std::vector<double> g2;
  std::vector<double> trunk_out;
};

namespace mlp_detail {

// Fills scratch.h1/.h2 with the post-ReLU hidden activations.
inline void forward_hidden(const KernelParams& p, const Vec3& offset, KernelScratch& scratch) {
  const int h = p.hidden;
  scratch.h1.resize(h);
  scratch.h2.resize(h);
  for (int i = 0; i < h; ++i) {
    const double* row = p.w1.data() + static_cast<std::size_t>(i) * 3;
    double a = row[0] * offset.x + row[1] * offset.y + row[2] * offset.z + p.b1[i];
    scratch.h1[i] = a > 0.0 ? a : 0.0;
  }
  for (int i = 0; i < h; ++i) {
    const double* row = p.w2.data() + static_cast<std::size_t>(i) * h;
    double a = p.b2[i];
    for (int k = 0; k < h; ++k) a += row[k] * scratch.h1[k];
    scratch.h2[i] = a > 0.0 ? a : 0.0;
  }
}

}  // namespace mlp_detail

// Evaluates all `outputs` kernel values at a normalized offset. Offsets with
// norm slightly above 1 are evaluated as-is.
inline void kernel_forward(const KernelParams& p, const Vec3& offset, std::span<double> out,
                           KernelScratch& scratch) {
  mlp_detail::forward_hidden(p, offset, scratch);
  const int h = p.hidden;
  for (int o = 0; o < p.outputs; ++o) {
    const double* row = p.w3.data() + static_cast<std::size_t>(o) * h;
    double a = p.b3[o];
    for (int k = 0; k < h; ++k) a += row[k] * scratch.h2[k];
    out[o] = a;
  }
}

inline std::vector<double> kernel_forward(const KernelParams& p, const Vec3& offset) {
  std::vector<double> out(p.outputs);
  KernelScratch scratch;
  kernel_forward(p, offset, out, scratch);
  return out;
}

// Accumulates d(upstream . output)/d(params) into `grad` by reverse
// accumulation through both ReLU layers; a closed gate (pre-activation <= 0)
// passes no gradient. `grad` must match p's shape.
inline void kernel_backward_accumulate(const KernelParams& p, const Vec3& offset,
                                       std::span<const double> upstream, KernelParams& grad,
                                       KernelScratch& scratch) {
  mlp_detail::forward_hidden(p, offset, scratch);
  const int h = p.hidden;
  scratch.g2.resize(h);
  scratch.g1.resize(h);

  // Output layer: dL/db3 = u, dL/dW3[o][k] = u[o] * h2[k].
  for (int k = 0; k < h; ++k) scratch.g2[k] = 0.0;
  for (int o = 0; o < p.outputs; ++o) {
    const double u = upstream[o];
    grad.b3[o] += u;
    if (u == 0.0) continue;
    const double* row = p.w3.data() + static_cast<std::size_t>(o) * h;
    double* grow = grad.w3.data() + static_cast<std::size_t>(o) * h;
    for (int k = 0; k < h; ++k) {
      grow[k] += u * scratch.h2[k];
      scratch.g2[k] += u * row[k];
    }
  }
  // Second hidden layer, gated by h2 > 0.
  for (int k = 0; k < h; ++k) scratch.g1[k] = 0.0;
  for (int i = 0; i < h; ++i) {
    if (scratch.h2[i] <= 0.0) continue;
    const double g = scratch.g2[i];
    grad.b2[i] += g;
    const double* row = p.w2.data() + static_cast<std::size_t>(i) * h;
    double* grow = grad.w2.data() + static_cast<std::size_t>(i) * h;
    for (int k = 0; k < h; ++k) {
      grow[k] += g * scratch.h1[k];
      scratch.g1[k] += g * row[k];
    }
  }
  // First hidden layer, gated by h1 > 0.
  for (int i = 0; i < h; ++i) {
    if (scratch.h1[i] <= 0.0) continue;
    const double g = scratch.g1[i];
    grad.b1[i] += g;
    double* grow = grad.w1.data() + static_cast<std::size_t>(i) * 3;
    grow[0] += g * offset.x;
    grow[1] += g * offset.y;
    grow[2] += g * offset.z;
  }
}

// Gradient of (upstream . kernel_forward(p, offset)) with respect to every
// parameter, as a KernelParams-shaped object.
inline KernelParams kernel_backward(const KernelParams& p, const Vec3& offset,
                                    std::span<const double> upstream) {
  KernelParams grad = KernelParams::zeros(p.hidden, p.outputs);
  KernelScratch scratch;
  kernel_backward_accumulate(p, offset, upstream, grad, scratch);
  return grad;
}

}  // namespace mcconv
