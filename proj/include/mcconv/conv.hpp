#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mcconv/errors.hpp"
#include "mcconv/kernel_mlp.hpp"
#include "mcconv/parallel.hpp"
#include "mcconv/point_cloud.hpp"
#include "mcconv/voxel_grid.hpp"

namespace mcconv {

// SingleFeature: one kernel per channel, output channel m convolves input
// channel m (L = M). MultiFeature: output channel o sums the convolutions of
// every input channel, needing M * L kernels.
enum class ConvMode { SingleFeature, MultiFeature };

struct ConvLayerConfig {
  ConvMode mode = ConvMode::SingleFeature;
  int in_channels = 1;
  int out_channels = 1;
  double radius_fraction = 0.0;   // receptive field as fraction of bbox diag
  double sigma_fraction = 0.25;   // KDE bandwidth as fraction of the radius
  bool avg_baseline = false;      // AVG ablation: pdf forced to 1
  std::vector<KernelParams> kernel_block;

  int kernel_count() const {
    return mode == ConvMode::SingleFeature ? in_channels : in_channels * out_channels;
  }

  void validate() const {
    if (in_channels < 1 || out_channels < 1) {
      throw InvalidParameterError("ConvLayerConfig: channel counts must be >= 1");
    }
    if (mode == ConvMode::SingleFeature && in_channels != out_channels) {
      throw InvalidParameterError("ConvLayerConfig: SingleFeature requires L = M");
    }
    if (!(radius_fraction > 0.0)) {
      throw InvalidParameterError("ConvLayerConfig: radius_fraction must be positive");
    }
    int have = 0;
    for (const KernelParams& t : kernel_block) have += t.outputs;
    if (have < kernel_count()) {
      throw ShapeMismatchError("ConvLayerConfig: kernel block provides " + std::to_string(have) +
                               " kernels, layer needs " + std::to_string(kernel_count()));
    }
  }
};

// Kernels are packed trunk-major: kernel index k lives in the trunk covering
// offset k, MultiFeature index (o, m) maps to k = o * M + m. The trailing
// trunk may have unused outputs.
inline ConvLayerConfig make_conv_config(ConvMode mode, int in_channels, int out_channels,
                                        double radius_fraction, RngStream& init_stream,
                                        int hidden = 8, int trunk_outputs = 8) {
  ConvLayerConfig config;
  config.mode = mode;
  config.in_channels = in_channels;
  config.out_channels = out_channels;
  config.radius_fraction = radius_fraction;
  const int needed = config.kernel_count();
  const int trunks = (needed + trunk_outputs - 1) / trunk_outputs;
  config.kernel_block.reserve(trunks);
  for (int t = 0; t < trunks; ++t) {
    config.kernel_block.push_back(kernel_init(init_stream, hidden, trunk_outputs));
  }
  config.validate();
  return config;
}

namespace conv_detail {

inline void check_conv_inputs(int in_channels, int out_channels, const PointCloud& in_cloud,
                              const FeatureMap& in_features, const PointCloud& out_cloud,
                              const NeighborTable& table, bool needs_pdf) {
  if (in_features.rows() != in_cloud.size() || in_features.channels() != in_channels) {
    throw ShapeMismatchError("mc_conv: input features are " + std::to_string(in_features.rows()) +
                             "x" + std::to_string(in_features.channels()) + ", expected " +
                             std::to_string(in_cloud.size()) + "x" + std::to_string(in_channels));
  }
  (void)out_channels;
  if (table.source_size != in_cloud.size()) {
    throw IndexMismatchError("mc_conv: neighbor table sources do not match input cloud");
  }
  if (table.query_count() != out_cloud.size()) {
    throw IndexMismatchError("mc_conv: neighbor table queries do not match output cloud");
  }
  if (needs_pdf && !table.has_pdf) {
    throw NotEstimatedError("mc_conv: pdf values not estimated (run estimate_pdf first)");
  }
}

// Shared Eq. 4 estimator loop. `eval(delta, values, scratch)` must fill
// `needed` kernel values. Accumulation per output point runs in ascending
// neighbor order; parallelism is across output points only, so feature
// outputs are bit-stable for any thread count.
template <typename EvalFn>
FeatureMap forward_engine(ConvMode mode, int in_channels, int out_channels, int needed,
                          const PointCloud& in_cloud, const FeatureMap& in_features,
                          const PointCloud& out_cloud, const NeighborTable& table, bool avg_mode,
                          int threads, EvalFn&& eval) {
  FeatureMap out(out_cloud.size(), out_channels);
  const double inv_r = 1.0 / table.radius;
  if (threads <= 0) threads = default_threads();

  parallel_chunks(out_cloud.size(), threads, [&](std::size_t begin, std::size_t end, int) {
    KernelScratch scratch;
    std::vector<double> kernels(needed);
    for (std::size_t q = begin; q < end; ++q) {
      const std::uint64_t lo = table.begin(q);
      const std::uint64_t hi = table.end(q);
      if (lo == hi) continue;  // empty neighborhood outputs zeros
      auto out_row = out.row(q);
      const Vec3& x = out_cloud.position(q);
      for (std::uint64_t a = lo; a < hi; ++a) {
        const std::uint32_t j = table.pairs[a].index;
        const Vec3 delta = (x - in_cloud.position(j)) * inv_r;
        eval(delta, std::span<double>(kernels), scratch);
        const double w = avg_mode ? 1.0 : 1.0 / table.pairs[a].pdf;
        const auto f = in_features.row(j);
        if (mode == ConvMode::SingleFeature) {
          for (int m = 0; m < in_channels; ++m) out_row[m] += f[m] * kernels[m] * w;
        } else {
          for (int o = 0; o < out_channels; ++o) {
            const double* g = kernels.data() + static_cast<std::size_t>(o) * in_channels;
            double s = 0.0;
            for (int m = 0; m < in_channels; ++m) s += f[m] * g[m];
            out_row[o] += s * w;
          }
        }
      }
      const double inv_n = 1.0 / static_cast<double>(hi - lo);
      for (int o = 0; o < out_channels; ++o) out_row[o] *= inv_n;
    }
  });
  return out;
}

// Evaluates every trunk of a kernel block into a contiguous value buffer.
struct TrunkEval {
  const std::vector<KernelParams>* trunks;
  int needed;

  void operator()(const Vec3& delta, std::span<double> out, KernelScratch& scratch) const {
    int at = 0;
    for (const KernelParams& trunk : *trunks) {
      if (at >= needed) break;
      const int take = std::min(trunk.outputs, needed - at);
      if (take == trunk.outputs) {
        kernel_forward(trunk, delta, out.subspan(at, take), scratch);
      } else {
        scratch.trunk_out.resize(trunk.outputs);
        kernel_forward(trunk, delta, scratch.trunk_out, scratch);
        for (int s = 0; s < take; ++s) out[at + s] = scratch.trunk_out[s];
      }
      at += take;
    }
  }
};

}  // namespace conv_detail

// Monte Carlo convolution estimate (density-normalized unless the config's
// AVG ablation flag is set) of the input features at every output point:
//   out(x) = 1/|N(x)| * sum_j f(y_j) g((x - y_j)/r) / p(y_j | x)
// Queries with empty neighborhoods output zero rows.
inline FeatureMap mc_conv_forward(const ConvLayerConfig& config, const PointCloud& in_cloud,
                                  const FeatureMap& in_features, const PointCloud& out_cloud,
                                  const NeighborTable& table, int threads = 0) {
  config.validate();
  conv_detail::check_conv_inputs(config.in_channels, config.out_channels, in_cloud, in_features,
                                 out_cloud, table, !config.avg_baseline);
  conv_detail::TrunkEval eval{&config.kernel_block, config.kernel_count()};
  return conv_detail::forward_engine(config.mode, config.in_channels, config.out_channels,
                                     config.kernel_count(), in_cloud, in_features, out_cloud,
                                     table, config.avg_baseline, threads, eval);
}

// Same estimator with a fixed analytic kernel (used by diagnostics such as
// the edge-detection experiment); single input and output channel.
template <typename KernelFn>
FeatureMap mc_conv_forward_fixed(KernelFn&& kernel, const PointCloud& in_cloud,
                                 const FeatureMap& in_features, const PointCloud& out_cloud,
                                 const NeighborTable& table, bool avg_mode, int threads = 0) {
  conv_detail::check_conv_inputs(1, 1, in_cloud, in_features, out_cloud, table, !avg_mode);
  auto eval = [&kernel](const Vec3& delta, std::span<double> out, KernelScratch&) {
    out[0] = kernel(delta);
  };
  return conv_detail::forward_engine(ConvMode::SingleFeature, 1, 1, 1, in_cloud, in_features,
                                     out_cloud, table, avg_mode, threads, eval);
}

struct ConvGradients {
  FeatureMap in_features;             // dL/d(input features)
  std::vector<KernelParams> kernels;  // dL/d(kernel block), trunk by trunk
};

namespace conv_detail {

inline void add_params(KernelParams& dst, const KernelParams& src) {
  auto add = [](std::vector<double>& d, const std::vector<double>& s) {
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
  };
  add(dst.w1, src.w1);
  add(dst.b1, src.b1);
  add(dst.w2, src.w2);
  add(dst.b2, src.b2);
  add(dst.w3, src.w3);
  add(dst.b3, src.b3);
}

// CSR transpose of the neighbor table: for each source point, the list of
// (query, pair slot) referencing it, queries ascending.
struct ReverseAdjacency {
  std::vector<std::uint64_t> offsets;
  std::vector<std::pair<std::uint32_t, std::uint64_t>> entries;
};

inline ReverseAdjacency reverse_adjacency(const NeighborTable& table, std::size_t source_count) {
  ReverseAdjacency rev;
  rev.offsets.assign(source_count + 1, 0);
  for (const NeighborPair& p : table.pairs) ++rev.offsets[p.index + 1];
  for (std::size_t j = 0; j < source_count; ++j) rev.offsets[j + 1] += rev.offsets[j];
  rev.entries.resize(table.pairs.size());
  std::vector<std::uint64_t> cursor(rev.offsets.begin(), rev.offsets.end() - 1);
  for (std::size_t q = 0; q < table.query_count(); ++q) {
    for (std::uint64_t a = table.begin(q); a < table.end(q); ++a) {
      rev.entries[cursor[table.pairs[a].index]++] = {static_cast<std::uint32_t>(q), a};
    }
  }
  return rev;
}

}  // namespace conv_detail

// Backward pass of mc_conv_forward. Kernel-parameter gradients follow the MC
// backprop estimate (the same per-pair weights chained through the MLP);
// feature gradients transpose the forward wiring. Feature gradients are
// bit-stable for any thread count; kernel gradients are bit-stable for a
// fixed thread count (per-thread partials merge in chunk order).
inline ConvGradients mc_conv_backward(const ConvLayerConfig& config, const PointCloud& in_cloud,
                                      const FeatureMap& in_features, const PointCloud& out_cloud,
                                      const NeighborTable& table, const FeatureMap& upstream,
                                      int threads = 0) {
  config.validate();
  conv_detail::check_conv_inputs(config.in_channels, config.out_channels, in_cloud, in_features,
                                 out_cloud, table, !config.avg_baseline);
  if (upstream.rows() != out_cloud.size() || upstream.channels() != config.out_channels) {
    throw ShapeMismatchError("mc_conv_backward: upstream shape mismatch");
  }
  if (threads <= 0) threads = default_threads();

  const int M = config.in_channels;
  const int L = config.out_channels;
  const bool multi = config.mode == ConvMode::MultiFeature;
  const double inv_r = 1.0 / table.radius;
  const std::size_t trunk_count = config.kernel_block.size();
  const int needed = config.kernel_count();

  ConvGradients grads;
  grads.in_features = FeatureMap(in_cloud.size(), M);
  grads.kernels.reserve(trunk_count);
  for (const KernelParams& t : config.kernel_block) {
    grads.kernels.push_back(KernelParams::zeros(t.hidden, t.outputs));
  }

  // Pass A: kernel-parameter gradients, per-chunk partials merged in order.
  const int chunk_count = std::max(1, std::min<int>(threads, static_cast<int>(out_cloud.size())));
  std::vector<std::vector<KernelParams>> partials(chunk_count);
  for (auto& partial : partials) {
    partial.reserve(trunk_count);
    for (const KernelParams& t : config.kernel_block) {
      partial.push_back(KernelParams::zeros(t.hidden, t.outputs));
    }
  }
  parallel_chunks(out_cloud.size(), chunk_count, [&](std::size_t begin, std::size_t end, int chunk) {
    KernelScratch scratch;
    std::vector<double> trunk_upstream;
    for (std::size_t q = begin; q < end; ++q) {
      const std::uint64_t lo = table.begin(q);
      const std::uint64_t hi = table.end(q);
      if (lo == hi) continue;
      const auto u = upstream.row(q);
      const double inv_n = 1.0 / static_cast<double>(hi - lo);
      const Vec3& x = out_cloud.position(q);
      for (std::uint64_t a = lo; a < hi; ++a) {
        const std::uint32_t j = table.pairs[a].index;
        const Vec3 delta = (x - in_cloud.position(j)) * inv_r;
        const double base =
            config.avg_baseline ? inv_n : inv_n / table.pairs[a].pdf;
        const auto f = in_features.row(j);
        int at = 0;
        for (std::size_t t = 0; t < trunk_count; ++t) {
          const int k_out = config.kernel_block[t].outputs;
          trunk_upstream.assign(k_out, 0.0);
          bool any = false;
          for (int s = 0; s < k_out && at + s < needed; ++s) {
            const int idx = at + s;
            double coef;
            if (multi) {
              coef = u[idx / M] * f[idx % M] * base;
            } else {
              coef = u[idx] * f[idx] * base;
            }
            if (coef != 0.0) {
              trunk_upstream[s] = coef;
              any = true;
            }
          }
          if (any) {
            kernel_backward_accumulate(config.kernel_block[t], delta, trunk_upstream,
                                       partials[chunk][t], scratch);
          }
          at += k_out;
          if (at >= needed) break;
        }
      }
    }
  });
  for (int c = 0; c < chunk_count; ++c) {
    for (std::size_t t = 0; t < trunk_count; ++t) {
      conv_detail::add_params(grads.kernels[t], partials[c][t]);
    }
  }

  // Pass B: feature gradients via the transposed table; each source point
  // sums over its referencing queries in ascending query order.
  const auto rev = conv_detail::reverse_adjacency(table, in_cloud.size());
  parallel_chunks(in_cloud.size(), threads, [&](std::size_t begin, std::size_t end, int) {
    KernelScratch scratch;
    std::vector<double> kernels(needed);
    conv_detail::TrunkEval eval{&config.kernel_block, needed};
    for (std::size_t j = begin; j < end; ++j) {
      auto grad_row = grads.in_features.row(j);
      for (std::uint64_t e = rev.offsets[j]; e < rev.offsets[j + 1]; ++e) {
        const auto [q, a] = rev.entries[e];
        const double n_q = static_cast<double>(table.end(q) - table.begin(q));
        const double base =
            (config.avg_baseline ? 1.0 : 1.0 / table.pairs[a].pdf) / n_q;
        const Vec3 delta = (out_cloud.position(q) - in_cloud.position(j)) * inv_r;
        eval(delta, std::span<double>(kernels), scratch);
        const auto u = upstream.row(q);
        if (multi) {
          for (int m = 0; m < M; ++m) {
            double s = 0.0;
            for (int o = 0; o < L; ++o) s += u[o] * kernels[static_cast<std::size_t>(o) * M + m];
            grad_row[m] += s * base;
          }
        } else {
          for (int m = 0; m < M; ++m) grad_row[m] += u[m] * kernels[m] * base;
        }
      }
    }
  });
  return grads;
}

// One input of a multi-sampling convolution: features sampled on `cloud`,
// convolved onto the shared output sampling through its own neighbor table
// (pdf estimated against `cloud`) and its own receptive radius.
struct SamplingInput {
  const ConvLayerConfig* config = nullptr;
  const PointCloud* cloud = nullptr;
  const FeatureMap* features = nullptr;
  const NeighborTable* table = nullptr;
};

// Convolves each input onto out_cloud and concatenates the per-input output
// channels in argument order.
inline FeatureMap multi_sampling_concat(std::span<const SamplingInput> inputs,
                                        const PointCloud& out_cloud, int threads = 0) {
  if (inputs.empty()) throw EmptyInputError("multi_sampling_concat: no inputs");
  int total_channels = 0;
  for (const SamplingInput& in : inputs) total_channels += in.config->out_channels;
  FeatureMap out(out_cloud.size(), total_channels);
  int channel_base = 0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const SamplingInput& in = inputs[i];
    FeatureMap part = with_error_prefix("input " + std::to_string(i) + ": ", [&] {
      return mc_conv_forward(*in.config, *in.cloud, *in.features, out_cloud, *in.table, threads);
    });
    for (std::size_t row = 0; row < out.rows(); ++row) {
      auto dst = out.row(row);
      auto src = part.row(row);
      for (int c = 0; c < part.channels(); ++c) dst[channel_base + c] = src[c];
    }
    channel_base += part.channels();
  }
  return out;
}

}  // namespace mcconv
