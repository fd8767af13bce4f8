#pragma once

#include <cmath>
#include <numbers>

#include "mcconv/errors.hpp"
#include "mcconv/parallel.hpp"
#include "mcconv/point_cloud.hpp"
#include "mcconv/voxel_grid.hpp"

namespace mcconv {

enum class DensityKernel { Gaussian };

struct DensityParams {
  double sigma = 0.0;  // bandwidth, scene units; callers default to 0.25 * r
  DensityKernel kernel = DensityKernel::Gaussian;

  void validate() const {
    if (!(sigma > 0.0)) throw InvalidParameterError("DensityParams: sigma must be positive");
  }
};

// Gaussian density-estimation kernel, unit integral over the real line.
inline double density_kernel_1d(double t) {
  constexpr double inv_sqrt_two_pi = 0.39894228040143268;
  return inv_sqrt_two_pi * std::exp(-0.5 * t * t);
}

// Fills the pdf slot of every (query, neighbor) pair with the kernel density
// estimate over that query's neighborhood:
//   p(y_j | x) = 1 / (|N(x)| sigma^3) * sum_k prod_d h((y_{j,d} - y_{k,d}) / sigma)
// The sum runs over the same neighborhood the pair came from, so a point's
// density differs between receptive fields and cannot be precomputed per
// point. Every produced value is strictly positive (the k = j self term
// contributes h(0)^3).
inline void estimate_pdf(NeighborTable& table, const PointCloud& sources,
                         const DensityParams& params, int threads = 0) {
  params.validate();
  if (table.source_size != sources.size()) {
    throw IndexMismatchError("estimate_pdf: table was built over a different source cloud");
  }
  if (threads <= 0) threads = default_threads();

  const double sigma = params.sigma;
  const double inv_two_sigma_sq = 1.0 / (2.0 * sigma * sigma);
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const double gauss3 = 1.0 / (two_pi * std::sqrt(two_pi));  // (2*pi)^(-3/2)

  parallel_chunks(table.query_count(), threads, [&](std::size_t begin, std::size_t end, int) {
    for (std::size_t q = begin; q < end; ++q) {
      const std::uint64_t lo = table.begin(q);
      const std::uint64_t hi = table.end(q);
      const std::size_t count = static_cast<std::size_t>(hi - lo);
      if (count == 0) continue;
      const double norm = gauss3 / (static_cast<double>(count) * sigma * sigma * sigma);
      for (std::uint64_t a = lo; a < hi; ++a) {
        const Vec3& yj = sources.position(table.pairs[a].index);
        double sum = 0.0;
        for (std::uint64_t b = lo; b < hi; ++b) {
          const Vec3 d = yj - sources.position(table.pairs[b].index);
          sum += std::exp(-d.squared_norm() * inv_two_sigma_sq);
        }
        table.pairs[a].pdf = norm * sum;
      }
    }
  });
  table.has_pdf = true;
}

}  // namespace mcconv
