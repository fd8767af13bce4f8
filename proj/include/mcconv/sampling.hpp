#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <unordered_map>
#include <vector>

#include "mcconv/errors.hpp"
#include "mcconv/point_cloud.hpp"
#include "mcconv/rng.hpp"
#include "mcconv/voxel_grid.hpp"

namespace mcconv {

namespace sampling_detail {

// Incremental occupancy grid for dart throwing: dense head array when the
// cell count stays O(n), hashed otherwise. Chained storage keeps memory at
// one int per point either way.
class DartGrid {
 public:
  DartGrid(const Vec3& lo, const Vec3& hi, double cell, std::size_t capacity)
      : layout_(grid_detail::fit_layout(lo, hi, cell, capacity)), next_(capacity, -1) {
    dense_ = layout_.cell_count() <= std::max<std::size_t>(4096, 8 * capacity);
    if (dense_) head_dense_.assign(layout_.cell_count(), -1);
  }

  void insert(std::uint32_t slot, const Vec3& p) {
    const std::size_t cell = layout_.linear(layout_.cell_of(p));
    if (dense_) {
      next_[slot] = head_dense_[cell];
      head_dense_[cell] = static_cast<std::int64_t>(slot);
    } else {
      auto it = head_hashed_.try_emplace(cell, -1).first;
      next_[slot] = it->second;
      it->second = static_cast<std::int64_t>(slot);
    }
  }

  template <typename PosFn>
  bool any_within(const Vec3& q, double r, PosFn&& position_of) const {
    const double r2 = r * r;
    std::array<int, 3> center;
    for (int a = 0; a < 3; ++a) {
      center[a] = static_cast<int>(std::floor((q[a] - layout_.origin[a]) / layout_.cell_size));
    }
    for (int dz = -1; dz <= 1; ++dz) {
      int cz = center[2] + dz;
      if (cz < 0 || cz >= layout_.dims[2]) continue;
      for (int dy = -1; dy <= 1; ++dy) {
        int cy = center[1] + dy;
        if (cy < 0 || cy >= layout_.dims[1]) continue;
        for (int dx = -1; dx <= 1; ++dx) {
          int cx = center[0] + dx;
          if (cx < 0 || cx >= layout_.dims[0]) continue;
          std::int64_t node = head_of(layout_.linear({cx, cy, cz}));
          while (node >= 0) {
            if ((position_of(static_cast<std::uint32_t>(node)) - q).squared_norm() < r2) {
              return true;
            }
            node = next_[node];
          }
        }
      }
    }
    return false;
  }

 private:
  std::int64_t head_of(std::size_t cell) const {
    if (dense_) return head_dense_[cell];
    auto it = head_hashed_.find(cell);
    return it == head_hashed_.end() ? -1 : it->second;
  }

  grid_detail::CellLayout layout_;
  bool dense_ = true;
  std::vector<std::int64_t> head_dense_;
  std::unordered_map<std::size_t, std::int64_t> head_hashed_;
  std::vector<std::int64_t> next_;
};

}  // namespace sampling_detail

// Poisson-disk subset by grid-accelerated dart throwing over a seeded random
// permutation: a point is accepted iff no already-accepted point of the same
// batch lies strictly within r_p. The result is maximal over the visited
// order (every rejected point has an accepted point within r_p) and its size
// varies with the input. Returned indices ascend.
inline std::vector<std::uint32_t> poisson_sample(const PointCloud& cloud, double r_p,
                                                 const Rng& rng, std::uint64_t salt = 0) {
  if (!(r_p > 0.0)) throw InvalidParameterError("poisson_sample: r_p must be positive");
  std::vector<std::uint32_t> selected;
  if (cloud.empty()) return selected;

  const std::int32_t max_id = cloud.max_batch_id();
  std::vector<std::vector<std::uint32_t>> by_batch(static_cast<std::size_t>(max_id) + 1);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    by_batch[cloud.batch_id(i)].push_back(static_cast<std::uint32_t>(i));
  }

  for (std::int32_t b = 0; b <= max_id; ++b) {
    auto& members = by_batch[b];
    if (members.empty()) continue;
    Vec3 lo = cloud.position(members[0]);
    Vec3 hi = lo;
    for (std::uint32_t i : members) {
      lo = component_min(lo, cloud.position(i));
      hi = component_max(hi, cloud.position(i));
    }
    RngStream stream = rng.stream("poisson-disk", salt * 4096 + static_cast<std::uint64_t>(b));
    shuffle(members, stream);

    sampling_detail::DartGrid grid(lo, hi, r_p, members.size());
    std::vector<std::uint32_t> accepted;  // slots into `accepted` itself
    auto position_of = [&](std::uint32_t slot) { return cloud.position(accepted[slot]); };
    for (std::uint32_t idx : members) {
      const Vec3& p = cloud.position(idx);
      if (grid.any_within(p, r_p, position_of)) continue;
      grid.insert(static_cast<std::uint32_t>(accepted.size()), p);
      accepted.push_back(idx);
    }
    selected.insert(selected.end(), accepted.begin(), accepted.end());
  }
  std::sort(selected.begin(), selected.end());
  return selected;
}

// Iterative farthest-point selection from a random start; fixed output count.
// Kept for scalability comparisons and illustrations, not used by the point
// hierarchies.
inline std::vector<std::uint32_t> farthest_point_sample(const PointCloud& cloud, std::size_t count,
                                                        const Rng& rng) {
  if (count < 1 || count > cloud.size()) {
    throw InvalidParameterError("farthest_point_sample: count out of range");
  }
  RngStream stream = rng.stream("farthest-point");
  std::vector<std::uint32_t> selected;
  selected.reserve(count);
  std::uint32_t current = static_cast<std::uint32_t>(stream.below(cloud.size()));
  selected.push_back(current);

  std::vector<double> min_d2(cloud.size(), std::numeric_limits<double>::infinity());
  for (std::size_t step = 1; step < count; ++step) {
    const Vec3& p = cloud.position(current);
    std::uint32_t best = 0;
    double best_d2 = -1.0;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      double d2 = (cloud.position(i) - p).squared_norm();
      if (d2 < min_d2[i]) min_d2[i] = d2;
      if (min_d2[i] > best_d2) {
        best_d2 = min_d2[i];
        best = static_cast<std::uint32_t>(i);
      }
    }
    current = best;
    selected.push_back(current);
  }
  return selected;
}

// Largest integer satisfying the packing bound n < pi (r + r_p/2)^3 /
// (3 sqrt(2) r_p^3) on how many r_p-separated points fit in a radius-r ball.
inline std::int64_t max_neighbors_bound(double r, double r_p) {
  if (!(r_p > 0.0) || r_p > r) {
    throw InvalidParameterError("max_neighbors_bound: requires 0 < r_p <= r");
  }
  const double s = r + 0.5 * r_p;
  const double bound = std::numbers::pi * s * s * s / (3.0 * std::sqrt(2.0) * r_p * r_p * r_p);
  return static_cast<std::int64_t>(std::ceil(bound)) - 1;
}

// Multi-resolution point hierarchy built by successive Poisson-disk passes.
// Level 0 is the input; each deeper level is an index-subset of its parent
// level with pairwise distances >= its radius.
struct Hierarchy {
  std::vector<PointCloud> levels;
  std::vector<double> radii;  // radii[l] for l >= 1; radii[0] = 0
  std::vector<std::vector<std::uint32_t>> parent_indices;  // per level l >= 1

  std::size_t level_count() const { return levels.size(); }
};

inline Hierarchy build_hierarchy(const PointCloud& cloud, std::span<const double> radii,
                                 const Rng& rng) {
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0.0) || (i > 0 && radii[i] <= radii[i - 1])) {
      throw InvalidParameterError("build_hierarchy: radii must be positive and strictly increasing");
    }
  }
  Hierarchy h;
  h.levels.push_back(cloud);
  h.radii.push_back(0.0);
  h.parent_indices.emplace_back();
  for (std::size_t level = 0; level < radii.size(); ++level) {
    auto picked = poisson_sample(h.levels.back(), radii[level], rng, level + 1);
    h.levels.push_back(h.levels.back().subset(picked));
    h.radii.push_back(radii[level]);
    h.parent_indices.push_back(std::move(picked));
  }
  return h;
}

}  // namespace mcconv
