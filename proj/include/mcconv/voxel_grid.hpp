#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "mcconv/errors.hpp"
#include "mcconv/parallel.hpp"
#include "mcconv/point_cloud.hpp"

namespace mcconv {

namespace grid_detail {

struct CellLayout {
  Vec3 origin;
  double cell_size = 1.0;
  std::array<int, 3> dims{1, 1, 1};

  std::size_t cell_count() const {
    return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  }

  std::array<int, 3> cell_of(const Vec3& p) const {
    std::array<int, 3> c;
    for (int a = 0; a < 3; ++a) {
      double t = std::floor((p[a] - origin[a]) / cell_size);
      int i = static_cast<int>(t);
      c[a] = std::clamp(i, 0, dims[a] - 1);
    }
    return c;
  }

  std::size_t linear(const std::array<int, 3>& c) const {
    return (static_cast<std::size_t>(c[2]) * dims[1] + c[1]) * dims[0] + c[0];
  }
};

// Chooses a layout whose cell size is >= requested and whose total cell
// count stays O(point_count), so degenerate radii cannot blow up memory.
inline CellLayout fit_layout(const Vec3& lo, const Vec3& hi, double requested_cell,
                             std::size_t point_count) {
  CellLayout layout;
  layout.origin = lo;
  layout.cell_size = requested_cell;
  const std::size_t max_cells = std::max<std::size_t>(4096, 8 * point_count);
  for (;;) {
    std::size_t total = 1;
    for (int a = 0; a < 3; ++a) {
      double extent = hi[a] - lo[a];
      int d = std::max(1, static_cast<int>(std::ceil(extent / layout.cell_size)));
      // A point exactly on the max face must still land inside.
      while (lo[a] + d * layout.cell_size < hi[a]) ++d;
      layout.dims[a] = d;
      total *= static_cast<std::size_t>(d);
    }
    if (total <= max_cells) return layout;
    double grow = std::cbrt(static_cast<double>(total) / static_cast<double>(max_cells));
    layout.cell_size *= std::max(grow, 1.0 + 1e-9);
  }
}

}  // namespace grid_detail

// Uniform voxel grid over the points of one batch id. point_order groups
// point indices by cell; within a cell indices ascend. cell_size may exceed
// the requested value (see fit_layout) but never falls below it.
struct VoxelGrid {
  double cell_size = 0.0;
  Vec3 origin;
  std::array<int, 3> dims{1, 1, 1};
  std::vector<std::pair<std::uint64_t, std::uint64_t>> cell_ranges;
  std::vector<std::uint32_t> point_order;
  std::int32_t batch_tag = 0;
  std::size_t source_size = 0;  // size of the cloud the grid was built over

  grid_detail::CellLayout layout() const { return {origin, cell_size, dims}; }
};

// Flat neighbor list: pair (index, pdf) entries grouped per query via
// offsets. pdf entries hold quiet placeholders until estimate_pdf runs.
struct NeighborPair {
  std::uint32_t index = 0;
  double pdf = 0.0;
};

struct NeighborTable {
  std::vector<std::uint64_t> offsets;  // size query_count + 1
  std::vector<NeighborPair> pairs;
  double radius = 0.0;
  bool has_pdf = false;
  std::size_t source_size = 0;

  std::size_t query_count() const { return offsets.empty() ? 0 : offsets.size() - 1; }
  std::uint64_t begin(std::size_t q) const { return offsets[q]; }
  std::uint64_t end(std::size_t q) const { return offsets[q + 1]; }
  std::size_t neighbor_count(std::size_t q) const {
    return static_cast<std::size_t>(end(q) - begin(q));
  }
};

// One grid per batch id present in the cloud, each covering that batch's
// bounding box. Total work is linear in the point count.
inline std::vector<VoxelGrid> build_grid(const PointCloud& cloud, double cell_size) {
  if (!(cell_size > 0.0)) throw InvalidParameterError("build_grid: cell_size must be positive");
  if (cloud.empty()) throw EmptyInputError("build_grid: empty cloud");

  const std::int32_t max_id = cloud.max_batch_id();
  std::vector<std::vector<std::uint32_t>> by_batch(static_cast<std::size_t>(max_id) + 1);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    by_batch[cloud.batch_id(i)].push_back(static_cast<std::uint32_t>(i));
  }

  std::vector<VoxelGrid> grids;
  for (std::int32_t b = 0; b <= max_id; ++b) {
    const auto& members = by_batch[b];
    if (members.empty()) continue;

    Vec3 lo = cloud.position(members[0]);
    Vec3 hi = lo;
    for (std::uint32_t i : members) {
      lo = component_min(lo, cloud.position(i));
      hi = component_max(hi, cloud.position(i));
    }
    auto layout = grid_detail::fit_layout(lo, hi, cell_size, members.size());

    VoxelGrid grid;
    grid.cell_size = layout.cell_size;
    grid.origin = layout.origin;
    grid.dims = layout.dims;
    grid.batch_tag = b;
    grid.source_size = cloud.size();

    const std::size_t cells = layout.cell_count();
    std::vector<std::uint64_t> counts(cells, 0);
    std::vector<std::size_t> point_cell(members.size());
    for (std::size_t k = 0; k < members.size(); ++k) {
      point_cell[k] = layout.linear(layout.cell_of(cloud.position(members[k])));
      ++counts[point_cell[k]];
    }
    grid.cell_ranges.resize(cells);
    std::uint64_t running = 0;
    for (std::size_t c = 0; c < cells; ++c) {
      grid.cell_ranges[c] = {running, running + counts[c]};
      running += counts[c];
    }
    grid.point_order.resize(members.size());
    std::vector<std::uint64_t> cursor(cells);
    for (std::size_t c = 0; c < cells; ++c) cursor[c] = grid.cell_ranges[c].first;
    // members ascend, so each cell's slice ends up ascending too.
    for (std::size_t k = 0; k < members.size(); ++k) {
      grid.point_order[cursor[point_cell[k]]++] = members[k];
    }
    grids.push_back(std::move(grid));
  }
  return grids;
}

namespace grid_detail {

template <typename Visit>
void scan_ball(const VoxelGrid& grid, const PointCloud& sources, const Vec3& q, double r,
               Visit&& visit) {
  const auto layout = grid.layout();
  const double r2 = r * r;
  std::array<int, 3> center;
  for (int a = 0; a < 3; ++a) {
    center[a] = static_cast<int>(std::floor((q[a] - layout.origin[a]) / layout.cell_size));
  }
  for (int dz = -1; dz <= 1; ++dz) {
    int cz = center[2] + dz;
    if (cz < 0 || cz >= grid.dims[2]) continue;
    for (int dy = -1; dy <= 1; ++dy) {
      int cy = center[1] + dy;
      if (cy < 0 || cy >= grid.dims[1]) continue;
      for (int dx = -1; dx <= 1; ++dx) {
        int cx = center[0] + dx;
        if (cx < 0 || cx >= grid.dims[0]) continue;
        auto [begin, end] = grid.cell_ranges[layout.linear({cx, cy, cz})];
        for (std::uint64_t t = begin; t < end; ++t) {
          std::uint32_t j = grid.point_order[t];
          if ((sources.position(j) - q).squared_norm() <= r2) visit(j);
        }
      }
    }
  }
}

}  // namespace grid_detail

// Exact closed-ball radius query: pairs (query -> source) within distance r
// and with matching batch id, neighbor indices ascending per query. Requires
// every grid's cell_size >= r so a 3x3x3 cell scan covers the ball.
inline NeighborTable build_neighbor_table(const PointCloud& queries, const PointCloud& sources,
                                          std::span<const VoxelGrid> grids, double r,
                                          int threads = 0) {
  if (!(r > 0.0)) throw InvalidParameterError("build_neighbor_table: radius must be positive");
  for (const VoxelGrid& g : grids) {
    if (g.source_size != sources.size()) {
      throw IndexMismatchError("build_neighbor_table: grid was built over a different cloud");
    }
    if (g.cell_size < r) {
      throw InvalidParameterError("build_neighbor_table: grid cell_size smaller than query radius");
    }
  }
  if (threads <= 0) threads = default_threads();

  std::int32_t max_tag = 0;
  for (const VoxelGrid& g : grids) max_tag = std::max(max_tag, g.batch_tag);
  std::vector<const VoxelGrid*> by_tag(static_cast<std::size_t>(max_tag) + 1, nullptr);
  for (const VoxelGrid& g : grids) by_tag[g.batch_tag] = &g;

  NeighborTable table;
  table.radius = r;
  table.source_size = sources.size();
  table.offsets.assign(queries.size() + 1, 0);

  auto grid_for_query = [&](std::size_t q) -> const VoxelGrid* {
    std::int32_t b = queries.batch_id(q);
    return b <= max_tag ? by_tag[b] : nullptr;
  };

  parallel_chunks(queries.size(), threads, [&](std::size_t begin, std::size_t end, int) {
    for (std::size_t q = begin; q < end; ++q) {
      const VoxelGrid* grid = grid_for_query(q);
      std::uint64_t count = 0;
      if (grid != nullptr) {
        grid_detail::scan_ball(*grid, sources, queries.position(q), r,
                               [&](std::uint32_t) { ++count; });
      }
      table.offsets[q + 1] = count;
    }
  });
  for (std::size_t q = 0; q < queries.size(); ++q) table.offsets[q + 1] += table.offsets[q];

  table.pairs.resize(table.offsets.back());
  parallel_chunks(queries.size(), threads, [&](std::size_t begin, std::size_t end, int) {
    for (std::size_t q = begin; q < end; ++q) {
      const VoxelGrid* grid = grid_for_query(q);
      if (grid == nullptr) continue;
      std::uint64_t at = table.offsets[q];
      grid_detail::scan_ball(*grid, sources, queries.position(q), r, [&](std::uint32_t j) {
        table.pairs[at++].index = j;
      });
      std::sort(table.pairs.begin() + table.offsets[q], table.pairs.begin() + at,
                [](const NeighborPair& a, const NeighborPair& b) { return a.index < b.index; });
    }
  });
  return table;
}

inline NeighborTable build_neighbor_table(const PointCloud& queries, const PointCloud& sources,
                                          const VoxelGrid& grid, double r, int threads = 0) {
  return build_neighbor_table(queries, sources, std::span<const VoxelGrid>(&grid, 1), r, threads);
}

}  // namespace mcconv
