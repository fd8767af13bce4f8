#include "mcconv/density.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "test_support.hpp"

using namespace mcconv;

namespace {

// Table over the cloud itself with pdf estimated at bandwidth sigma.
NeighborTable kde_table(const PointCloud& cloud, double r, double sigma) {
  auto grids = build_grid(cloud, r);
  NeighborTable table = build_neighbor_table(cloud, cloud, grids, r);
  estimate_pdf(table, cloud, DensityParams{sigma});
  return table;
}

}  // namespace

TEST(DensityKernel, ValueAtZero) {
  EXPECT_NEAR(density_kernel_1d(0.0), 0.3989423, 1e-7);
  EXPECT_DOUBLE_EQ(density_kernel_1d(0.0), 1.0 / std::sqrt(2.0 * std::numbers::pi));
}

TEST(DensityKernel, SymmetricAtPlusMinusOne) {
  EXPECT_NEAR(density_kernel_1d(1.0), 0.2419707, 1e-7);
  EXPECT_DOUBLE_EQ(density_kernel_1d(1.0), density_kernel_1d(-1.0));
}

TEST(DensityKernel, IntegratesToOne) {
  // Fine trapezoid quadrature over [-8, 8].
  const int steps = 200000;
  const double a = -8.0, b = 8.0;
  const double h = (b - a) / steps;
  double sum = 0.5 * (density_kernel_1d(a) + density_kernel_1d(b));
  for (int i = 1; i < steps; ++i) sum += density_kernel_1d(a + i * h);
  EXPECT_NEAR(sum * h, 1.0, 1e-6);
}

TEST(EstimatePdf, SingleSelfNeighborClosedForm) {
  PointCloud cloud({{0.3, -0.2, 0.9}});
  const double sigma = 0.07;
  NeighborTable table = kde_table(cloud, 0.1, sigma);
  ASSERT_EQ(table.pairs.size(), 1u);
  const double two_pi = 2.0 * std::numbers::pi;
  double expected = 1.0 / (two_pi * std::sqrt(two_pi)) / (sigma * sigma * sigma);
  EXPECT_NEAR(table.pairs[0].pdf, expected, 1e-15 * expected);
  EXPECT_NEAR(table.pairs[0].pdf * sigma * sigma * sigma, 0.0634936, 1e-7);
}

TEST(EstimatePdf, TwoCoincidentNeighborsDoubleTheDensity) {
  PointCloud cloud({{1, 1, 1}, {1, 1, 1}});
  const double sigma = 0.05;
  NeighborTable table = kde_table(cloud, 0.1, sigma);
  ASSERT_EQ(table.pairs.size(), 4u);
  double h0 = density_kernel_1d(0.0);
  double expected = h0 * h0 * h0 / (sigma * sigma * sigma);  // 2 * h(0)^3 / (2 sigma^3)
  for (const NeighborPair& p : table.pairs) EXPECT_NEAR(p.pdf, expected, 1e-14 * expected);
}

TEST(EstimatePdf, MatchesNestedLoopOracle) {
  PointCloud cloud = testkit::random_cloud_on_sphere(100, 6);
  const double r = 0.6;
  const double sigma = 0.25 * r;
  NeighborTable table = kde_table(cloud, r, sigma);
  for (std::size_t q = 0; q < cloud.size(); ++q) {
    std::vector<Vec3> hood;
    for (std::uint64_t a = table.begin(q); a < table.end(q); ++a) {
      hood.push_back(cloud.position(table.pairs[a].index));
    }
    for (std::uint64_t a = table.begin(q); a < table.end(q); ++a) {
      double direct = testkit::kde_oracle(hood, cloud.position(table.pairs[a].index), sigma);
      EXPECT_NEAR(table.pairs[a].pdf, direct, 1e-12 * std::max(1.0, direct));
    }
  }
}

TEST(EstimatePdf, TranslationInvariance) {
  PointCloud cloud = testkit::random_cloud_in_cube(300, 13);
  const double r = 0.2, sigma = 0.05;
  NeighborTable before = kde_table(cloud, r, sigma);
  PointCloud moved = cloud;
  moved.translate({17.5, -3.25, 9.0});
  NeighborTable after = kde_table(moved, r, sigma);
  ASSERT_EQ(before.pairs.size(), after.pairs.size());
  for (std::size_t i = 0; i < before.pairs.size(); ++i) {
    EXPECT_EQ(before.pairs[i].index, after.pairs[i].index);
    EXPECT_NEAR(before.pairs[i].pdf, after.pairs[i].pdf, 1e-12 * before.pairs[i].pdf);
  }
}

TEST(EstimatePdf, CrowdingDoesNotDecreaseDensity) {
  PointCloud cloud = testkit::random_cloud_in_cube(60, 19, 0.5);
  const double r = 0.3, sigma = 0.075;
  NeighborTable before = kde_table(cloud, r, sigma);

  // Duplicate point 7 and re-estimate; the pdf at pairs pointing at point 7
  // must not decrease for queries whose neighborhood gained the copy.
  std::vector<Vec3> pos(cloud.positions());
  pos.push_back(cloud.position(7));
  PointCloud crowded(std::move(pos));
  NeighborTable after = kde_table(crowded, r, sigma);

  for (std::size_t q = 0; q < cloud.size(); ++q) {
    double before_pdf = -1.0, after_pdf = -1.0;
    for (std::uint64_t a = before.begin(q); a < before.end(q); ++a) {
      if (before.pairs[a].index == 7) before_pdf = before.pairs[a].pdf;
    }
    for (std::uint64_t a = after.begin(q); a < after.end(q); ++a) {
      if (after.pairs[a].index == 7) after_pdf = after.pairs[a].pdf;
    }
    if (before_pdf >= 0.0 && after_pdf >= 0.0) {
      EXPECT_GE(after_pdf, before_pdf * (1.0 - 1e-12));
    }
  }
}

TEST(EstimatePdf, DependsOnlyOnNeighborSet) {
  // Hand-built tables sharing the same pair set but different query points:
  // pdf values must match because only neighbor positions enter Eq. 6.
  PointCloud sources = testkit::random_cloud_in_cube(20, 23, 0.2);
  NeighborTable a;
  a.offsets = {0, sources.size()};
  for (std::uint32_t j = 0; j < sources.size(); ++j) a.pairs.push_back({j, 0.0});
  a.radius = 1.0;
  a.source_size = sources.size();
  NeighborTable b = a;

  estimate_pdf(a, sources, DensityParams{0.1});
  estimate_pdf(b, sources, DensityParams{0.1});
  for (std::size_t i = 0; i < a.pairs.size(); ++i) {
    EXPECT_DOUBLE_EQ(a.pairs[i].pdf, b.pairs[i].pdf);
  }
}

TEST(EstimatePdf, AllValuesStrictlyPositive) {
  PointCloud cloud = testkit::random_cloud_in_cube(500, 29);
  NeighborTable table = kde_table(cloud, 0.15, 0.0375);
  ASSERT_TRUE(table.has_pdf);
  for (const NeighborPair& p : table.pairs) EXPECT_GT(p.pdf, 0.0);
}

TEST(EstimatePdf, RejectsBadInput) {
  PointCloud cloud = testkit::random_cloud_in_cube(10, 2);
  auto grids = build_grid(cloud, 0.2);
  NeighborTable table = build_neighbor_table(cloud, cloud, grids, 0.2);
  EXPECT_THROW(estimate_pdf(table, cloud, DensityParams{0.0}), InvalidParameterError);
  PointCloud other = testkit::random_cloud_in_cube(11, 3);
  EXPECT_THROW(estimate_pdf(table, other, DensityParams{0.1}), IndexMismatchError);
}

TEST(EstimatePdf, EmptyNeighborhoodIsNoError) {
  PointCloud sources({{0, 0, 0}});
  PointCloud queries({{5, 5, 5}});
  auto grids = build_grid(sources, 0.1);
  NeighborTable table = build_neighbor_table(queries, sources, grids, 0.1);
  EXPECT_EQ(table.neighbor_count(0), 0u);
  EXPECT_NO_THROW(estimate_pdf(table, sources, DensityParams{0.025}));
}
