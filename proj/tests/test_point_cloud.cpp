#include "mcconv/point_cloud.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "mcconv/rng.hpp"
#include "test_support.hpp"

using namespace mcconv;

TEST(BboxDiag, UnitCubeCorners) {
  PointCloud cloud({{0, 0, 0}, {1, 1, 1}});
  EXPECT_NEAR(compute_bbox_diag(cloud), std::sqrt(3.0), 1e-12);
  EXPECT_NEAR(compute_bbox_diag(cloud), 1.7320508, 1e-7);
}

TEST(BboxDiag, SinglePointIsZero) {
  PointCloud cloud({{5, 5, 5}});
  EXPECT_EQ(compute_bbox_diag(cloud), 0.0);
}

TEST(BboxDiag, MatchesBruteForceScan) {
  PointCloud cloud = testkit::random_cloud_in_cube(1000, 77);
  double lo[3] = {1e30, 1e30, 1e30};
  double hi[3] = {-1e30, -1e30, -1e30};
  for (const Vec3& p : cloud.positions()) {
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], p[a]);
      hi[a] = std::max(hi[a], p[a]);
    }
  }
  double expected = std::sqrt((hi[0] - lo[0]) * (hi[0] - lo[0]) +
                              (hi[1] - lo[1]) * (hi[1] - lo[1]) +
                              (hi[2] - lo[2]) * (hi[2] - lo[2]));
  EXPECT_DOUBLE_EQ(compute_bbox_diag(cloud), expected);
  EXPECT_GT(compute_bbox_diag(cloud), 1.0);
  EXPECT_LE(compute_bbox_diag(cloud), 1.7320509);
}

TEST(BboxDiag, InvariantUnderPermutation) {
  PointCloud cloud = testkit::random_cloud_in_cube(200, 5);
  std::vector<Vec3> perm(cloud.positions());
  std::reverse(perm.begin(), perm.end());
  PointCloud reversed(std::move(perm));
  EXPECT_DOUBLE_EQ(compute_bbox_diag(cloud), compute_bbox_diag(reversed));
}

TEST(BboxDiag, EmptyCloudThrows) {
  PointCloud empty;
  EXPECT_THROW(compute_bbox_diag(empty), EmptyInputError);
}

TEST(BboxDiag, CacheRefreshesOnTranslate) {
  PointCloud cloud({{0, 0, 0}, {1, 0, 0}});
  double before = cloud.bbox_diag();
  cloud.translate({10, 10, 10});
  EXPECT_DOUBLE_EQ(cloud.bbox_diag(), before);
  EXPECT_EQ(cloud.bbox_min(), (Vec3{10, 10, 10}));
}

TEST(ReceptiveRadius, PaperExample) {
  EXPECT_DOUBLE_EQ(receptive_radius(0.01, 1.0), 0.01);
}

TEST(ReceptiveRadius, IdentityFraction) {
  EXPECT_DOUBLE_EQ(receptive_radius(1.0, 3.25), 3.25);
}

TEST(ReceptiveRadius, DirectMultiplication) {
  EXPECT_NEAR(receptive_radius(0.1, std::sqrt(3.0)), 0.17320508, 1e-8);
}

TEST(ReceptiveRadius, RejectsNonPositive) {
  EXPECT_THROW(receptive_radius(0.0, 1.0), InvalidParameterError);
  EXPECT_THROW(receptive_radius(0.1, 0.0), InvalidParameterError);
  EXPECT_THROW(receptive_radius(-0.1, 1.0), InvalidParameterError);
}

TEST(PointCloud, BatchIdsMustMatchAndBeNonNegative) {
  EXPECT_THROW(PointCloud({{0, 0, 0}}, {0, 1}), ShapeMismatchError);
  EXPECT_THROW(PointCloud({{0, 0, 0}}, {-1}), InvalidParameterError);
}

TEST(PointCloud, NormalsMustBeUnit) {
  PointCloud cloud({{0, 0, 0}});
  EXPECT_THROW(cloud.set_normals({{0.5, 0, 0}}), InvalidParameterError);
  cloud.set_normals({{1.0, 0, 0}});
  EXPECT_TRUE(cloud.has_normals());
}

TEST(PointCloud, SubsetCarriesEverything) {
  PointCloud cloud({{0, 0, 0}, {1, 0, 0}, {2, 0, 0}}, {0, 1, 2});
  cloud.set_normals({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
  FeatureMap f(3, 2);
  f.at(1, 0) = 5.0;
  f.at(2, 1) = -3.0;
  cloud.set_features(std::move(f));

  std::vector<std::uint32_t> pick{2, 1};
  PointCloud sub = cloud.subset(pick);
  ASSERT_EQ(sub.size(), 2u);
  EXPECT_EQ(sub.position(0), (Vec3{2, 0, 0}));
  EXPECT_EQ(sub.batch_id(1), 1);
  EXPECT_EQ(sub.normal(0), (Vec3{0, 0, 1}));
  EXPECT_EQ(sub.features().at(0, 1), -3.0);
  EXPECT_EQ(sub.features().at(1, 0), 5.0);
}

TEST(FeatureMap, ShapeChecks) {
  EXPECT_THROW(FeatureMap(std::vector<double>{1, 2, 3}, 2), ShapeMismatchError);
  EXPECT_THROW(FeatureMap(3, 0), InvalidParameterError);
  FeatureMap f(2, 3);
  EXPECT_EQ(f.rows(), 2u);
  EXPECT_TRUE(f.all_finite());
}
