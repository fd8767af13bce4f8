#include "mcconv/cloud_io.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "test_support.hpp"

using namespace mcconv;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  fs::path dir = fs::temp_directory_path() / "mcconv_io_test";
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST(CloudIo, TextRoundTripIsBitExact) {
  PointCloud cloud = testkit::random_cloud_on_sphere(257, 4);
  std::vector<Vec3> normals(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) normals[i] = cloud.position(i).normalized();
  cloud.set_normals(std::move(normals));
  cloud.set_features(testkit::random_features(cloud.size(), 2, 9));

  fs::path path = temp_dir() / "roundtrip.txt";
  save_cloud_text(cloud, path);
  PointCloud loaded = load_cloud_text(path);

  ASSERT_EQ(loaded.size(), cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    EXPECT_EQ(loaded.position(i), cloud.position(i));
    EXPECT_EQ(loaded.normal(i), cloud.normal(i));
    EXPECT_EQ(loaded.features().at(i, 0), cloud.features().at(i, 0));
    EXPECT_EQ(loaded.features().at(i, 1), cloud.features().at(i, 1));
  }
}

TEST(CloudIo, LoadingTwiceIsBitIdentical) {
  PointCloud cloud = testkit::random_cloud_in_cube(100, 21);
  fs::path path = temp_dir() / "twice.txt";
  save_cloud_text(cloud, path);
  PointCloud a = load_cloud_text(path);
  PointCloud b = load_cloud_text(path);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.position(i), b.position(i));
  EXPECT_EQ(a.bbox_diag(), b.bbox_diag());
}

TEST(CloudIo, CommentsAndHeaderParsing) {
  fs::path path = temp_dir() / "comments.txt";
  {
    std::ofstream os(path);
    os << "# leading comment\n";
    os << "mccloud v1 n=2 normals=0 features=1\n";
    os << "# interior comment\n";
    os << "0 0 0 7.5\n";
    os << "1 2 3 -1.25\n";
  }
  PointCloud cloud = load_cloud_text(path);
  ASSERT_EQ(cloud.size(), 2u);
  EXPECT_EQ(cloud.position(1), (Vec3{1, 2, 3}));
  EXPECT_EQ(cloud.features().at(0, 0), 7.5);
  EXPECT_EQ(cloud.features().at(1, 0), -1.25);
}

TEST(CloudIo, RejectsCountMismatchAndBadHeader) {
  fs::path path = temp_dir() / "bad.txt";
  {
    std::ofstream os(path);
    os << "mccloud v1 n=3 normals=0 features=0\n0 0 0\n";
  }
  EXPECT_THROW(load_cloud_text(path), Error);
  {
    std::ofstream os(path);
    os << "cloudfile v2\n";
  }
  EXPECT_THROW(load_cloud_text(path), Error);
}

TEST(CloudIo, PlyVertexSubset) {
  fs::path path = temp_dir() / "cloud.ply";
  {
    std::ofstream os(path);
    os << "ply\nformat ascii 1.0\ncomment test\n";
    os << "element vertex 3\n";
    os << "property float x\nproperty float y\nproperty float z\n";
    os << "property float nx\nproperty float ny\nproperty float nz\n";
    os << "property float quality\n";
    os << "end_header\n";
    os << "0 0 0 1 0 0 0.5\n";
    os << "1 0 0 0 1 0 0.5\n";
    os << "0.5 0.25 -1 0 0 1 0.1\n";
  }
  PointCloud cloud = load_cloud_ply(path);
  ASSERT_EQ(cloud.size(), 3u);
  EXPECT_TRUE(cloud.has_normals());
  EXPECT_EQ(cloud.position(2), (Vec3{0.5, 0.25, -1}));
  EXPECT_EQ(cloud.normal(1), (Vec3{0, 1, 0}));
}

TEST(CloudIo, PlyWithoutNormals) {
  fs::path path = temp_dir() / "plain.ply";
  {
    std::ofstream os(path);
    os << "ply\nformat ascii 1.0\n";
    os << "element vertex 2\n";
    os << "property double x\nproperty double y\nproperty double z\n";
    os << "end_header\n";
    os << "0 1 2\n3 4 5\n";
  }
  PointCloud cloud = load_cloud_ply(path);
  ASSERT_EQ(cloud.size(), 2u);
  EXPECT_FALSE(cloud.has_normals());
  EXPECT_EQ(cloud.position(1), (Vec3{3, 4, 5}));
}

TEST(CloudIo, PlyRejectsBinaryFormat) {
  fs::path path = temp_dir() / "bin.ply";
  {
    std::ofstream os(path);
    os << "ply\nformat binary_little_endian 1.0\nelement vertex 0\nend_header\n";
  }
  EXPECT_THROW(load_cloud_ply(path), Error);
}
