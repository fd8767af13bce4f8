#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mcconv/errors.hpp"
#include "mcconv/point_cloud.hpp"

namespace mcconv {

// Text format, one point per line:
//   mccloud v1 n=<count> normals=<0|1> features=<M>
//   x y z [nx ny nz] [f1 ... fM]
// '#' starts a comment line. Input may be 32-bit formatted; values are
// parsed and stored as 64-bit floats.

namespace io_detail {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline bool parse_fields(const std::string& line, std::vector<double>& out) {
  out.clear();
  const char* s = line.c_str();
  char* end = nullptr;
  while (*s != '\0') {
    while (*s == ' ' || *s == '\t' || *s == '\r') ++s;
    if (*s == '\0' || *s == '#') break;
    double v = std::strtod(s, &end);
    if (end == s) return false;
    out.push_back(v);
    s = end;
  }
  return true;
}

}  // namespace io_detail

inline void save_cloud_text(const PointCloud& cloud, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open for writing: " + path.string());
  int feature_channels = cloud.has_features() ? cloud.features().channels() : 0;
  os << "mccloud v1 n=" << cloud.size() << " normals=" << (cloud.has_normals() ? 1 : 0)
     << " features=" << feature_channels << "\n";
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.position(i);
    os << io_detail::format_double(p.x) << ' ' << io_detail::format_double(p.y) << ' '
       << io_detail::format_double(p.z);
    if (cloud.has_normals()) {
      const Vec3& n = cloud.normal(i);
      os << ' ' << io_detail::format_double(n.x) << ' ' << io_detail::format_double(n.y) << ' '
         << io_detail::format_double(n.z);
    }
    for (int c = 0; c < feature_channels; ++c) {
      os << ' ' << io_detail::format_double(cloud.features().at(i, c));
    }
    os << "\n";
  }
  if (!os) throw Error("write failed: " + path.string());
}

inline PointCloud load_cloud_text(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open: " + path.string());
  std::string line;
  std::size_t expected = 0;
  bool with_normals = false;
  int feature_channels = 0;
  bool header_seen = false;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream hs(line);
    std::string magic, version;
    hs >> magic >> version;
    if (magic != "mccloud" || version != "v1") {
      throw Error(path.string() + ": missing 'mccloud v1' header");
    }
    std::string kv;
    while (hs >> kv) {
      auto eq = kv.find('=');
      if (eq == std::string::npos) throw Error(path.string() + ": malformed header field " + kv);
      std::string key = kv.substr(0, eq);
      long value = std::strtol(kv.c_str() + eq + 1, nullptr, 10);
      if (key == "n") {
        expected = static_cast<std::size_t>(value);
      } else if (key == "normals") {
        with_normals = value != 0;
      } else if (key == "features") {
        feature_channels = static_cast<int>(value);
      } else {
        throw Error(path.string() + ": unknown header field " + key);
      }
    }
    header_seen = true;
    break;
  }
  if (!header_seen) throw Error(path.string() + ": empty file");

  std::size_t fields_per_line = 3 + (with_normals ? 3 : 0) + feature_channels;
  std::vector<Vec3> positions;
  std::vector<Vec3> normals;
  std::vector<double> features;
  positions.reserve(expected);
  std::vector<double> fields;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!io_detail::parse_fields(line, fields) || fields.size() != fields_per_line) {
      throw Error(path.string() + ": malformed point line: " + line);
    }
    positions.emplace_back(fields[0], fields[1], fields[2]);
    std::size_t at = 3;
    if (with_normals) {
      normals.emplace_back(fields[3], fields[4], fields[5]);
      at = 6;
    }
    for (int c = 0; c < feature_channels; ++c) features.push_back(fields[at + c]);
  }
  if (positions.size() != expected) {
    throw Error(path.string() + ": header promised " + std::to_string(expected) + " points, found " +
                std::to_string(positions.size()));
  }
  PointCloud cloud(std::move(positions));
  if (with_normals) cloud.set_normals(std::move(normals));
  if (feature_channels > 0) cloud.set_features(FeatureMap(std::move(features), feature_channels));
  return cloud;
}

// ASCII PLY reader covering `element vertex` with x, y, z and optional
// nx, ny, nz scalar properties. Other vertex properties are skipped, other
// elements (e.g. face) are ignored.
inline PointCloud load_cloud_ply(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open: " + path.string());
  std::string line;
  if (!std::getline(is, line) || line.substr(0, 3) != "ply") {
    throw Error(path.string() + ": not a PLY file");
  }

  std::size_t vertex_count = 0;
  std::vector<std::string> vertex_props;
  bool in_vertex_element = false;
  bool format_ok = false;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "comment") continue;
    if (word == "format") {
      std::string kind;
      ls >> kind;
      if (kind != "ascii") throw Error(path.string() + ": only ascii PLY is supported");
      format_ok = true;
    } else if (word == "element") {
      std::string name;
      std::size_t count = 0;
      ls >> name >> count;
      in_vertex_element = (name == "vertex");
      if (in_vertex_element) vertex_count = count;
    } else if (word == "property") {
      if (!in_vertex_element) continue;
      std::string type, name;
      ls >> type >> name;
      if (type == "list") throw Error(path.string() + ": list property on vertex element");
      vertex_props.push_back(name);
    } else if (word == "end_header") {
      break;
    }
  }
  if (!format_ok) throw Error(path.string() + ": missing format line");

  auto prop_index = [&](const std::string& name) {
    for (std::size_t i = 0; i < vertex_props.size(); ++i) {
      if (vertex_props[i] == name) return static_cast<long>(i);
    }
    return -1L;
  };
  long ix = prop_index("x"), iy = prop_index("y"), iz = prop_index("z");
  long inx = prop_index("nx"), iny = prop_index("ny"), inz = prop_index("nz");
  if (ix < 0 || iy < 0 || iz < 0) throw Error(path.string() + ": vertex element lacks x/y/z");
  bool with_normals = inx >= 0 && iny >= 0 && inz >= 0;

  std::vector<Vec3> positions;
  std::vector<Vec3> normals;
  positions.reserve(vertex_count);
  std::vector<double> fields;
  while (positions.size() < vertex_count && std::getline(is, line)) {
    if (line.empty()) continue;
    if (!io_detail::parse_fields(line, fields) || fields.size() < vertex_props.size()) {
      throw Error(path.string() + ": malformed vertex line: " + line);
    }
    positions.emplace_back(fields[ix], fields[iy], fields[iz]);
    if (with_normals) normals.emplace_back(fields[inx], fields[iny], fields[inz]);
  }
  if (positions.size() != vertex_count) {
    throw Error(path.string() + ": expected " + std::to_string(vertex_count) + " vertices");
  }
  PointCloud cloud(std::move(positions));
  if (with_normals) {
    for (Vec3& n : normals) n = n.normalized();
    cloud.set_normals(std::move(normals));
  }
  return cloud;
}

// Dispatches on extension: .ply or the mccloud text format.
inline PointCloud load_cloud(const std::filesystem::path& path) {
  if (path.extension() == ".ply") return load_cloud_ply(path);
  return load_cloud_text(path);
}

}  // namespace mcconv
