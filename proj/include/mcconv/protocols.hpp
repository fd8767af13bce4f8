#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "mcconv/errors.hpp"
#include "mcconv/point_cloud.hpp"
#include "mcconv/rng.hpp"

namespace mcconv {

// Rejection-sampling protocols that create controlled non-uniform densities
// from a uniformly sampled cloud. Every protocol selects an index-subset;
// positions are never perturbed.
enum class ProtocolKind { Uniform, Split, Gradient, Lambertian, Occlusion };

struct Protocol {
  ProtocolKind kind = ProtocolKind::Uniform;
  double keep_prob = 0.25;   // Split: acceptance inside the chosen half-space
  Vec3 direction{0, 0, 0};   // Lambertian/Occlusion view; Gradient axis override
  double gradient_floor = 0.05;  // Gradient: lowest acceptance probability
  Rng rng{0};
};

inline const char* protocol_name(ProtocolKind kind) {
  switch (kind) {
    case ProtocolKind::Uniform: return "uniform";
    case ProtocolKind::Split: return "split";
    case ProtocolKind::Gradient: return "gradient";
    case ProtocolKind::Lambertian: return "lambert";
    case ProtocolKind::Occlusion: return "occlusion";
  }
  return "unknown";
}

inline ProtocolKind protocol_from_name(const std::string& name) {
  for (ProtocolKind k : {ProtocolKind::Uniform, ProtocolKind::Split, ProtocolKind::Gradient,
                         ProtocolKind::Lambertian, ProtocolKind::Occlusion}) {
    if (name == protocol_name(k)) return k;
  }
  throw InvalidParameterError("unknown protocol: " + name);
}

namespace protocol_detail {

inline Vec3 require_unit_direction(const Protocol& proto, const char* who) {
  double n = proto.direction.norm();
  if (!(n > 1e-12)) {
    throw InvalidParameterError(std::string(who) + ": protocol direction must be non-zero");
  }
  return proto.direction / n;
}

// Orthonormal basis of the plane orthogonal to dir.
inline std::pair<Vec3, Vec3> plane_basis(const Vec3& dir) {
  Vec3 helper = std::abs(dir.x) <= std::abs(dir.y) && std::abs(dir.x) <= std::abs(dir.z)
                    ? Vec3{1, 0, 0}
                    : (std::abs(dir.y) <= std::abs(dir.z) ? Vec3{0, 1, 0} : Vec3{0, 0, 1});
  Vec3 u = dir.cross(helper).normalized();
  Vec3 v = dir.cross(u);
  return {u, v};
}

struct BatchRange {
  std::vector<std::vector<std::uint32_t>> members;  // by batch id
};

inline BatchRange split_batches(const PointCloud& cloud) {
  BatchRange r;
  r.members.resize(static_cast<std::size_t>(cloud.max_batch_id()) + 1);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    r.members[cloud.batch_id(i)].push_back(static_cast<std::uint32_t>(i));
  }
  return r;
}

}  // namespace protocol_detail

// Returns the kept indices (ascending). Acceptance probabilities are
// evaluated per point against a counter-based stream, so the decision for a
// point is independent of processing order.
inline std::vector<std::uint32_t> protocol_selection(const PointCloud& cloud,
                                                     const Protocol& proto) {
  std::vector<std::uint32_t> kept;
  if (cloud.empty()) return kept;
  const std::size_t n = cloud.size();
  kept.reserve(n);

  switch (proto.kind) {
    case ProtocolKind::Uniform: {
      for (std::uint32_t i = 0; i < n; ++i) kept.push_back(i);
      return kept;
    }
    case ProtocolKind::Split: {
      if (!(proto.keep_prob > 0.0) || proto.keep_prob > 1.0) {
        throw InvalidParameterError("split protocol: keep_prob must be in (0, 1]");
      }
      auto batches = protocol_detail::split_batches(cloud);
      std::vector<Vec3> plane_normal(batches.members.size());
      std::vector<Vec3> centroid(batches.members.size());
      for (std::size_t b = 0; b < batches.members.size(); ++b) {
        if (batches.members[b].empty()) continue;
        RngStream plane = proto.rng.stream("split-plane", b);
        double z = plane.uniform(-1.0, 1.0);
        double phi = plane.uniform(0.0, 2.0 * std::numbers::pi);
        double s = std::sqrt(std::max(0.0, 1.0 - z * z));
        plane_normal[b] = {s * std::cos(phi), s * std::sin(phi), z};
        Vec3 c{};
        for (std::uint32_t i : batches.members[b]) c += cloud.position(i);
        centroid[b] = c / static_cast<double>(batches.members[b].size());
      }
      RngStream coin = proto.rng.stream("split-accept");
      for (std::uint32_t i = 0; i < n; ++i) {
        std::int32_t b = cloud.batch_id(i);
        bool inside = (cloud.position(i) - centroid[b]).dot(plane_normal[b]) >= 0.0;
        double p = inside ? proto.keep_prob : 1.0;
        if (coin.uniform_at(i) < p) kept.push_back(i);
      }
      return kept;
    }
    case ProtocolKind::Gradient: {
      if (!(proto.gradient_floor >= 0.0) || proto.gradient_floor > 1.0) {
        throw InvalidParameterError("gradient protocol: floor must be in [0, 1]");
      }
      auto batches = protocol_detail::split_batches(cloud);
      RngStream coin = proto.rng.stream("gradient-accept");
      for (std::size_t b = 0; b < batches.members.size(); ++b) {
        const auto& members = batches.members[b];
        if (members.empty()) continue;
        Vec3 axis;
        if (proto.direction.norm() > 1e-12) {
          axis = proto.direction.normalized();
        } else {
          Vec3 lo = cloud.position(members[0]);
          Vec3 hi = lo;
          for (std::uint32_t i : members) {
            lo = component_min(lo, cloud.position(i));
            hi = component_max(hi, cloud.position(i));
          }
          Vec3 extent = hi - lo;
          int widest = 0;
          for (int a = 1; a < 3; ++a) {
            if (extent[a] > extent[widest]) widest = a;
          }
          axis = {widest == 0 ? 1.0 : 0.0, widest == 1 ? 1.0 : 0.0, widest == 2 ? 1.0 : 0.0};
        }
        double lo_t = cloud.position(members[0]).dot(axis);
        double hi_t = lo_t;
        for (std::uint32_t i : members) {
          double t = cloud.position(i).dot(axis);
          lo_t = std::min(lo_t, t);
          hi_t = std::max(hi_t, t);
        }
        const double span = hi_t - lo_t;
        for (std::uint32_t i : members) {
          double t = span > 0.0 ? (cloud.position(i).dot(axis) - lo_t) / span : 1.0;
          double p = proto.gradient_floor + (1.0 - proto.gradient_floor) * t;
          if (coin.uniform_at(i) < p) kept.push_back(i);
        }
      }
      std::sort(kept.begin(), kept.end());
      return kept;
    }
    case ProtocolKind::Lambertian: {
      if (!cloud.has_normals()) {
        throw MissingNormalsError("lambert protocol requires normals");
      }
      Vec3 dir = protocol_detail::require_unit_direction(proto, "lambert protocol");
      RngStream coin = proto.rng.stream("lambert-accept");
      for (std::uint32_t i = 0; i < n; ++i) {
        double p = std::max(0.0, cloud.normal(i).dot(dir));
        if (coin.uniform_at(i) < p) kept.push_back(i);
      }
      return kept;
    }
    case ProtocolKind::Occlusion: {
      Vec3 dir = protocol_detail::require_unit_direction(proto, "occlusion protocol");
      auto [u, v] = protocol_detail::plane_basis(dir);
      auto batches = protocol_detail::split_batches(cloud);
      constexpr int kBins = 64;
      for (std::size_t b = 0; b < batches.members.size(); ++b) {
        const auto& members = batches.members[b];
        if (members.empty()) continue;
        Vec3 lo = cloud.position(members[0]);
        Vec3 hi = lo;
        for (std::uint32_t i : members) {
          lo = component_min(lo, cloud.position(i));
          hi = component_max(hi, cloud.position(i));
        }
        const double tau = 0.02 * (hi - lo).norm();
        double su_lo = cloud.position(members[0]).dot(u), su_hi = su_lo;
        double sv_lo = cloud.position(members[0]).dot(v), sv_hi = sv_lo;
        for (std::uint32_t i : members) {
          double su = cloud.position(i).dot(u);
          double sv = cloud.position(i).dot(v);
          su_lo = std::min(su_lo, su);
          su_hi = std::max(su_hi, su);
          sv_lo = std::min(sv_lo, sv);
          sv_hi = std::max(sv_hi, sv);
        }
        auto bin_of = [&](const Vec3& p) {
          double su = p.dot(u), sv = p.dot(v);
          int bu = su_hi > su_lo
                       ? std::min(kBins - 1, static_cast<int>((su - su_lo) / (su_hi - su_lo) * kBins))
                       : 0;
          int bv = sv_hi > sv_lo
                       ? std::min(kBins - 1, static_cast<int>((sv - sv_lo) / (sv_hi - sv_lo) * kBins))
                       : 0;
          return bu * kBins + bv;
        };
        std::vector<double> bin_front(kBins * kBins, -std::numeric_limits<double>::infinity());
        for (std::uint32_t i : members) {
          int bin = bin_of(cloud.position(i));
          bin_front[bin] = std::max(bin_front[bin], cloud.position(i).dot(dir));
        }
        for (std::uint32_t i : members) {
          int bin = bin_of(cloud.position(i));
          if (bin_front[bin] - cloud.position(i).dot(dir) <= tau) kept.push_back(i);
        }
      }
      std::sort(kept.begin(), kept.end());
      return kept;
    }
  }
  throw InvalidParameterError("unhandled protocol kind");
}

inline PointCloud apply_protocol(const PointCloud& cloud, const Protocol& proto) {
  auto kept = protocol_selection(cloud, proto);
  return cloud.subset(kept);
}

// Synthetic closed surfaces with exact analytic normals, area-uniform.
enum class ShapeKind { Sphere, Torus, Box, Ellipsoid };

inline const char* shape_name(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::Sphere: return "sphere";
    case ShapeKind::Torus: return "torus";
    case ShapeKind::Box: return "box";
    case ShapeKind::Ellipsoid: return "ellipsoid";
  }
  return "unknown";
}

inline ShapeKind shape_from_name(const std::string& name) {
  for (ShapeKind k : {ShapeKind::Sphere, ShapeKind::Torus, ShapeKind::Box, ShapeKind::Ellipsoid}) {
    if (name == shape_name(k)) return k;
  }
  throw InvalidParameterError("unknown shape: " + name);
}

// Fixed shape dimensions.
constexpr double kTorusMajor = 1.0;
constexpr double kTorusMinor = 0.4;
constexpr Vec3 kBoxHalfExtents{1.0, 0.7, 0.4};
constexpr Vec3 kEllipsoidSemiAxes{1.0, 0.8, 0.6};

inline PointCloud generate_shape(ShapeKind kind, std::size_t n, const Rng& rng) {
  if (n < 1) throw InvalidParameterError("generate_shape: n must be >= 1");
  RngStream stream = rng.stream("shape", static_cast<std::uint64_t>(kind));
  std::vector<Vec3> positions(n);
  std::vector<Vec3> normals(n);

  switch (kind) {
    case ShapeKind::Sphere: {
      for (std::size_t i = 0; i < n; ++i) {
        double z = stream.uniform(-1.0, 1.0);
        double phi = stream.uniform(0.0, 2.0 * std::numbers::pi);
        double s = std::sqrt(std::max(0.0, 1.0 - z * z));
        positions[i] = {s * std::cos(phi), s * std::sin(phi), z};
        normals[i] = positions[i];
      }
      break;
    }
    case ShapeKind::Torus: {
      for (std::size_t i = 0; i < n; ++i) {
        double major = stream.uniform(0.0, 2.0 * std::numbers::pi);
        double minor;
        // Rejection on the tube angle makes the sampling area-uniform.
        for (;;) {
          minor = stream.uniform(0.0, 2.0 * std::numbers::pi);
          double w = (kTorusMajor + kTorusMinor * std::cos(minor)) / (kTorusMajor + kTorusMinor);
          if (stream.uniform() <= w) break;
        }
        double ring = kTorusMajor + kTorusMinor * std::cos(minor);
        positions[i] = {ring * std::cos(major), ring * std::sin(major),
                        kTorusMinor * std::sin(minor)};
        normals[i] = {std::cos(minor) * std::cos(major), std::cos(minor) * std::sin(major),
                      std::sin(minor)};
      }
      break;
    }
    case ShapeKind::Box: {
      const Vec3 e = kBoxHalfExtents;
      // Face areas for +-x, +-y, +-z faces.
      const std::array<double, 3> area{4.0 * e.y * e.z, 4.0 * e.x * e.z, 4.0 * e.x * e.y};
      const double total = 2.0 * (area[0] + area[1] + area[2]);
      for (std::size_t i = 0; i < n; ++i) {
        double pick = stream.uniform(0.0, total);
        int axis = 0;
        double acc = 2.0 * area[0];
        while (pick >= acc && axis < 2) {
          ++axis;
          acc += 2.0 * area[axis];
        }
        double sign = stream.uniform() < 0.5 ? -1.0 : 1.0;
        double a = stream.uniform(-1.0, 1.0);
        double b = stream.uniform(-1.0, 1.0);
        Vec3 p, nrm;
        if (axis == 0) {
          p = {sign * e.x, a * e.y, b * e.z};
          nrm = {sign, 0, 0};
        } else if (axis == 1) {
          p = {a * e.x, sign * e.y, b * e.z};
          nrm = {0, sign, 0};
        } else {
          p = {a * e.x, b * e.y, sign * e.z};
          nrm = {0, 0, sign};
        }
        positions[i] = p;
        normals[i] = nrm;
      }
      break;
    }
    case ShapeKind::Ellipsoid: {
      const Vec3 ax = kEllipsoidSemiAxes;
      const double sigma_max =
          std::max({ax.y * ax.z, ax.x * ax.z, ax.x * ax.y});
      for (std::size_t i = 0; i < n; ++i) {
        Vec3 u;
        // Rejection weight = local area stretch of the sphere-to-ellipsoid map.
        for (;;) {
          double z = stream.uniform(-1.0, 1.0);
          double phi = stream.uniform(0.0, 2.0 * std::numbers::pi);
          double s = std::sqrt(std::max(0.0, 1.0 - z * z));
          u = {s * std::cos(phi), s * std::sin(phi), z};
          double sigma = std::sqrt(ax.y * ax.y * ax.z * ax.z * u.x * u.x +
                                   ax.x * ax.x * ax.z * ax.z * u.y * u.y +
                                   ax.x * ax.x * ax.y * ax.y * u.z * u.z);
          if (stream.uniform() * sigma_max <= sigma) break;
        }
        positions[i] = {ax.x * u.x, ax.y * u.y, ax.z * u.z};
        normals[i] = Vec3{u.x / ax.x, u.y / ax.y, u.z / ax.z}.normalized();
      }
      break;
    }
  }

  PointCloud cloud(std::move(positions));
  cloud.set_normals(std::move(normals));
  return cloud;
}

// Scalar test signals on the unit sphere, parameterized by latitude
// (radians, asin of z).
struct SphereField {
  enum class Kind { StepBand, Harmonic } kind = Kind::StepBand;
  double band_lat_min = 0.2;  // StepBand: inclusive latitude band
  double band_lat_max = 0.5;
  double harmonic_k = 0.0;  // Harmonic: cos(k * latitude)
};

inline FeatureMap scalar_field_on_sphere(const PointCloud& cloud, const SphereField& field) {
  FeatureMap out(cloud.size(), 1);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    double lat = std::asin(std::clamp(cloud.position(i).z, -1.0, 1.0));
    if (field.kind == SphereField::Kind::StepBand) {
      out.at(i, 0) = (lat >= field.band_lat_min && lat <= field.band_lat_max) ? 1.0 : 0.0;
    } else {
      out.at(i, 0) = std::cos(field.harmonic_k * lat);
    }
  }
  return out;
}

}  // namespace mcconv
