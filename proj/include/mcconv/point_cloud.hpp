#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mcconv/errors.hpp"
#include "mcconv/geometry.hpp"

namespace mcconv {

// Dense row-major per-point feature matrix, one row of `channels` scalars per
// point of the owning cloud.
class FeatureMap {
 public:
  FeatureMap() = default;

  FeatureMap(std::size_t rows, int channels)
      : values_(rows * static_cast<std::size_t>(check_channels(channels)), 0.0),
        channels_(channels) {}

  FeatureMap(std::vector<double> values, int channels)
      : values_(std::move(values)), channels_(check_channels(channels)) {
    if (values_.size() % static_cast<std::size_t>(channels_) != 0) {
      throw ShapeMismatchError("feature value count not divisible by channel count");
    }
  }

  std::size_t rows() const { return channels_ == 0 ? 0 : values_.size() / channels_; }
  int channels() const { return channels_; }

  double& at(std::size_t row, int channel) { return values_[row * channels_ + channel]; }
  double at(std::size_t row, int channel) const { return values_[row * channels_ + channel]; }

  std::span<double> row(std::size_t i) {
    return {values_.data() + i * channels_, static_cast<std::size_t>(channels_)};
  }
  std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * channels_, static_cast<std::size_t>(channels_)};
  }

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  bool all_finite() const {
    for (double v : values_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  void require_finite(const std::string& context) const {
    if (!all_finite()) throw InvalidParameterError(context + ": non-finite feature value");
  }

  FeatureMap subset(std::span<const std::uint32_t> indices) const {
    FeatureMap out(indices.size(), channels_);
    for (std::size_t i = 0; i < indices.size(); ++i) {
      auto src = row(indices[i]);
      auto dst = out.row(i);
      for (int c = 0; c < channels_; ++c) dst[c] = src[c];
    }
    return out;
  }

 private:
  static int check_channels(int channels) {
    if (channels < 1) throw InvalidParameterError("feature channel count must be >= 1");
    return channels;
  }

  std::vector<double> values_;
  int channels_ = 0;
};

// A sampled point set: positions plus optional unit normals, optional
// features, and a per-point batch id. Treated as immutable once built; the
// few mutators below re-establish every cached invariant before returning.
class PointCloud {
 public:
  PointCloud() = default;

  explicit PointCloud(std::vector<Vec3> positions)
      : PointCloud(std::move(positions), std::vector<std::int32_t>{}) {}

  PointCloud(std::vector<Vec3> positions, std::vector<std::int32_t> batch_ids)
      : positions_(std::move(positions)), batch_ids_(std::move(batch_ids)) {
    if (batch_ids_.empty()) {
      batch_ids_.assign(positions_.size(), 0);
    } else if (batch_ids_.size() != positions_.size()) {
      throw ShapeMismatchError("batch id count does not match point count");
    }
    validate_batch_ids();
    refresh_bbox();
  }

  std::size_t size() const { return positions_.size(); }
  bool empty() const { return positions_.empty(); }

  const std::vector<Vec3>& positions() const { return positions_; }
  const Vec3& position(std::size_t i) const { return positions_[i]; }

  const std::vector<std::int32_t>& batch_ids() const { return batch_ids_; }
  std::int32_t batch_id(std::size_t i) const { return batch_ids_[i]; }

  bool has_normals() const { return !normals_.empty(); }
  const std::vector<Vec3>& normals() const { return normals_; }
  const Vec3& normal(std::size_t i) const { return normals_[i]; }

  bool has_features() const { return features_.has_value(); }
  const FeatureMap& features() const { return *features_; }

  Vec3 bbox_min() const { return bbox_min_; }
  Vec3 bbox_max() const { return bbox_max_; }
  double bbox_diag() const { return bbox_diag_; }

  void set_normals(std::vector<Vec3> normals) {
    if (normals.size() != positions_.size()) {
      throw ShapeMismatchError("normal count does not match point count");
    }
    for (const Vec3& n : normals) {
      if (std::abs(n.norm() - 1.0) > 1e-6) {
        throw InvalidParameterError("normals must have unit length");
      }
    }
    normals_ = std::move(normals);
  }

  void set_features(FeatureMap features) {
    if (features.rows() != positions_.size()) {
      throw ShapeMismatchError("feature row count does not match point count");
    }
    features.require_finite("PointCloud::set_features");
    features_ = std::move(features);
  }

  void set_batch_ids(std::vector<std::int32_t> batch_ids) {
    if (batch_ids.size() != positions_.size()) {
      throw ShapeMismatchError("batch id count does not match point count");
    }
    batch_ids_ = std::move(batch_ids);
    validate_batch_ids();
  }

  void translate(const Vec3& offset) {
    for (Vec3& p : positions_) p += offset;
    refresh_bbox();
  }

  // Index-subset selection; carries normals, features and batch ids.
  PointCloud subset(std::span<const std::uint32_t> indices) const {
    std::vector<Vec3> pos(indices.size());
    std::vector<std::int32_t> ids(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
      pos[i] = positions_[indices[i]];
      ids[i] = batch_ids_[indices[i]];
    }
    PointCloud out(std::move(pos), std::move(ids));
    if (has_normals()) {
      std::vector<Vec3> nrm(indices.size());
      for (std::size_t i = 0; i < indices.size(); ++i) nrm[i] = normals_[indices[i]];
      out.set_normals(std::move(nrm));
    }
    if (has_features()) {
      out.set_features(features_->subset(indices));
    }
    return out;
  }

  // Appends another cloud, remapping its batch ids by `batch_offset`.
  void append(const PointCloud& other, std::int32_t batch_offset) {
    if (has_normals() != other.has_normals()) {
      throw ShapeMismatchError("cannot append clouds with mismatched normal presence");
    }
    if (has_features() || other.has_features()) {
      throw ShapeMismatchError("append does not carry features");
    }
    positions_.insert(positions_.end(), other.positions_.begin(), other.positions_.end());
    for (std::int32_t id : other.batch_ids_) batch_ids_.push_back(id + batch_offset);
    if (other.has_normals()) {
      normals_.insert(normals_.end(), other.normals_.begin(), other.normals_.end());
    }
    validate_batch_ids();
    refresh_bbox();
  }

  std::int32_t max_batch_id() const {
    std::int32_t m = 0;
    for (std::int32_t id : batch_ids_) m = std::max(m, id);
    return m;
  }

 private:
  void validate_batch_ids() {
    for (std::int32_t id : batch_ids_) {
      if (id < 0) throw InvalidParameterError("batch ids must be non-negative");
    }
  }

  void refresh_bbox() {
    if (positions_.empty()) {
      bbox_min_ = bbox_max_ = Vec3{};
      bbox_diag_ = 0.0;
      return;
    }
    Vec3 lo = positions_[0];
    Vec3 hi = positions_[0];
    for (const Vec3& p : positions_) {
      lo = component_min(lo, p);
      hi = component_max(hi, p);
    }
    bbox_min_ = lo;
    bbox_max_ = hi;
    bbox_diag_ = (hi - lo).norm();
  }

  std::vector<Vec3> positions_;
  std::vector<Vec3> normals_;
  std::optional<FeatureMap> features_;
  std::vector<std::int32_t> batch_ids_;
  Vec3 bbox_min_;
  Vec3 bbox_max_;
  double bbox_diag_ = 0.0;
};

// Euclidean length of the axis-aligned bounding box diagonal.
inline double compute_bbox_diag(const PointCloud& cloud) {
  if (cloud.empty()) throw EmptyInputError("compute_bbox_diag: empty cloud");
  return cloud.bbox_diag();
}

// Receptive-field radius as a fraction of the bounding-box diagonal.
inline double receptive_radius(double fraction, double bbox_diag) {
  if (!(fraction > 0.0) || !(bbox_diag > 0.0)) {
    throw InvalidParameterError("receptive_radius: fraction and bbox_diag must be positive");
  }
  return fraction * bbox_diag;
}

}  // namespace mcconv
