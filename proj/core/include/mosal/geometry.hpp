#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "mosal/errors.hpp"

namespace mosal {

/// One LiDAR return. Intensity is carried through the pipeline but never
/// consumed by any algorithm.
struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  float intensity = 0.0f;

  Eigen::Vector3d vec() const { return {x, y, z}; }
  bool finite() const;
};

/// One sweep. Point order is the on-disk order; labels are positional.
struct Scan {
  std::vector<Point3> points;
  int index = 0;
};

/// Rigid body transform (rotation + translation as a 4x4 homogeneous matrix).
class Transform {
 public:
  Transform() : m_(Eigen::Matrix4d::Identity()) {}

  /// Validates rigidity: orthonormal rotation, det = 1 (1e-6), last row 0001.
  static Transform from_matrix(const Eigen::Matrix4d& m);
  static Transform from_translation(const Eigen::Vector3d& t);
  static Transform from_yaw(double yaw);
  static Transform from_yaw_translation(double yaw, const Eigen::Vector3d& t);

  const Eigen::Matrix4d& matrix() const { return m_; }
  Eigen::Matrix3d rotation() const { return m_.topLeftCorner<3, 3>(); }
  Eigen::Vector3d translation() const { return m_.topRightCorner<3, 1>(); }

  /// Heading of the rotated x axis, projected to the xy plane.
  double yaw() const { return std::atan2(m_(1, 0), m_(0, 0)); }

  Transform inverse() const;
  Transform operator*(const Transform& rhs) const;

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const {
    return rotation() * p + translation();
  }
  Point3 apply(const Point3& p) const {
    Eigen::Vector3d q = apply(p.vec());
    return {q.x(), q.y(), q.z(), p.intensity};
  }

  bool is_rigid(double tol = 1e-6) const;

 private:
  explicit Transform(const Eigen::Matrix4d& m) : m_(m) {}
  Eigen::Matrix4d m_;
};

/// Gravity-aligned oriented box b = (c, yaw, l, w, h, s). Canonical form:
/// yaw in (-pi/2, pi/2] and length >= width.
struct BoundingBox {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  double yaw = 0.0;
  double length = 0.0;
  double width = 0.0;
  double height = 0.0;
  double confidence = 0.0;
  bool degenerate = false;

  double volume() const { return length * width * height; }
  double max_side() const { return std::max({length, width, height}); }
  double z_min() const { return center.z() - 0.5 * height; }
  double z_max() const { return center.z() + 0.5 * height; }

  /// CCW xy corners of the footprint rectangle.
  std::array<Eigen::Vector2d, 4> footprint() const;

  bool contains(const Eigen::Vector3d& p, double inflate = 0.0) const;

  /// Folds the 4-fold rectangle symmetry into yaw in (-pi/2, pi/2], l >= w.
  void canonicalize();
};

/// Applies pose to every point; intensity and order preserved.
/// Throws ValidationError naming the first non-finite input point.
Scan transform_points(const Scan& scan, const Transform& pose);
std::vector<Point3> transform_points(std::span<const Point3> points,
                                     const Transform& pose);

/// Minimum-area rectangle over the xy convex hull, extruded by [min z, max z].
/// Fewer than 3 non-collinear xy points falls back to an axis-aligned box
/// with extents clamped to >= 0.01 m and the degenerate flag set.
/// Throws ValidationError on an empty input.
BoundingBox fit_bounding_box(std::span<const Point3> points);
BoundingBox fit_bounding_box(const std::vector<Point3>& points,
                             const std::vector<std::uint32_t>& subset);

/// Exact overlap of two yaw-rotated boxes: convex polygon intersection in xy
/// times the vertical interval overlap. Disjoint boxes give 0.
double box_iou(const BoundingBox& a, const BoundingBox& b);

double box_volume(const BoundingBox& b);

/// Monotone-chain convex hull, CCW without repeated endpoint.
std::vector<Eigen::Vector2d> convex_hull_xy(std::vector<Eigen::Vector2d> pts);

/// Shoelace area of a simple polygon (positive for CCW order).
double polygon_area(const std::vector<Eigen::Vector2d>& poly);

/// Clips a convex polygon against another convex polygon (CCW order).
std::vector<Eigen::Vector2d> clip_convex_polygon(
    const std::vector<Eigen::Vector2d>& subject,
    const std::vector<Eigen::Vector2d>& clip);

}  // namespace mosal
