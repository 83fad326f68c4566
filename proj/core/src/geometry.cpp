#include "mosal/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace mosal {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kHalfPi = 0.5 * std::numbers::pi;
constexpr double kMinExtent = 0.01;

double cross2(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return a.x() * b.y() - a.y() * b.x();
}

}  // namespace

bool Point3::finite() const {
  return std::isfinite(x) && std::isfinite(y) && std::isfinite(z) &&
         std::isfinite(intensity);
}

Transform Transform::from_matrix(const Eigen::Matrix4d& m) {
  Transform t(m);
  if (!m.allFinite()) throw ValidationError("transform has non-finite entries");
  if (!t.is_rigid()) throw ValidationError("matrix is not a rigid transform");
  return t;
}

Transform Transform::from_translation(const Eigen::Vector3d& t) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topRightCorner<3, 1>() = t;
  return Transform(m);
}

Transform Transform::from_yaw(double yaw) {
  return from_yaw_translation(yaw, Eigen::Vector3d::Zero());
}

Transform Transform::from_yaw_translation(double yaw, const Eigen::Vector3d& t) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  m(0, 0) = c;
  m(0, 1) = -s;
  m(1, 0) = s;
  m(1, 1) = c;
  m.topRightCorner<3, 1>() = t;
  return Transform(m);
}

Transform Transform::inverse() const {
  Eigen::Matrix4d inv = Eigen::Matrix4d::Identity();
  const Eigen::Matrix3d rt = rotation().transpose();
  inv.topLeftCorner<3, 3>() = rt;
  inv.topRightCorner<3, 1>() = -rt * translation();
  return Transform(inv);
}

Transform Transform::operator*(const Transform& rhs) const {
  return Transform(Eigen::Matrix4d(m_ * rhs.m_));
}

bool Transform::is_rigid(double tol) const {
  const Eigen::Matrix3d r = rotation();
  if ((r * r.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() >
      tol) {
    return false;
  }
  if (std::abs(r.determinant() - 1.0) > tol) return false;
  const Eigen::RowVector4d last = m_.row(3);
  return last.isApprox(Eigen::RowVector4d(0, 0, 0, 1), tol) ||
         (last - Eigen::RowVector4d(0, 0, 0, 1)).cwiseAbs().maxCoeff() <= tol;
}

std::array<Eigen::Vector2d, 4> BoundingBox::footprint() const {
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  const double hl = 0.5 * length;
  const double hw = 0.5 * width;
  const Eigen::Vector2d u(c, s);    // along heading
  const Eigen::Vector2d v(-s, c);   // lateral
  const Eigen::Vector2d cc(center.x(), center.y());
  return {cc + u * hl + v * hw, cc - u * hl + v * hw, cc - u * hl - v * hw,
          cc + u * hl - v * hw};
}

bool BoundingBox::contains(const Eigen::Vector3d& p, double inflate) const {
  const Eigen::Vector3d d = p - center;
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  const double du = c * d.x() + s * d.y();
  const double dv = -s * d.x() + c * d.y();
  return std::abs(du) <= 0.5 * length + inflate &&
         std::abs(dv) <= 0.5 * width + inflate &&
         std::abs(d.z()) <= 0.5 * height + inflate;
}

void BoundingBox::canonicalize() {
  if (width > length) {
    std::swap(width, length);
    yaw += kHalfPi;
  }
  yaw = std::remainder(yaw, kPi);
  if (yaw <= -kHalfPi) yaw += kPi;
  if (yaw > kHalfPi) yaw -= kPi;
}

std::vector<Point3> transform_points(std::span<const Point3> points,
                                     const Transform& pose) {
  std::vector<Point3> out;
  out.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!points[i].finite()) {
      throw ValidationError("non-finite point at index " + std::to_string(i));
    }
    out.push_back(pose.apply(points[i]));
  }
  return out;
}

Scan transform_points(const Scan& scan, const Transform& pose) {
  Scan out;
  out.index = scan.index;
  out.points = transform_points(std::span<const Point3>(scan.points), pose);
  return out;
}

std::vector<Eigen::Vector2d> convex_hull_xy(std::vector<Eigen::Vector2d> pts) {
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const auto& a, const auto& b) {
                          return a.x() == b.x() && a.y() == b.y();
                        }),
            pts.end());
  const std::size_t n = pts.size();
  if (n < 3) return pts;
  std::vector<Eigen::Vector2d> hull(2 * n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    while (k >= 2 &&
           cross2(hull[k - 1] - hull[k - 2], pts[i] - hull[k - 2]) <= 0.0) {
      --k;
    }
    hull[k++] = pts[i];
  }
  for (std::size_t i = n - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower &&
           cross2(hull[k - 1] - hull[k - 2], pts[i] - hull[k - 2]) <= 0.0) {
      --k;
    }
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

double polygon_area(const std::vector<Eigen::Vector2d>& poly) {
  const std::size_t n = poly.size();
  if (n < 3) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = poly[i];
    const auto& b = poly[(i + 1) % n];
    acc += cross2(a, b);
  }
  return 0.5 * acc;
}

std::vector<Eigen::Vector2d> clip_convex_polygon(
    const std::vector<Eigen::Vector2d>& subject,
    const std::vector<Eigen::Vector2d>& clip) {
  std::vector<Eigen::Vector2d> poly = subject;
  const std::size_t m = clip.size();
  for (std::size_t e = 0; e < m && !poly.empty(); ++e) {
    const Eigen::Vector2d a = clip[e];
    const Eigen::Vector2d b = clip[(e + 1) % m];
    const Eigen::Vector2d edge = b - a;
    std::vector<Eigen::Vector2d> next;
    next.reserve(poly.size() + 2);
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Eigen::Vector2d& cur = poly[i];
      const Eigen::Vector2d& prev = poly[(i + n - 1) % n];
      const double cur_side = cross2(edge, cur - a);
      const double prev_side = cross2(edge, prev - a);
      const bool cur_in = cur_side >= 0.0;
      const bool prev_in = prev_side >= 0.0;
      if (cur_in != prev_in) {
        const double t = prev_side / (prev_side - cur_side);
        next.push_back(prev + t * (cur - prev));
      }
      if (cur_in) next.push_back(cur);
    }
    poly = std::move(next);
  }
  return poly;
}

namespace {

struct RectCandidate {
  double area = std::numeric_limits<double>::infinity();
  double angle = 0.0;
  double u_min = 0.0, u_max = 0.0, v_min = 0.0, v_max = 0.0;
};

BoundingBox finish_box(const Eigen::Vector2d& cxy, double yaw, double l,
                       double w, double z_lo, double z_hi, std::size_t n,
                       bool degenerate) {
  BoundingBox box;
  box.center = {cxy.x(), cxy.y(), 0.5 * (z_lo + z_hi)};
  box.yaw = yaw;
  box.length = std::max(l, kMinExtent);
  box.width = std::max(w, kMinExtent);
  box.height = std::max(z_hi - z_lo, kMinExtent);
  box.confidence = std::min(1.0, static_cast<double>(n) / 100.0);
  box.degenerate = degenerate;
  box.canonicalize();
  return box;
}

BoundingBox fit_box_impl(std::span<const Point3> points) {
  if (points.empty()) {
    throw ValidationError("cannot fit a bounding box to an empty point set");
  }
  double z_lo = std::numeric_limits<double>::infinity();
  double z_hi = -z_lo;
  std::vector<Eigen::Vector2d> xy;
  xy.reserve(points.size());
  for (const auto& p : points) {
    xy.emplace_back(p.x, p.y);
    z_lo = std::min(z_lo, p.z);
    z_hi = std::max(z_hi, p.z);
  }
  const auto hull = convex_hull_xy(xy);
  if (hull.size() < 3) {
    // Collinear or tiny set: axis-aligned fallback.
    Eigen::Vector2d lo = xy.front();
    Eigen::Vector2d hi = xy.front();
    for (const auto& q : xy) {
      lo = lo.cwiseMin(q);
      hi = hi.cwiseMax(q);
    }
    return finish_box(0.5 * (lo + hi), 0.0, hi.x() - lo.x(), hi.y() - lo.y(),
                      z_lo, z_hi, points.size(), true);
  }

  // Rotating calipers: the optimal rectangle shares a direction with some
  // hull edge.
  RectCandidate best;
  const std::size_t h = hull.size();
  for (std::size_t i = 0; i < h; ++i) {
    const Eigen::Vector2d e = hull[(i + 1) % h] - hull[i];
    const double len = e.norm();
    if (len < 1e-12) continue;
    const Eigen::Vector2d u = e / len;
    const Eigen::Vector2d v(-u.y(), u.x());
    double u_min = std::numeric_limits<double>::infinity(), u_max = -u_min;
    double v_min = u_min, v_max = -u_min;
    for (const auto& q : hull) {
      const double pu = u.dot(q);
      const double pv = v.dot(q);
      u_min = std::min(u_min, pu);
      u_max = std::max(u_max, pu);
      v_min = std::min(v_min, pv);
      v_max = std::max(v_max, pv);
    }
    const double area = (u_max - u_min) * (v_max - v_min);
    if (area < best.area) {
      best = {area, std::atan2(u.y(), u.x()), u_min, u_max, v_min, v_max};
    }
  }
  const double c = std::cos(best.angle);
  const double s = std::sin(best.angle);
  const Eigen::Vector2d u(c, s);
  const Eigen::Vector2d v(-s, c);
  const Eigen::Vector2d cxy =
      u * (0.5 * (best.u_min + best.u_max)) + v * (0.5 * (best.v_min + best.v_max));
  return finish_box(cxy, best.angle, best.u_max - best.u_min,
                    best.v_max - best.v_min, z_lo, z_hi, points.size(), false);
}

}  // namespace

BoundingBox fit_bounding_box(std::span<const Point3> points) {
  return fit_box_impl(points);
}

BoundingBox fit_bounding_box(const std::vector<Point3>& points,
                             const std::vector<std::uint32_t>& subset) {
  std::vector<Point3> gathered;
  gathered.reserve(subset.size());
  for (auto idx : subset) gathered.push_back(points[idx]);
  return fit_box_impl(gathered);
}

double box_volume(const BoundingBox& b) { return b.volume(); }

double box_iou(const BoundingBox& a, const BoundingBox& b) {
  const double dz =
      std::min(a.z_max(), b.z_max()) - std::max(a.z_min(), b.z_min());
  if (dz <= 0.0) return 0.0;
  const double horizontal_gap =
      (a.center - b.center).head<2>().norm() -
      0.5 * (std::hypot(a.length, a.width) + std::hypot(b.length, b.width));
  if (horizontal_gap > 0.0) return 0.0;

  const auto fa = a.footprint();
  const auto fb = b.footprint();
  const std::vector<Eigen::Vector2d> pa(fa.begin(), fa.end());
  const std::vector<Eigen::Vector2d> pb(fb.begin(), fb.end());
  const auto inter_poly = clip_convex_polygon(pa, pb);
  const double inter_area = std::max(0.0, polygon_area(inter_poly));
  const double inter = inter_area * dz;
  const double denom = a.volume() + b.volume() - inter;
  if (denom <= 0.0) return 0.0;
  return std::clamp(inter / denom, 0.0, 1.0);
}

}  // namespace mosal
