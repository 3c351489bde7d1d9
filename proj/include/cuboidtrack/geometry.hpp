#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>

#include "cuboidtrack/errors.hpp"

namespace cuboidtrack {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Pinhole camera. Right-handed: +z forward, +x right, +y down, so image
// coordinates grow right/down and projection needs no sign flips.
struct CameraIntrinsics {
  double fx = 600.0;
  double fy = 600.0;
  double cx = 320.0;
  double cy = 240.0;
  int width = 640;
  int height = 480;

  double diagonal() const { return std::hypot(static_cast<double>(width), static_cast<double>(height)); }

  bool valid() const {
    return fx > 0.0 && fy > 0.0 && cx >= 0.0 && cx < width && cy >= 0.0 && cy < height;
  }

  bool contains(const Vec2& px) const {
    return px.x() >= 0.0 && px.x() < width && px.y() >= 0.0 && px.y() < height;
  }
};

struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static RigidTransform identity() { return {}; }

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }

  RigidTransform inverse() const {
    RigidTransform inv;
    inv.rotation = rotation.transpose();
    inv.translation = -(inv.rotation * translation);
    return inv;
  }
};

// compose(a, b) applies b first, then a.
inline RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  RigidTransform out;
  out.rotation = a.rotation * b.rotation;
  out.translation = a.rotation * b.translation + a.translation;
  return out;
}

inline RigidTransform operator*(const RigidTransform& a, const RigidTransform& b) {
  return compose(a, b);
}

inline bool is_orthonormal(const Mat3& r, double tol = 1e-9) {
  const Mat3 err = r.transpose() * r - Mat3::Identity();
  return err.cwiseAbs().maxCoeff() <= tol && std::abs(r.determinant() - 1.0) <= tol;
}

inline Mat3 skew(const Vec3& w) {
  Mat3 m;
  m << 0.0, -w.z(), w.y(),
       w.z(), 0.0, -w.x(),
       -w.y(), w.x(), 0.0;
  return m;
}

// Rodrigues rotation for an axis-angle vector; series expansion near zero.
inline Mat3 axis_angle_to_matrix(const Vec3& w) {
  const double theta = w.norm();
  const Mat3 k = skew(w);
  if (theta < 1e-10) {
    return Mat3::Identity() + k + 0.5 * k * k;
  }
  const double s = std::sin(theta) / theta;
  const double c = (1.0 - std::cos(theta)) / (theta * theta);
  return Mat3::Identity() + s * k + c * k * k;
}

inline Mat3 rotation_about_axis(const Vec3& axis, double angle) {
  return axis_angle_to_matrix(axis.normalized() * angle);
}

// Geodesic angle between two rotations, in radians.
inline double rotation_angle_between(const Mat3& a, const Mat3& b) {
  const double c = ((a * b.transpose()).trace() - 1.0) / 2.0;
  return std::acos(std::clamp(c, -1.0, 1.0));
}

// Nearest rotation matrix in Frobenius norm.
inline Mat3 orthonormalize(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0.0) {
    Mat3 u = svd.matrixU();
    u.col(2) *= -1.0;
    r = u * svd.matrixV().transpose();
  }
  return r;
}

// Relative width/height/length. Poses are recovered only up to scale, so the
// normalized form pins the second component to 1.
struct CuboidDimensions {
  Vec3 d = Vec3::Ones();

  CuboidDimensions() = default;
  explicit CuboidDimensions(const Vec3& dims) : d(dims) {}
  CuboidDimensions(double w, double h, double l) : d(w, h, l) {}

  bool valid() const { return d.x() > 0.0 && d.y() > 0.0 && d.z() > 0.0; }

  CuboidDimensions normalized() const { return CuboidDimensions(d / d.y()); }

  double volume() const { return d.x() * d.y() * d.z(); }
};

// Corner order is the 3-bit binary sign enumeration with x fastest:
// vertex i has sign (+ if bit set, - otherwise) for bits (0: x, 1: y, 2: z).
inline std::array<Vec3, 8> cuboid_vertices(const CuboidDimensions& dims, const RigidTransform& pose) {
  const Vec3 h = dims.d / 2.0;
  std::array<Vec3, 8> out;
  for (int i = 0; i < 8; ++i) {
    const Vec3 corner((i & 1) ? h.x() : -h.x(),
                      (i & 2) ? h.y() : -h.y(),
                      (i & 4) ? h.z() : -h.z());
    out[static_cast<size_t>(i)] = pose.apply(corner);
  }
  return out;
}

struct Cuboid {
  RigidTransform pose;
  CuboidDimensions dims;

  std::array<Vec3, 8> vertices() const { return cuboid_vertices(dims, pose); }

  double volume() const { return dims.volume(); }
};

inline Vec2 project(const Vec3& point, const CameraIntrinsics& k) {
  if (point.z() <= 0.0) {
    throw NonPositiveDepth("project: point depth must be positive, got z=" + std::to_string(point.z()));
  }
  return Vec2(k.fx * point.x() / point.z() + k.cx, k.fy * point.y() / point.z() + k.cy);
}

inline Vec3 unproject(const Vec2& pixel, double depth, const CameraIntrinsics& k) {
  return Vec3((pixel.x() - k.cx) / k.fx * depth, (pixel.y() - k.cy) / k.fy * depth, depth);
}

}  // namespace cuboidtrack
