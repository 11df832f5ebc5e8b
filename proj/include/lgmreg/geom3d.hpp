#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstddef>
#include <vector>

#include "lgmreg/random.hpp"

namespace lgmreg {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
/// N x 3, one point per row.
using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, 3>;

/// Ordered set of N >= 1 finite 3D points.
class PointCloud {
 public:
  PointCloud() = default;
  /// Throws InvalidArgument on an empty matrix or non-finite coordinates.
  explicit PointCloud(PointMatrix points);
  explicit PointCloud(const std::vector<Vec3>& points);

  std::size_t size() const { return static_cast<std::size_t>(points_.rows()); }
  bool empty() const { return points_.rows() == 0; }
  Vec3 point(std::size_t i) const { return points_.row(static_cast<Eigen::Index>(i)).transpose(); }
  const PointMatrix& matrix() const { return points_; }

  Vec3 centroid() const;
  /// Copy translated so that the centroid sits at the origin.
  PointCloud centered() const;
  /// Rows `indices` in the given order.
  PointCloud subset(const std::vector<std::size_t>& indices) const;

 private:
  PointMatrix points_;
};

/// Proper rigid motion x -> R x + t.
struct RigidTransform {
  Mat3 R = Mat3::Identity();
  Vec3 t = Vec3::Zero();

  static RigidTransform identity() { return {}; }
  static RigidTransform translation(const Vec3& t) { return {Mat3::Identity(), t}; }
  static RigidTransform rotation(const Mat3& R) { return {R, Vec3::Zero()}; }
  /// Throws InvalidArgument unless the last row is (0 0 0 1) and the block is a rotation.
  static RigidTransform from_homogeneous(const Mat4& H, double tolerance = 1e-6);

  Vec3 operator()(const Vec3& p) const { return R * p + t; }
  Mat4 homogeneous() const;
  /// True when R^T R = I and det R = +1 within `tolerance`.
  bool is_valid(double tolerance = 1e-9) const;
};

/// Output point i equals R p_i + t.
PointCloud apply_transform(const RigidTransform& T, const PointCloud& P);
/// (compose(a, b))(p) == a(b(p)).
RigidTransform compose(const RigidTransform& a, const RigidTransform& b);
RigidTransform invert(const RigidTransform& T);

/// Uniform (Haar) rotation via a normalized 4D Gaussian quaternion.
Mat3 random_rotation(Rng& rng);
/// Angle in [0, pi]; the arccos argument is clamped.
double rotation_angle(const Mat3& R);
Mat3 axis_angle(const Vec3& axis, double angle);

/// Frobenius norm of R^T R - I.
double orthonormality_defect(const Mat3& R);
/// Nearest rotation (polar factor with det +1).
Mat3 orthonormalize(const Mat3& R);
/// Re-orthonormalizes R when its defect exceeds 1e-7.
Mat3 sanitize_rotation(const Mat3& R);

}  // namespace lgmreg
