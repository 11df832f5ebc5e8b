#include "lgmreg/geom3d.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "lgmreg/error.hpp"
#include "lgmreg/svd3.hpp"

namespace lgmreg {

PointCloud::PointCloud(PointMatrix points) : points_(std::move(points)) {
  if (points_.rows() == 0) throw InvalidArgument("point cloud must contain at least one point");
  if (!points_.allFinite()) throw InvalidArgument("point cloud contains non-finite coordinates");
}

PointCloud::PointCloud(const std::vector<Vec3>& points) {
  PointMatrix m(static_cast<Eigen::Index>(points.size()), 3);
  for (std::size_t i = 0; i < points.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = points[i].transpose();
  *this = PointCloud(std::move(m));
}

Vec3 PointCloud::centroid() const { return points_.colwise().mean().transpose(); }

PointCloud PointCloud::centered() const {
  PointMatrix m = points_.rowwise() - points_.colwise().mean();
  return PointCloud(std::move(m));
}

PointCloud PointCloud::subset(const std::vector<std::size_t>& indices) const {
  PointMatrix m(static_cast<Eigen::Index>(indices.size()), 3);
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= size()) throw InvalidArgument("subset index out of range");
    m.row(static_cast<Eigen::Index>(k)) = points_.row(static_cast<Eigen::Index>(indices[k]));
  }
  return PointCloud(std::move(m));
}

RigidTransform RigidTransform::from_homogeneous(const Mat4& H, double tolerance) {
  if (!H.allFinite()) throw InvalidArgument("transform contains non-finite entries");
  const Eigen::RowVector4d last(0, 0, 0, 1);
  if ((H.row(3) - last).cwiseAbs().maxCoeff() > tolerance)
    throw InvalidArgument("homogeneous transform must end with row 0 0 0 1");
  RigidTransform T{H.topLeftCorner<3, 3>(), H.topRightCorner<3, 1>()};
  if (!T.is_valid(tolerance)) throw InvalidArgument("transform block is not a proper rotation");
  T.R = sanitize_rotation(T.R);
  return T;
}

Mat4 RigidTransform::homogeneous() const {
  Mat4 H = Mat4::Identity();
  H.topLeftCorner<3, 3>() = R;
  H.topRightCorner<3, 1>() = t;
  return H;
}

bool RigidTransform::is_valid(double tolerance) const {
  if (!R.allFinite() || !t.allFinite()) return false;
  return orthonormality_defect(R) <= tolerance && std::abs(R.determinant() - 1.0) <= tolerance;
}

PointCloud apply_transform(const RigidTransform& T, const PointCloud& P) {
  PointMatrix out = P.matrix() * T.R.transpose();
  out.rowwise() += T.t.transpose();
  return PointCloud(std::move(out));
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  return {sanitize_rotation(a.R * b.R), a.R * b.t + a.t};
}

RigidTransform invert(const RigidTransform& T) {
  const Mat3 Rt = T.R.transpose();
  return {Rt, -(Rt * T.t)};
}

Mat3 random_rotation(Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::Vector4d q;
  do {
    for (int k = 0; k < 4; ++k) q(k) = normal(rng);
  } while (q.norm() < 1e-12);
  q.normalize();
  return Eigen::Quaterniond(q(0), q(1), q(2), q(3)).toRotationMatrix();
}

double rotation_angle(const Mat3& R) {
  const double c = std::clamp((R.trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c);
}

Mat3 axis_angle(const Vec3& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

double orthonormality_defect(const Mat3& R) {
  return (R.transpose() * R - Mat3::Identity()).norm();
}

Mat3 orthonormalize(const Mat3& R) {
  const Svd3 d = svd3(R);
  Mat3 D = Mat3::Identity();
  D(2, 2) = (d.U * d.V.transpose()).determinant() < 0 ? -1.0 : 1.0;
  return d.U * D * d.V.transpose();
}

Mat3 sanitize_rotation(const Mat3& R) {
  return orthonormality_defect(R) > 1e-7 ? orthonormalize(R) : R;
}

}  // namespace lgmreg
