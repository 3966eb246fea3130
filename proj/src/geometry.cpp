#include "tho/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Geometry>
#include <Eigen/SVD>

namespace tho {

void Camera::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw GeometryError("camera focal lengths must be positive");
  if (width < 1 || height < 1) throw GeometryError("camera image extent must be at least 1 px");
}

RigidPose RigidPose::inverse() const {
  RigidPose inv;
  inv.rotation = rotation.transpose();
  inv.translation = -(inv.rotation * translation);
  return inv;
}

RigidPose compose(const RigidPose& a, const RigidPose& b) {
  return {a.rotation * b.rotation, a.rotation * b.translation + a.translation};
}

Vec2 project_point(const Camera& cam, const Vec3& v) {
  if (v.z() <= 1e-6) {
    throw GeometryError("degenerate depth: point at z=" + std::to_string(v.z()) +
                        " is not in front of the camera");
  }
  return {cam.fx * v.x() / v.z() + cam.cx, cam.fy * v.y() / v.z() + cam.cy};
}

Camera crop_intrinsics(const Camera& cam, const Vec2& top_left, double side, int target) {
  if (!(side > 0.0)) throw GeometryError("crop side must be positive");
  if (target < 1) throw GeometryError("crop target size must be at least 1 px");
  const double s = static_cast<double>(target) / side;
  Camera out;
  out.fx = cam.fx * s;
  out.fy = cam.fy * s;
  out.cx = (cam.cx - top_left.x()) * s;
  out.cy = (cam.cy - top_left.y()) * s;
  out.width = target;
  out.height = target;
  return out;
}

Mat3 rot6d_to_matrix(const Rot6D& r) {
  const Vec3 a1(r[0], r[1], r[2]);
  const Vec3 a2(r[3], r[4], r[5]);
  const double n1 = a1.norm();
  if (n1 < 1e-8) throw GeometryError("degenerate 6D rotation: first column is near zero");
  const Vec3 c1 = a1 / n1;
  const Vec3 u2 = a2 - c1.dot(a2) * c1;
  const double n2 = u2.norm();
  if (n2 < 1e-8) throw GeometryError("degenerate 6D rotation: columns are near parallel");
  const Vec3 c2 = u2 / n2;
  Mat3 R;
  R.col(0) = c1;
  R.col(1) = c2;
  R.col(2) = c1.cross(c2);
  return R;
}

Rot6D matrix_to_rot6d(const Mat3& R) {
  if (!is_rotation(R, 1e-3)) throw GeometryError("matrix_to_rot6d: input is not a rotation");
  return {R(0, 0), R(1, 0), R(2, 0), R(0, 1), R(1, 1), R(2, 1)};
}

Points apply_rigid(const RigidPose& pose, const Points& verts) {
  Points out;
  out.reserve(verts.size());
  for (const Vec3& v : verts) out.push_back(pose(v));
  return out;
}

RigidPose umeyama_align(const Points& src, const Points& dst) {
  if (src.size() != dst.size()) throw GeometryError("umeyama_align: point counts differ");
  if (src.size() < 3) throw GeometryError("umeyama_align: need at least 3 correspondences");
  const double n = static_cast<double>(src.size());
  Vec3 mu_s = Vec3::Zero(), mu_d = Vec3::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    mu_s += src[i];
    mu_d += dst[i];
  }
  mu_s /= n;
  mu_d /= n;
  Mat3 cov = Mat3::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) cov += (dst[i] - mu_d) * (src[i] - mu_s).transpose();

  Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 sv = svd.singularValues();
  if (!(sv(0) > 0.0) || sv(1) <= 1e-12 * sv(0)) {
    throw GeometryError("degenerate alignment: cross-covariance has rank < 2 (collinear points?)");
  }
  Mat3 S = Mat3::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) S(2, 2) = -1.0;
  RigidPose pose;
  pose.rotation = svd.matrixU() * S * svd.matrixV().transpose();
  pose.translation = mu_d - pose.rotation * mu_s;
  return pose;
}

double geodesic_angle(const Mat3& a, const Mat3& b) {
  const double c = ((a.transpose() * b).trace() - 1.0) / 2.0;
  return std::acos(std::clamp(c, -1.0, 1.0));
}

bool is_rotation(const Mat3& R, double tol) {
  const double ortho = (R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff();
  return ortho <= tol && std::abs(R.determinant() - 1.0) <= tol;
}

Mat3 axis_angle_to_matrix(const Vec3& axis_angle) {
  const double angle = axis_angle.norm();
  if (angle < 1e-15) return Mat3::Identity();
  return Eigen::AngleAxisd(angle, axis_angle / angle).toRotationMatrix();
}

void to_json(nlohmann::json& j, const Camera& cam) {
  j = {{"fx", cam.fx}, {"fy", cam.fy},       {"cx", cam.cx},
       {"cy", cam.cy}, {"width", cam.width}, {"height", cam.height}};
}

void from_json(const nlohmann::json& j, Camera& cam) {
  j.at("fx").get_to(cam.fx);
  j.at("fy").get_to(cam.fy);
  j.at("cx").get_to(cam.cx);
  j.at("cy").get_to(cam.cy);
  j.at("width").get_to(cam.width);
  j.at("height").get_to(cam.height);
  cam.validate();
}

void to_json(nlohmann::json& j, const RigidPose& pose) {
  std::vector<double> R(9);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) R[r * 3 + c] = pose.rotation(r, c);
  j = {{"R", R}, {"T", {pose.translation.x(), pose.translation.y(), pose.translation.z()}}};
}

void from_json(const nlohmann::json& j, RigidPose& pose) {
  const auto R = j.at("R").get<std::vector<double>>();
  const auto T = j.at("T").get<std::vector<double>>();
  if (R.size() != 9 || T.size() != 3) throw GeometryError("RigidPose JSON needs 9 R and 3 T values");
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) pose.rotation(r, c) = R[r * 3 + c];
  pose.translation = Vec3(T[0], T[1], T[2]);
}

}  // namespace tho
