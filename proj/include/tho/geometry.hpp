#pragma once

#include <array>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <json.hpp>

namespace tho {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Points = std::vector<Vec3>;

class GeometryError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Pinhole intrinsics. The camera frame is the world frame.
struct Camera {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  void validate() const;
};

struct RigidPose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static RigidPose identity() { return {}; }
  Vec3 operator()(const Vec3& v) const { return rotation * v + translation; }
  RigidPose inverse() const;
};

// a ∘ b: applies b first.
RigidPose compose(const RigidPose& a, const RigidPose& b);

/// First two columns of a rotation matrix, column-major: (c1x,c1y,c1z, c2x,c2y,c2z).
using Rot6D = std::array<double, 6>;

Vec2 project_point(const Camera& cam, const Vec3& v);

// Shifts the principal point by the crop's top-left corner and rescales a
// side×side box to target×target pixels.
Camera crop_intrinsics(const Camera& cam, const Vec2& top_left, double side, int target);

Mat3 rot6d_to_matrix(const Rot6D& r);
Rot6D matrix_to_rot6d(const Mat3& R);

Points apply_rigid(const RigidPose& pose, const Points& verts);

// Least-squares rotation + translation (no scale) taking src onto dst.
RigidPose umeyama_align(const Points& src, const Points& dst);

double geodesic_angle(const Mat3& a, const Mat3& b);

bool is_rotation(const Mat3& R, double tol = 1e-5);
Mat3 axis_angle_to_matrix(const Vec3& axis_angle);

void to_json(nlohmann::json& j, const Camera& cam);
void from_json(const nlohmann::json& j, Camera& cam);
void to_json(nlohmann::json& j, const RigidPose& pose);
void from_json(const nlohmann::json& j, RigidPose& pose);

}  // namespace tho
