#pragma once

// A 24-joint rigidly skinned toy body standing in for a parametric body
// model. Every vertex is attached to exactly one joint.

#include <array>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "tho/geometry.hpp"
#include "tho/io.hpp"

namespace tho {

inline constexpr std::size_t kNumJoints = 24;
inline constexpr std::size_t kNumShape = 10;
inline constexpr std::size_t kPelvis = 0;
inline constexpr std::size_t kLeftWrist = 20;
inline constexpr std::size_t kRightWrist = 21;
inline constexpr std::size_t kRightHand = 23;

struct HumanParams {
  Rot6D root_orient{1, 0, 0, 0, 1, 0};
  std::vector<Rot6D> body_pose = std::vector<Rot6D>(kNumJoints, Rot6D{1, 0, 0, 0, 1, 0});
  std::array<double, kNumShape> betas{};
  Vec3 transl = Vec3::Zero();

  // Flat regression layout: root(6) ‖ pose(N_j·6) ‖ betas(10) ‖ transl(3).
  static constexpr std::size_t flat_size(std::size_t joints = kNumJoints) {
    return 6 + joints * 6 + kNumShape + 3;
  }
  std::vector<double> flatten() const;
  static HumanParams unflatten(std::span<const double> values, std::size_t joints = kNumJoints);
};

struct ToySkeleton {
  std::vector<int> parents;          // parents[0] == 0 (root refers to itself)
  Points rest_offsets;               // bone vector from parent joint, joint 0: absolute pelvis position
  std::vector<int> attachment;       // vertex -> joint
  Points rest_vertices;
  std::vector<Face> faces;
  std::vector<std::vector<double>> shape_basis;  // kNumShape × joints, bone-length scale directions

  std::size_t num_joints() const { return parents.size(); }
  std::size_t num_vertices() const { return rest_vertices.size(); }
  Points rest_joints() const;
  void validate() const;

  static ToySkeleton make_default();
};

struct BodyState {
  Points joints;
  Points vertices;
  std::vector<RigidPose> joint_transforms;  // world pose of each joint frame
};

BodyState forward_kinematics(const ToySkeleton& skel, const HumanParams& params);

std::vector<std::pair<int, int>> mesh_edges(const std::vector<Face>& faces);
inline std::vector<std::pair<int, int>> mesh_edges(const ToySkeleton& skel) { return mesh_edges(skel.faces); }

nlohmann::json skeleton_to_json(const ToySkeleton& skel);
// Rest vertices and faces come from the OBJ mesh.
ToySkeleton skeleton_from_json(const nlohmann::json& j, const Mesh& rest_mesh);

void to_json(nlohmann::json& j, const HumanParams& p);
void from_json(const nlohmann::json& j, HumanParams& p);

}  // namespace tho
