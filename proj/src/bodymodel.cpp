#include "tho/bodymodel.hpp"

#include <cmath>
#include <numbers>
#include <set>
#include <string>

namespace tho {

std::vector<double> HumanParams::flatten() const {
  std::vector<double> out;
  out.reserve(flat_size(body_pose.size()));
  out.insert(out.end(), root_orient.begin(), root_orient.end());
  for (const Rot6D& r : body_pose) out.insert(out.end(), r.begin(), r.end());
  out.insert(out.end(), betas.begin(), betas.end());
  out.insert(out.end(), transl.data(), transl.data() + 3);
  return out;
}

HumanParams HumanParams::unflatten(std::span<const double> values, std::size_t joints) {
  if (values.size() != flat_size(joints)) {
    throw std::invalid_argument("human parameter vector has " + std::to_string(values.size()) +
                                " values, expected " + std::to_string(flat_size(joints)));
  }
  HumanParams p;
  std::size_t i = 0;
  for (double& v : p.root_orient) v = values[i++];
  p.body_pose.assign(joints, Rot6D{});
  for (Rot6D& r : p.body_pose)
    for (double& v : r) v = values[i++];
  for (double& b : p.betas) b = values[i++];
  for (int k = 0; k < 3; ++k) p.transl[k] = values[i++];
  return p;
}

Points ToySkeleton::rest_joints() const {
  Points j(num_joints());
  for (std::size_t k = 0; k < num_joints(); ++k) {
    j[k] = k == 0 ? rest_offsets[0] : j[parents[k]] + rest_offsets[k];
  }
  return j;
}

void ToySkeleton::validate() const {
  const std::size_t nj = num_joints();
  if (nj == 0 || parents[0] != 0) throw std::invalid_argument("skeleton: joint 0 must be the root");
  if (rest_offsets.size() != nj) throw std::invalid_argument("skeleton: offsets/joints count mismatch");
  for (std::size_t k = 1; k < nj; ++k) {
    // Parents precede children, which also rules out cycles.
    if (parents[k] < 0 || static_cast<std::size_t>(parents[k]) >= k) {
      throw std::invalid_argument("skeleton: joint " + std::to_string(k) + " has invalid parent " +
                                  std::to_string(parents[k]));
    }
  }
  if (attachment.size() != rest_vertices.size()) {
    throw std::invalid_argument("skeleton: attachment count != vertex count");
  }
  for (int a : attachment) {
    if (a < 0 || static_cast<std::size_t>(a) >= nj) throw std::invalid_argument("skeleton: bad attachment");
  }
  for (const Face& f : faces) {
    for (int v : f) {
      if (v < 0 || static_cast<std::size_t>(v) >= rest_vertices.size()) {
        throw std::invalid_argument("skeleton: face references vertex " + std::to_string(v));
      }
    }
  }
  if (shape_basis.size() != kNumShape) throw std::invalid_argument("skeleton: shape basis needs 10 rows");
  for (const auto& row : shape_basis) {
    if (row.size() != nj) throw std::invalid_argument("skeleton: shape basis row length != joints");
  }
}

namespace {

void add_tube(ToySkeleton& skel, int joint, const Vec3& start, const Vec3& dir, double length,
              double radius, int rings, int around, std::span<const double> ring_pos) {
  const Vec3 axis = dir.normalized();
  const Vec3 helper = std::abs(axis.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  const Vec3 b1 = axis.cross(helper).normalized();
  const Vec3 b2 = axis.cross(b1);
  const int base = static_cast<int>(skel.rest_vertices.size());
  for (int r = 0; r < rings; ++r) {
    const Vec3 c = start + axis * (ring_pos[r] * length);
    for (int k = 0; k < around; ++k) {
      const double a = 2.0 * std::numbers::pi * k / around;
      skel.rest_vertices.push_back(c + radius * (std::cos(a) * b1 + std::sin(a) * b2));
      skel.attachment.push_back(joint);
    }
  }
  for (int r = 0; r + 1 < rings; ++r) {
    for (int k = 0; k < around; ++k) {
      const int k1 = (k + 1) % around;
      const int a0 = base + r * around + k, a1 = base + r * around + k1;
      const int b0 = base + (r + 1) * around + k, b1i = base + (r + 1) * around + k1;
      skel.faces.push_back({a0, a1, b0});
      skel.faces.push_back({a1, b1i, b0});
    }
  }
}

}  // namespace

ToySkeleton ToySkeleton::make_default() {
  ToySkeleton s;
  s.parents = {0, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 9, 9, 12, 13, 14, 16, 17, 18, 19, 20, 21};
  // Bone vectors in a y-up, z-forward body frame.
  const std::array<Vec3, kNumJoints> up_frame = {
      Vec3(0, 0, 0),         Vec3(0.06, -0.09, 0),  Vec3(-0.06, -0.09, 0), Vec3(0, 0.11, 0),
      Vec3(0.04, -0.38, 0),  Vec3(-0.04, -0.38, 0), Vec3(0, 0.13, 0),      Vec3(0, -0.40, 0),
      Vec3(0, -0.40, 0),     Vec3(0, 0.05, 0),      Vec3(0, -0.06, 0.12),  Vec3(0, -0.06, 0.12),
      Vec3(0, 0.21, 0),      Vec3(0.07, 0.11, 0),   Vec3(-0.07, 0.11, 0),  Vec3(0, 0.09, 0.05),
      Vec3(0.11, 0.04, 0),   Vec3(-0.11, 0.04, 0),  Vec3(0.26, 0, 0),      Vec3(-0.26, 0, 0),
      Vec3(0.25, 0, 0),      Vec3(-0.25, 0, 0),     Vec3(0.08, 0, 0),      Vec3(-0.08, 0, 0)};
  // Camera convention: y down, z away from the viewer, so the body faces the camera.
  for (const Vec3& o : up_frame) s.rest_offsets.emplace_back(o.x(), -o.y(), -o.z());

  const Points joints = s.rest_joints();
  std::vector<int> first_child(kNumJoints, -1);
  for (std::size_t k = kNumJoints; k-- > 1;) first_child[s.parents[k]] = static_cast<int>(k);

  // Pelvis: a 2×8 band; every other joint: a 3×6 tube along its bone. 16 + 23·18 = 430 vertices.
  const std::array<double, 2> band = {-0.5, 0.5};
  add_tube(s, 0, joints[0], Vec3(0, 1, 0), 0.08, 0.11, 2, 8, band);
  const std::array<double, 3> rings = {0.1, 0.5, 0.9};
  for (int j = 1; j < static_cast<int>(kNumJoints); ++j) {
    const bool leaf = first_child[j] < 0;
    const Vec3 dir = leaf ? s.rest_offsets[j] : s.rest_offsets[first_child[j]];
    const double len = leaf ? 0.5 * dir.norm() : dir.norm();
    const bool torso = j == 3 || j == 6 || j == 9;
    add_tube(s, j, joints[j], dir, len, torso ? 0.09 : 0.04, 3, 6, rings);
  }

  s.shape_basis.assign(kNumShape, std::vector<double>(kNumJoints, 0.0));
  auto set = [&](std::size_t k, std::initializer_list<int> js, double v) {
    for (int j : js) s.shape_basis[k][j] = v;
  };
  for (std::size_t j = 1; j < kNumJoints; ++j) s.shape_basis[0][j] = 0.1;
  set(1, {1, 2, 4, 5, 7, 8, 10, 11}, 0.1);
  set(2, {16, 17, 18, 19, 20, 21, 22, 23}, 0.1);
  set(3, {3, 6, 9, 12, 15}, 0.1);
  set(4, {1, 4, 7, 10, 13, 16, 18, 20, 22}, 0.05);
  set(4, {2, 5, 8, 11, 14, 17, 19, 21, 23}, -0.05);
  set(5, {1, 2, 13, 14}, 0.2);
  set(6, {4, 5}, 0.15);
  set(7, {7, 8}, 0.15);
  set(8, {18, 19}, 0.15);
  set(9, {20, 21}, 0.15);
  s.validate();
  return s;
}

BodyState forward_kinematics(const ToySkeleton& skel, const HumanParams& params) {
  const std::size_t nj = skel.num_joints();
  if (params.body_pose.size() != nj) {
    throw std::invalid_argument("body pose has " + std::to_string(params.body_pose.size()) +
                                " joints, skeleton has " + std::to_string(nj));
  }
  std::vector<RigidPose> global(nj);
  for (std::size_t j = 0; j < nj; ++j) {
    const Mat3 local = rot6d_to_matrix(params.body_pose[j]);
    if (j == 0) {
      global[0].rotation = rot6d_to_matrix(params.root_orient) * local;
      global[0].translation = skel.rest_offsets[0];
      continue;
    }
    double scale = 1.0;
    for (std::size_t k = 0; k < kNumShape; ++k) scale += params.betas[k] * skel.shape_basis[k][j];
    const RigidPose& parent = global[skel.parents[j]];
    global[j].rotation = parent.rotation * local;
    global[j].translation = parent(skel.rest_offsets[j] * scale);
  }

  const Points rest = skel.rest_joints();
  BodyState out;
  out.joints.reserve(nj);
  for (const RigidPose& g : global) {
    out.joints.push_back(g.translation + params.transl);
    out.joint_transforms.push_back({g.rotation, g.translation + params.transl});
  }
  out.vertices.reserve(skel.num_vertices());
  for (std::size_t v = 0; v < skel.num_vertices(); ++v) {
    const int j = skel.attachment[v];
    out.vertices.push_back(global[j](skel.rest_vertices[v] - rest[j]) + params.transl);
  }
  return out;
}

std::vector<std::pair<int, int>> mesh_edges(const std::vector<Face>& faces) {
  std::set<std::pair<int, int>> seen;
  std::vector<std::pair<int, int>> edges;
  for (const Face& f : faces) {
    for (int k = 0; k < 3; ++k) {
      const int a = f[k], b = f[(k + 1) % 3];
      const auto e = std::minmax(a, b);
      if (a != b && seen.insert(e).second) edges.push_back(e);
    }
  }
  return edges;
}

nlohmann::json skeleton_to_json(const ToySkeleton& skel) {
  nlohmann::json offsets = nlohmann::json::array();
  for (const Vec3& o : skel.rest_offsets) offsets.push_back({o.x(), o.y(), o.z()});
  return {{"parents", skel.parents},
          {"offsets", offsets},
          {"attachments", skel.attachment},
          {"shape_basis", skel.shape_basis}};
}

ToySkeleton skeleton_from_json(const nlohmann::json& j, const Mesh& rest_mesh) {
  ToySkeleton s;
  s.parents = j.at("parents").get<std::vector<int>>();
  for (const auto& o : j.at("offsets")) {
    const auto v = o.get<std::vector<double>>();
    if (v.size() != 3) throw std::invalid_argument("skeleton: offsets must be 3-vectors");
    s.rest_offsets.emplace_back(v[0], v[1], v[2]);
  }
  s.attachment = j.at("attachments").get<std::vector<int>>();
  s.shape_basis = j.at("shape_basis").get<std::vector<std::vector<double>>>();
  s.rest_vertices = rest_mesh.vertices;
  s.faces = rest_mesh.faces;
  s.validate();
  return s;
}

void to_json(nlohmann::json& j, const HumanParams& p) {
  j = {{"root_orient", p.root_orient},
       {"body_pose", p.body_pose},
       {"betas", p.betas},
       {"transl", {p.transl.x(), p.transl.y(), p.transl.z()}}};
}

void from_json(const nlohmann::json& j, HumanParams& p) {
  j.at("root_orient").get_to(p.root_orient);
  j.at("body_pose").get_to(p.body_pose);
  j.at("betas").get_to(p.betas);
  const auto t = j.at("transl").get<std::vector<double>>();
  if (t.size() != 3) throw std::invalid_argument("transl must have 3 values");
  p.transl = Vec3(t[0], t[1], t[2]);
}

}  // namespace tho
