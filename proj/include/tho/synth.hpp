#pragma once

// Synthetic scenes with exact ground truth: scripted body and object motion,
// point-splat masks, analytic (affine) feature maps, and a noisy motion prior
// standing in for an upstream human-motion estimator.

#include <cstdint>
#include <vector>

#include "tho/bodymodel.hpp"
#include "tho/dataprep.hpp"
#include "tho/io.hpp"
#include "tho/losses.hpp"
#include "tho/numerics.hpp"

namespace tho {

struct OcclusionWindow {
  std::size_t start = 0;  // first frame
  std::size_t end = 0;    // one past the last frame
  double fraction = 0.5;  // share of object-mask pixels removed, nearest the hand first
};

struct SceneScript {
  std::uint64_t seed = 0;
  std::size_t frames = 32;
  double fps = 30.0;
  Camera camera{500.0, 500.0, 320.0, 240.0, 640, 480};

  // Human: pelvis path start + velocity·time, yaw sway, limb swing.
  Vec3 start = Vec3(-0.4, 0.1, 3.5);
  Vec3 velocity = Vec3(0.2, 0.0, 0.0);
  double sway_amplitude = 0.2;  // rad
  double sway_frequency = 0.5;  // Hz
  double limb_swing = 0.3;      // rad
  std::array<double, kNumShape> betas{};

  // Object: a box surface, either held in a hand or moving freely.
  Vec3 object_size = Vec3(0.20, 0.14, 0.10);
  int object_subdivisions = 4;
  bool attached = true;
  std::size_t hand_joint = kRightHand;
  RigidPose hand_offset{Mat3::Identity(), Vec3(0.06, 0.04, 0.0)};
  Vec3 free_start = Vec3(0.3, 0.0, 3.2);
  Vec3 free_velocity = Vec3::Zero();
  double free_spin = 0.0;  // rad/s about the camera y axis

  std::vector<OcclusionWindow> occlusion;
  int splat_radius = 3;

  void validate() const;
};

void to_json(nlohmann::json& j, const SceneScript& s);
void from_json(const nlohmann::json& j, SceneScript& s);

struct Scene {
  Camera camera;
  FrameSequence frames;
  SequenceGT gt;
  Points pelvis;  // per-frame 3D pelvis joint
  Mesh object_template;
};

Mesh make_box_template(const Vec3& size, int subdivisions);

// Point-splat rasterisation of projected vertices into a mask.
void splat_points(Mask& mask, const Camera& cam, const Points& verts, int radius);

Scene generate_scene(const SceneScript& script, const ToySkeleton& skel);

struct AffineFeatureMap {
  FeatureMap map;
  std::vector<double> alpha;  // per channel, d/du
  std::vector<double> beta;   // per channel, d/dv
  std::vector<double> gamma;  // per channel offset

  double value(std::size_t c, double u, double v) const { return alpha[c] * u + beta[c] * v + gamma[c]; }
};

// Channel c holds alpha_c·u + beta_c·v + gamma_c at cell (u = column, v = row).
AffineFeatureMap affine_feature_map(std::size_t h, std::size_t w, std::size_t channels, std::uint64_t seed,
                                    std::size_t stride = 16);

struct MotionPrior {
  std::vector<Points> human_verts;
  std::vector<Points> joints;
};

// Per-frame rotation (about the GT pelvis) and translation perturbations,
// smoothed over a 5-frame window and rescaled so the RMS rotation angle is
// sigma_rot and the RMS translation magnitude is sigma_trans.
MotionPrior synthetic_motion_prior(const SequenceGT& gt, double sigma_rot, double sigma_trans, std::uint64_t seed);

}  // namespace tho
