#pragma once

// Per-frame 3D vertex encoding: object pose initialisation from pooled image
// features, projection-based feature sampling for every vertex, and the
// per-entity embedding into the model width.

#include <vector>

#include "tho/geometry.hpp"
#include "tho/io.hpp"
#include "tho/numerics.hpp"

namespace tho {

inline constexpr std::size_t kMaxObjectVertices = 1024;

struct PooledFeature {
  Tensor value;        // C
  bool empty = false;  // no foreground cell; value is all zeros
};

// The S×S mask is reduced to the h×w grid first: a cell is foreground if any
// pixel it covers is.
PooledFeature masked_avg_pool(const FeatureMap& map, const Mask& mask);

// MLP output (9 values) decoded as a 6D rotation and a translation, relative
// to the human frame.
RigidPose init_object_pose(const Tensor& pooled, const Mlp& head);

// Pelvis-centred, axis-aligned with the camera/world frame.
RigidPose human_frame(const Vec3& pelvis);
RigidPose compose_to_world(const RigidPose& relative, const RigidPose& human_to_world);

/// Per-vertex [sampled feature ‖ x y z].
struct VertexFeatures {
  Tensor values;                     // N × (C+3)
  std::vector<bool> behind_camera;   // vertex got a zero feature

  std::size_t count() const { return values.rows(); }
  std::size_t dim() const { return values.cols(); }
};

VertexFeatures sample_vertex_features(const FeatureMap& map, const Camera& crop_cam, const Points& verts);

Tensor embed_vertices(const VertexFeatures& raw, const Mlp& embed);

// Greedy farthest-point selection starting from vertex 0. Returns all indices
// in order when the set already fits.
std::vector<std::size_t> farthest_point_subsample(const Points& pts, std::size_t max_count = kMaxObjectVertices);

Tensor points_to_tensor(const Points& pts);
Points tensor_to_points(const Tensor& t);

}  // namespace tho
