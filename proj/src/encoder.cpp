#include "tho/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace tho {

PooledFeature masked_avg_pool(const FeatureMap& map, const Mask& mask) {
  const std::size_t s = map.stride;
  if (static_cast<std::size_t>(mask.width) != map.width * s ||
      static_cast<std::size_t>(mask.height) != map.height * s) {
    throw ShapeError("masked_avg_pool: mask " + std::to_string(mask.width) + "x" +
                     std::to_string(mask.height) + " does not cover a " + std::to_string(map.width) +
                     "x" + std::to_string(map.height) + " grid at stride " + std::to_string(s));
  }
  std::vector<double> acc(map.channels, 0.0);
  std::size_t cells = 0;
  for (std::size_t cy = 0; cy < map.height; ++cy) {
    for (std::size_t cx = 0; cx < map.width; ++cx) {
      bool hit = false;
      for (std::size_t py = cy * s; py < (cy + 1) * s && !hit; ++py)
        for (std::size_t px = cx * s; px < (cx + 1) * s && !hit; ++px)
          hit = mask.at(static_cast<int>(px), static_cast<int>(py));
      if (!hit) continue;
      ++cells;
      auto f = map.cell(cy, cx);
      for (std::size_t c = 0; c < map.channels; ++c) acc[c] += f[c];
    }
  }
  PooledFeature out{Tensor({map.channels}), cells == 0};
  if (cells == 0) return out;
  for (std::size_t c = 0; c < map.channels; ++c) {
    out.value[c] = static_cast<float>(acc[c] / static_cast<double>(cells));
  }
  return out;
}

RigidPose init_object_pose(const Tensor& pooled, const Mlp& head) {
  if (head.out_dim() != 9) throw ShapeError("object pose head must output 9 values");
  const Tensor raw = head(pooled);
  Rot6D r;
  for (int k = 0; k < 6; ++k) r[k] = raw[k];
  RigidPose pose;
  pose.rotation = rot6d_to_matrix(r);
  pose.translation = Vec3(raw[6], raw[7], raw[8]);
  return pose;
}

RigidPose human_frame(const Vec3& pelvis) { return {Mat3::Identity(), pelvis}; }

RigidPose compose_to_world(const RigidPose& relative, const RigidPose& human_to_world) {
  return compose(human_to_world, relative);
}

VertexFeatures sample_vertex_features(const FeatureMap& map, const Camera& crop_cam, const Points& verts) {
  const std::size_t c = map.channels;
  VertexFeatures out{Tensor::matrix(verts.size(), c + 3), std::vector<bool>(verts.size(), false)};
  const double inv_stride = 1.0 / static_cast<double>(map.stride);
  for (std::size_t i = 0; i < verts.size(); ++i) {
    auto row = out.values.row(i);
    const Vec3& v = verts[i];
    if (v.z() > 1e-6) {
      const Vec2 p = project_point(crop_cam, v);
      bilinear_sample_into(map, p.x() * inv_stride, p.y() * inv_stride, row.first(c));
    } else {
      out.behind_camera[i] = true;
    }
    row[c] = static_cast<float>(v.x());
    row[c + 1] = static_cast<float>(v.y());
    row[c + 2] = static_cast<float>(v.z());
  }
  return out;
}

Tensor embed_vertices(const VertexFeatures& raw, const Mlp& embed) {
  if (raw.dim() != embed.in_dim()) {
    throw ShapeError("embed_vertices: features of width " + std::to_string(raw.dim()) +
                     ", embedding expects " + std::to_string(embed.in_dim()));
  }
  return embed(raw.values);
}

std::vector<std::size_t> farthest_point_subsample(const Points& pts, std::size_t max_count) {
  std::vector<std::size_t> idx;
  if (pts.size() <= max_count) {
    idx.resize(pts.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return idx;
  }
  std::vector<double> dist(pts.size(), std::numeric_limits<double>::infinity());
  std::size_t next = 0;
  while (idx.size() < max_count) {
    idx.push_back(next);
    std::size_t best = 0;
    double best_d = -1.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      dist[i] = std::min(dist[i], (pts[i] - pts[next]).squaredNorm());
      if (dist[i] > best_d) {
        best_d = dist[i];
        best = i;
      }
    }
    next = best;
  }
  return idx;
}

Tensor points_to_tensor(const Points& pts) {
  Tensor t = Tensor::matrix(pts.size(), 3);
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (int k = 0; k < 3; ++k) t.at(i, k) = static_cast<float>(pts[i][k]);
  return t;
}

Points tensor_to_points(const Tensor& t) {
  if (t.cols() != 3) throw ShapeError("expected an N×3 tensor, got " + shape_string(t.shape()));
  Points pts(t.rows());
  for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = Vec3(t.at(i, 0), t.at(i, 1), t.at(i, 2));
  return pts;
}

}  // namespace tho
