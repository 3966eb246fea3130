#pragma once

// Frame-level motion tokens, the rotary local-window temporal transformer,
// and the regression heads that decode refined tokens into human parameters
// and object poses.

#include <span>
#include <vector>

#include "tho/bodymodel.hpp"
#include "tho/encoder.hpp"
#include "tho/numerics.hpp"

namespace tho {

struct TiatConfig {
  std::size_t layers = 12;
  AttentionConfig attention;
  std::size_t window = 64;
  double rope_base = 10000.0;

  void validate() const;
};

struct TiatLayer {
  AttentionWeights attn;
  LayerNorm attn_norm;
  FfnWeights ffn;
  LayerNorm ffn_norm;
};

/// Crop box (centre x, centre y, side) and the 3D pelvis, in that order.
struct GlobalContext {
  double center_x = 0.0;
  double center_y = 0.0;
  double side = 1.0;
  Vec3 pelvis = Vec3::Zero();

  Tensor as_tensor() const;
};

struct TokenizerWeights {
  Linear joint_proj;  // (C+3) -> D
  Mlp object_mlp;     // D -> D
  Mlp joint_mlp;      // D -> D
  Linear global_proj; // 6 -> D
  Mlp global_mlp;     // D -> D, last layer zero-initialised
};

Tensor tokenize_frame(const Tensor& object_feats, const VertexFeatures& joint_feats,
                      const GlobalContext& g, const TokenizerWeights& w);

// Rotates consecutive pairs (x[2i], x[2i+1]) by position·base^(-2i/d).
void rope_rotate_inplace(std::span<float> x, double position, double base = 10000.0);
// x is heads × head_dim; every head is rotated independently.
Tensor rope_rotate(const Tensor& x, double position, double base = 10000.0);

// 0 where |t - s| < window, -inf elsewhere.
Tensor local_mask(std::size_t n, std::size_t window);

Tensor tiat_layer_forward(const Tensor& x, const TiatLayer& layer, const TiatConfig& cfg, const Tensor& mask);
Tensor tiat_forward(const Tensor& tokens, const TiatConfig& cfg, std::span<const TiatLayer> layers);

// Frames whose stacked receptive field, layers·(window−1) on each side,
// lies inside [0, n).
std::size_t tiat_receptive_radius(const TiatConfig& cfg);

struct RegressionHeads {
  Mlp human;   // D -> HumanParams::flat_size
  Mlp object;  // D -> 9
};

struct RegressedFrames {
  std::vector<HumanParams> human;
  std::vector<RigidPose> object;
};

RegressedFrames regress_parameters(const Tensor& refined, const RegressionHeads& heads,
                                   std::size_t joints = kNumJoints);

}  // namespace tho
