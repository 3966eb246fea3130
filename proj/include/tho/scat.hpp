#pragma once

// Spatial contact-aware transformer: object self-attention repairs occluded
// vertex features, then object-to-human cross-attention injects human cues.
// Both blocks use post-norm residuals: LN(x + sublayer(x)).

#include "tho/numerics.hpp"

namespace tho {

struct ScatWeights {
  AttentionWeights self_attn;
  LayerNorm self_norm;
  FfnWeights self_ffn;
  LayerNorm self_ffn_norm;

  AttentionWeights cross_attn;
  LayerNorm cross_norm;
  FfnWeights cross_ffn;
  LayerNorm cross_ffn_norm;
};

Tensor internal_refine(const Tensor& object_feats, const ScatWeights& w, const AttentionConfig& cfg);

struct ContactResult {
  Tensor object_feats;  // N_o × D
  AttentionMap attention;  // N_o × N_h, head-averaged
};

ContactResult contact_inject(const Tensor& refined_object, const Tensor& human_feats,
                             const ScatWeights& w, const AttentionConfig& cfg);

// Column mean of the attention map: how much the object as a whole attends to each human vertex.
Tensor contact_heatmap(const AttentionMap& a);

}  // namespace tho
