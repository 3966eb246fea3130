#include "tho/scat.hpp"

namespace tho {

Tensor internal_refine(const Tensor& object_feats, const ScatWeights& w, const AttentionConfig& cfg) {
  const AttentionResult attn =
      multi_head_attention(object_feats, object_feats, object_feats, w.self_attn, cfg);
  const Tensor mid = layer_norm(add(object_feats, attn.output), w.self_norm);
  return layer_norm(add(mid, ffn(mid, w.self_ffn, cfg)), w.self_ffn_norm);
}

ContactResult contact_inject(const Tensor& refined_object, const Tensor& human_feats,
                             const ScatWeights& w, const AttentionConfig& cfg) {
  AttentionResult attn = multi_head_attention(refined_object, human_feats, human_feats, w.cross_attn, cfg);
  const Tensor mid = layer_norm(add(refined_object, attn.output), w.cross_norm);
  return {layer_norm(add(mid, ffn(mid, w.cross_ffn, cfg)), w.cross_ffn_norm), std::move(attn.weights)};
}

Tensor contact_heatmap(const AttentionMap& a) { return mean_rows(a); }

}  // namespace tho
