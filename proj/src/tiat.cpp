#include "tho/tiat.hpp"

#include <cmath>
#include <string>

namespace tho {

void TiatConfig::validate() const {
  attention.validate();
  if (window < 1) throw std::invalid_argument("tiat: window must be at least 1");
  if (attention.head_dim() % 2 != 0) {
    throw std::invalid_argument("tiat: rotary embedding needs an even head_dim, got " +
                                std::to_string(attention.head_dim()));
  }
  if (!(rope_base > 1.0)) throw std::invalid_argument("tiat: rope_base must exceed 1");
}

Tensor GlobalContext::as_tensor() const {
  return Tensor({6}, {static_cast<float>(center_x), static_cast<float>(center_y),
                      static_cast<float>(side), static_cast<float>(pelvis.x()),
                      static_cast<float>(pelvis.y()), static_cast<float>(pelvis.z())});
}

Tensor tokenize_frame(const Tensor& object_feats, const VertexFeatures& joint_feats,
                      const GlobalContext& g, const TokenizerWeights& w) {
  const Tensor obj = w.object_mlp(mean_rows(object_feats));
  const Tensor joints = w.joint_mlp(mean_rows(w.joint_proj(joint_feats.values)));
  const Tensor global = w.global_mlp(w.global_proj(g.as_tensor()));
  if (obj.size() != joints.size() || obj.size() != global.size()) {
    throw ShapeError("tokenize_frame: branch widths differ (" + std::to_string(obj.size()) + ", " +
                     std::to_string(joints.size()) + ", " + std::to_string(global.size()) + ")");
  }
  Tensor token({obj.size()});
  for (std::size_t c = 0; c < token.size(); ++c) token[c] = obj[c] + joints[c] + global[c];
  return token;
}

void rope_rotate_inplace(std::span<float> x, double position, double base) {
  const std::size_t d = x.size();
  if (d % 2 != 0) throw std::invalid_argument("rope: head_dim must be even, got " + std::to_string(d));
  for (std::size_t i = 0; i < d / 2; ++i) {
    const double theta = position * std::pow(base, -2.0 * static_cast<double>(i) / static_cast<double>(d));
    const double c = std::cos(theta), s = std::sin(theta);
    const double a = x[2 * i], b = x[2 * i + 1];
    x[2 * i] = static_cast<float>(a * c - b * s);
    x[2 * i + 1] = static_cast<float>(a * s + b * c);
  }
}

Tensor rope_rotate(const Tensor& x, double position, double base) {
  Tensor out = x;
  for (std::size_t h = 0; h < out.rows(); ++h) rope_rotate_inplace(out.row(h), position, base);
  return out;
}

Tensor local_mask(std::size_t n, std::size_t window) {
  Tensor m = Tensor::matrix(n, n, kMaskedLogit);
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t lo = t + 1 >= window ? t + 1 - window : 0;
    const std::size_t hi = std::min(n, t + window);
    for (std::size_t s = lo; s < hi; ++s) m.at(t, s) = 0.0f;
  }
  return m;
}

Tensor tiat_layer_forward(const Tensor& x, const TiatLayer& layer, const TiatConfig& cfg, const Tensor& mask) {
  const std::size_t n = x.rows(), hd = cfg.attention.head_dim(), heads = cfg.attention.num_heads;
  Tensor q = layer.attn.query(x);
  Tensor k = layer.attn.key(x);
  const Tensor v = layer.attn.value(x);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t h = 0; h < heads; ++h) {
      rope_rotate_inplace(q.row(t).subspan(h * hd, hd), static_cast<double>(t), cfg.rope_base);
      rope_rotate_inplace(k.row(t).subspan(h * hd, hd), static_cast<double>(t), cfg.rope_base);
    }
  }
  const AttentionResult attn = scaled_dot_attention(q, k, v, heads, &mask);
  const Tensor mid = layer_norm(add(x, layer.attn.output(attn.output)), layer.attn_norm);
  return layer_norm(add(mid, ffn(mid, layer.ffn, cfg.attention)), layer.ffn_norm);
}

Tensor tiat_forward(const Tensor& tokens, const TiatConfig& cfg, std::span<const TiatLayer> layers) {
  cfg.validate();
  if (layers.size() != cfg.layers) {
    throw std::invalid_argument("tiat: config expects " + std::to_string(cfg.layers) + " layers, got " +
                                std::to_string(layers.size()));
  }
  if (tokens.rank() != 2 || tokens.rows() == 0 || tokens.cols() != cfg.attention.model_dim) {
    throw ShapeError("tiat: tokens " + shape_string(tokens.shape()) + " for model_dim " +
                     std::to_string(cfg.attention.model_dim));
  }
  const Tensor mask = local_mask(tokens.rows(), cfg.window);
  Tensor x = tokens;
  for (const TiatLayer& layer : layers) x = tiat_layer_forward(x, layer, cfg, mask);
  return x;
}

std::size_t tiat_receptive_radius(const TiatConfig& cfg) { return cfg.layers * (cfg.window - 1); }

RegressedFrames regress_parameters(const Tensor& refined, const RegressionHeads& heads, std::size_t joints) {
  if (heads.human.out_dim() != HumanParams::flat_size(joints) || heads.object.out_dim() != 9) {
    throw ShapeError("regression heads: human head outputs " + std::to_string(heads.human.out_dim()) +
                     " (need " + std::to_string(HumanParams::flat_size(joints)) + "), object head " +
                     std::to_string(heads.object.out_dim()) + " (need 9)");
  }
  const Tensor human = heads.human(refined);
  const Tensor object = heads.object(refined);
  RegressedFrames out;
  for (std::size_t t = 0; t < refined.rows(); ++t) {
    auto hrow = human.row(t);
    const std::vector<double> hv(hrow.begin(), hrow.end());
    HumanParams p = HumanParams::unflatten(hv, joints);
    // Decoding validates every 6D block.
    rot6d_to_matrix(p.root_orient);
    for (const Rot6D& r : p.body_pose) rot6d_to_matrix(r);
    out.human.push_back(std::move(p));

    auto orow = object.row(t);
    Rot6D r;
    for (int c = 0; c < 6; ++c) r[c] = orow[c];
    out.object.push_back({rot6d_to_matrix(r), Vec3(orow[6], orow[7], orow[8])});
  }
  return out;
}

}  // namespace tho
