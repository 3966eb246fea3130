#include "tho/model.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include "tho/parallel.hpp"

namespace tho {

void ModelConfig::validate() const {
  attention().validate();
  tiat().validate();
  if (channels == 0) throw std::invalid_argument("model config: channels must be positive");
  if (stride == 0 || crop_size % stride != 0) {
    throw std::invalid_argument("model config: crop_size " + std::to_string(crop_size) +
                                " must be a multiple of stride " + std::to_string(stride));
  }
  if (tiat_layers == 0) throw std::invalid_argument("model config: need at least one TIAT layer");
  if (joints == 0) throw std::invalid_argument("model config: joints must be positive");
}

// ---------------------------------------------------------------------------
// THOW files

void write_checkpoint(std::ostream& os, const Checkpoint& ckpt) {
  os.write("THOW", 4);
  binio::write_u32(os, static_cast<std::uint32_t>(ckpt.size()));
  for (const auto& [name, t] : ckpt) {
    binio::write_u32(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    binio::write_shape(os, t.shape());
    binio::write_f32(os, t.data());
  }
}

Checkpoint read_checkpoint(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::string(magic, 4) != "THOW") throw CheckpointError("not a THOW checkpoint (bad magic)");
  Checkpoint ckpt;
  try {
    const std::uint32_t count = binio::read_u32(is);
    for (std::uint32_t e = 0; e < count; ++e) {
      const std::uint32_t len = binio::read_u32(is);
      if (len == 0 || len > 4096) throw CheckpointError("entry " + std::to_string(e) + ": bad name length");
      std::string name(len, '\0');
      if (!is.read(name.data(), len)) throw CheckpointError("entry " + std::to_string(e) + ": truncated name");
      Tensor t(binio::read_shape(is));
      binio::read_f32(is, t.data());
      if (!ckpt.emplace(name, std::move(t)).second) throw CheckpointError("duplicate entry '" + name + "'");
    }
  } catch (const CheckpointError&) {
    throw;
  } catch (const std::exception& e) {
    throw CheckpointError(std::string("corrupt checkpoint: ") + e.what());
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  write_checkpoint(os, ckpt);
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  try {
    return read_checkpoint(is);
  } catch (const CheckpointError& e) {
    throw CheckpointError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Model <-> named tensors. One traversal drives saving, loading and random init.

namespace {

const char* const kMetaKeys[] = {"channels", "model_dim", "heads", "ffn_dim", "tiat_layers",
                                 "window",   "crop_size", "stride", "joints", "rope_base"};

std::vector<double> meta_values(const ModelConfig& c) {
  return {double(c.channels), double(c.model_dim), double(c.heads),  double(c.ffn_dim), double(c.tiat_layers),
          double(c.window),   double(c.crop_size), double(c.stride), double(c.joints),  c.rope_base};
}

template <class Visitor>
void visit_linear(Visitor& v, const std::string& name, Linear& l, std::size_t in, std::size_t out) {
  v(name + ".weight", l.weight, std::vector<std::size_t>{in, out}, false);
  v(name + ".bias", l.bias, std::vector<std::size_t>{out}, true);
}

template <class Visitor>
void visit_mlp(Visitor& v, const std::string& name, Mlp& m, std::vector<std::size_t> dims) {
  m.layers.resize(dims.size() - 1);
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    visit_linear(v, name + "." + std::to_string(i), m.layers[i], dims[i], dims[i + 1]);
  }
}

template <class Visitor>
void visit_norm(Visitor& v, const std::string& name, LayerNorm& ln, std::size_t d) {
  v(name + ".gain", ln.gain, std::vector<std::size_t>{d}, true);
  v(name + ".bias", ln.bias, std::vector<std::size_t>{d}, true);
}

template <class Visitor>
void visit_attention(Visitor& v, const std::string& name, AttentionWeights& a, std::size_t d) {
  visit_linear(v, name + ".q", a.query, d, d);
  visit_linear(v, name + ".k", a.key, d, d);
  visit_linear(v, name + ".v", a.value, d, d);
  visit_linear(v, name + ".o", a.output, d, d);
}

template <class Visitor>
void visit_ffn(Visitor& v, const std::string& name, FfnWeights& f, std::size_t d, std::size_t hidden) {
  visit_linear(v, name + ".expand", f.expand, d, hidden);
  visit_linear(v, name + ".contract", f.contract, hidden, d);
}

template <class Visitor>
void visit_model(Visitor& v, ThoModel& m) {
  const ModelConfig& c = m.config;
  const std::size_t C = c.channels, D = c.model_dim, F = c.ffn_dim;
  visit_mlp(v, "encoder.object_pose", m.encoder.object_pose, {C, D, 9});
  visit_mlp(v, "encoder.human_embed", m.encoder.human_embed, {C + 3, D, D});
  visit_mlp(v, "encoder.object_embed", m.encoder.object_embed, {C + 3, D, D});

  visit_attention(v, "scat.self_attn", m.scat.self_attn, D);
  visit_norm(v, "scat.self_norm", m.scat.self_norm, D);
  visit_ffn(v, "scat.self_ffn", m.scat.self_ffn, D, F);
  visit_norm(v, "scat.self_ffn_norm", m.scat.self_ffn_norm, D);
  visit_attention(v, "scat.cross_attn", m.scat.cross_attn, D);
  visit_norm(v, "scat.cross_norm", m.scat.cross_norm, D);
  visit_ffn(v, "scat.cross_ffn", m.scat.cross_ffn, D, F);
  visit_norm(v, "scat.cross_ffn_norm", m.scat.cross_ffn_norm, D);

  visit_linear(v, "token.joint_proj", m.tokenizer.joint_proj, C + 3, D);
  visit_mlp(v, "token.object_mlp", m.tokenizer.object_mlp, {D, D, D});
  visit_mlp(v, "token.joint_mlp", m.tokenizer.joint_mlp, {D, D, D});
  visit_linear(v, "token.global_proj", m.tokenizer.global_proj, 6, D);
  visit_mlp(v, "token.global_mlp", m.tokenizer.global_mlp, {D, D, D});

  m.tiat.resize(c.tiat_layers);
  for (std::size_t l = 0; l < c.tiat_layers; ++l) {
    const std::string p = "tiat." + std::to_string(l);
    visit_attention(v, p + ".attn", m.tiat[l].attn, D);
    visit_norm(v, p + ".attn_norm", m.tiat[l].attn_norm, D);
    visit_ffn(v, p + ".ffn", m.tiat[l].ffn, D, F);
    visit_norm(v, p + ".ffn_norm", m.tiat[l].ffn_norm, D);
  }

  visit_mlp(v, "heads.human", m.heads.human, {D, D, HumanParams::flat_size(c.joints)});
  visit_mlp(v, "heads.object", m.heads.object, {D, D, 9});
}

}  // namespace

Checkpoint model_to_checkpoint(const ThoModel& model) {
  Checkpoint ckpt;
  const auto meta = meta_values(model.config);
  for (std::size_t i = 0; i < meta.size(); ++i) {
    ckpt.emplace(std::string("meta.") + kMetaKeys[i], Tensor({1}, {static_cast<float>(meta[i])}));
  }
  ThoModel copy = model;
  auto store = [&](const std::string& name, Tensor& t, const std::vector<std::size_t>& shape, bool) {
    if (t.shape() != shape) {
      throw CheckpointError(name + ": model tensor has shape " + shape_string(t.shape()) + ", expected " +
                            shape_string(shape));
    }
    ckpt.emplace(name, t);
  };
  visit_model(store, copy);
  return ckpt;
}

ModelConfig config_from_checkpoint(const Checkpoint& ckpt) {
  std::vector<double> v;
  for (const char* key : kMetaKeys) {
    const auto it = ckpt.find(std::string("meta.") + key);
    if (it == ckpt.end()) throw CheckpointError(std::string("missing metadata entry 'meta.") + key + "'");
    if (it->second.size() != 1) throw CheckpointError(std::string("metadata entry 'meta.") + key + "' must hold one value");
    v.push_back(it->second[0]);
  }
  ModelConfig c;
  auto as_size = [&](std::size_t i) {
    if (!(v[i] >= 0.0) || v[i] != std::floor(v[i])) {
      throw CheckpointError(std::string("metadata 'meta.") + kMetaKeys[i] + "' is not a nonnegative integer");
    }
    return static_cast<std::size_t>(v[i]);
  };
  c.channels = as_size(0);
  c.model_dim = as_size(1);
  c.heads = as_size(2);
  c.ffn_dim = as_size(3);
  c.tiat_layers = as_size(4);
  c.window = as_size(5);
  c.crop_size = as_size(6);
  c.stride = as_size(7);
  c.joints = as_size(8);
  c.rope_base = v[9];
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(std::string("inconsistent metadata: ") + e.what());
  }
  return c;
}

ThoModel model_from_checkpoint(const Checkpoint& ckpt) {
  ThoModel model;
  model.config = config_from_checkpoint(ckpt);
  std::set<std::string> used;
  for (const char* key : kMetaKeys) used.insert(std::string("meta.") + key);
  auto load = [&](const std::string& name, Tensor& t, const std::vector<std::size_t>& shape, bool) {
    const auto it = ckpt.find(name);
    if (it == ckpt.end()) throw CheckpointError("missing tensor '" + name + "'");
    if (it->second.shape() != shape) {
      throw CheckpointError("tensor '" + name + "' has shape " + shape_string(it->second.shape()) +
                            ", metadata implies " + shape_string(shape));
    }
    if (!it->second.all_finite()) throw CheckpointError("tensor '" + name + "' contains non-finite values");
    t = it->second;
    used.insert(name);
  };
  visit_model(load, model);
  for (const auto& [name, t] : ckpt) {
    if (!used.count(name)) throw CheckpointError("unexpected tensor '" + name + "'");
  }
  return model;
}

ThoModel random_model(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  ThoModel model;
  model.config = cfg;
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> normal(0.0f, 1.0f);
  auto init = [&](const std::string& name, Tensor& t, const std::vector<std::size_t>& shape, bool is_vector) {
    t = Tensor(shape);
    if (name.ends_with(".gain")) {
      for (float& x : t.storage()) x = 1.0f;
    } else if (!is_vector) {
      const float std = 0.5f / std::sqrt(static_cast<float>(shape[0]));
      for (float& x : t.storage()) x = std * normal(rng);
    }
  };
  visit_model(init, model);

  // The global-context branch starts silent.
  Linear& last = model.tokenizer.global_mlp.layers.back();
  last.weight = Tensor(last.weight.shape());
  last.bias = Tensor(last.bias.shape());

  // Rotation biases decode to identity.
  const float ident[6] = {1, 0, 0, 0, 1, 0};
  for (Mlp* head : {&model.encoder.object_pose, &model.heads.object}) {
    for (int k = 0; k < 6; ++k) head->layers.back().bias[k] = ident[k];
  }
  Tensor& hb = model.heads.human.layers.back().bias;
  for (std::size_t r = 0; r < cfg.joints + 1; ++r)
    for (int k = 0; k < 6; ++k) hb[r * 6 + k] = ident[k];
  return model;
}

// ---------------------------------------------------------------------------
// Pipeline

FrameEncoding encode_frame(const ThoModel& model, const PipelineInputs& in, std::size_t t,
                           const Points& object_template) {
  const ModelConfig& cfg = model.config;
  const AttentionConfig acfg = cfg.attention();
  const FeatureMap& fmap = in.features.at(t);
  if (fmap.channels != cfg.channels || fmap.height != cfg.grid() || fmap.width != cfg.grid() ||
      fmap.stride != cfg.stride) {
    throw ShapeError("frame " + std::to_string(t) + ": feature map " + std::to_string(fmap.height) + "x" +
                     std::to_string(fmap.width) + "x" + std::to_string(fmap.channels) + " at stride " +
                     std::to_string(fmap.stride) + " does not match the model (" + std::to_string(cfg.grid()) +
                     "x" + std::to_string(cfg.grid()) + "x" + std::to_string(cfg.channels) + ")");
  }
  const Points& human = in.prior_human_verts.at(t);
  const Points& joints = in.prior_joints.at(t);
  const Vec3 pelvis = joints.at(kPelvis);

  FrameEncoding enc;
  enc.crop = compute_crop_box(in.camera, pelvis, in.frames.human_masks[t], in.frames.object_masks[t], in.pad,
                              static_cast<int>(cfg.crop_size));
  const Mask object_mask = crop_mask(in.frames.object_masks[t], enc.crop);

  const PooledFeature pooled = masked_avg_pool(fmap, object_mask);
  enc.empty_object_mask = pooled.empty;
  const RigidPose relative = init_object_pose(pooled.value, model.encoder.object_pose);
  enc.initial_object = compose_to_world(relative, human_frame(pelvis));
  const Points object = apply_rigid(enc.initial_object, object_template);

  const Camera& cam = enc.crop.cropped_cam;
  const VertexFeatures fh = sample_vertex_features(fmap, cam, human);
  const VertexFeatures fj = sample_vertex_features(fmap, cam, joints);
  const VertexFeatures fo = sample_vertex_features(fmap, cam, object);
  for (const VertexFeatures* f : {&fh, &fj, &fo})
    for (bool b : f->behind_camera) enc.behind_camera += b;

  const Tensor human_emb = embed_vertices(fh, model.encoder.human_embed);
  const Tensor object_emb = embed_vertices(fo, model.encoder.object_embed);
  const Tensor refined = internal_refine(object_emb, model.scat, acfg);
  const ContactResult contact = contact_inject(refined, human_emb, model.scat, acfg);
  enc.heatmap = contact_heatmap(contact.attention);

  enc.context = {enc.crop.center.x(), enc.crop.center.y(), enc.crop.side, pelvis};
  enc.token = tokenize_frame(contact.object_feats, fj, enc.context, model.tokenizer);
  return enc;
}

PipelineOutput run_pipeline(const ThoModel& model, const PipelineInputs& in, const ToySkeleton& skel) {
  using clock = std::chrono::steady_clock;
  const ModelConfig& cfg = model.config;
  cfg.validate();
  const std::size_t n = in.size();
  in.frames.validate();
  if (n == 0) throw std::invalid_argument("pipeline: empty sequence");
  if (in.prior_human_verts.size() != n || in.prior_joints.size() != n || in.features.size() != n) {
    throw std::invalid_argument("pipeline: per-frame inputs disagree on the frame count (" + std::to_string(n) +
                                " masks, " + std::to_string(in.prior_human_verts.size()) + " priors, " +
                                std::to_string(in.features.size()) + " feature maps)");
  }
  if (skel.num_joints() != cfg.joints) {
    throw std::invalid_argument("pipeline: skeleton has " + std::to_string(skel.num_joints()) +
                                " joints, model expects " + std::to_string(cfg.joints));
  }

  PipelineOutput out;
  auto t0 = clock::now();
  auto lap = [&](const std::string& stage) {
    const auto now = clock::now();
    out.stage_seconds[stage] = std::chrono::duration<double>(now - t0).count();
    t0 = now;
  };

  Points templ;
  for (std::size_t i : farthest_point_subsample(in.object_template.vertices)) {
    templ.push_back(in.object_template.vertices[i]);
  }

  out.frames.resize(n);
  parallel_for(n, [&](std::size_t t) {
    try {
      out.frames[t] = encode_frame(model, in, t, templ);
    } catch (const std::exception& e) {
      throw std::runtime_error("frame " + std::to_string(t) + ": " + e.what());
    }
  });
  lap("encode");

  out.tokens = Tensor::matrix(n, cfg.model_dim);
  for (std::size_t t = 0; t < n; ++t) {
    std::copy(out.frames[t].token.storage().begin(), out.frames[t].token.storage().end(), out.tokens.row(t).begin());
  }
  out.refined = tiat_forward(out.tokens, cfg.tiat(), model.tiat);
  lap("tiat");

  out.params = regress_parameters(out.refined, model.heads, cfg.joints);
  SequencePrediction& d = out.decoded;
  d.fps = in.frames.fps;
  d.human = out.params.human;
  d.object = out.params.object;
  d.human_verts.resize(n);
  d.joints.resize(n);
  d.object_verts.resize(n);
  parallel_for(n, [&](std::size_t t) {
    BodyState body = forward_kinematics(skel, d.human[t]);
    d.human_verts[t] = std::move(body.vertices);
    d.joints[t] = std::move(body.joints);
    d.object_verts[t] = apply_rigid(d.object[t], in.object_template.vertices);
  });
  lap("decode");
  return out;
}

}  // namespace tho
