#pragma once

// Full feed-forward model: weights, the THOW checkpoint format, and the
// end-to-end pipeline crop → vertex encoder → SCAT → tokens → TIAT → heads.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "tho/bodymodel.hpp"
#include "tho/dataprep.hpp"
#include "tho/encoder.hpp"
#include "tho/losses.hpp"
#include "tho/scat.hpp"
#include "tho/tiat.hpp"

namespace tho {

struct ModelConfig {
  std::size_t channels = 1024;  // C
  std::size_t model_dim = 512;
  std::size_t heads = 8;
  std::size_t ffn_dim = 2048;
  std::size_t tiat_layers = 12;
  std::size_t window = 64;
  std::size_t crop_size = 224;  // S
  std::size_t stride = 16;
  std::size_t joints = kNumJoints;
  double rope_base = 10000.0;

  AttentionConfig attention() const { return {model_dim, heads, ffn_dim}; }
  TiatConfig tiat() const { return {tiat_layers, attention(), window, rope_base}; }
  std::size_t grid() const { return crop_size / stride; }
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct EncoderWeights {
  Mlp object_pose;   // C -> D -> 9
  Mlp human_embed;   // C+3 -> D -> D
  Mlp object_embed;  // C+3 -> D -> D
};

struct ThoModel {
  ModelConfig config;
  EncoderWeights encoder;
  ScatWeights scat;
  TokenizerWeights tokenizer;
  std::vector<TiatLayer> tiat;
  RegressionHeads heads;
};

/// Named tensors; names are unique.
using Checkpoint = std::map<std::string, Tensor>;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// THOW: "THOW", u32 count, then per entry u32 name length, name bytes, u32
// rank, u32 extents, f32 payload. Little-endian.
void write_checkpoint(std::ostream& os, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& is);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

Checkpoint model_to_checkpoint(const ThoModel& model);
// Validates that every required tensor is present with the shape implied by
// the stored metadata; errors name the offending entry.
ThoModel model_from_checkpoint(const Checkpoint& ckpt);
ModelConfig config_from_checkpoint(const Checkpoint& ckpt);

// Seeded small-variance initialisation. The final layer of the global-context
// MLP is zero; regression biases decode to identity rotations.
ThoModel random_model(const ModelConfig& cfg, std::uint64_t seed);

struct PipelineInputs {
  Camera camera;
  FrameSequence frames;
  std::vector<Points> prior_human_verts;  // from the motion prior
  std::vector<Points> prior_joints;
  std::vector<FeatureMap> features;       // one per frame, in crop space
  Mesh object_template;
  double pad = kDefaultCropPad;

  std::size_t size() const { return frames.size(); }
};

struct FrameEncoding {
  CropSpec crop;
  RigidPose initial_object;  // world frame
  bool empty_object_mask = false;
  std::size_t behind_camera = 0;
  Tensor heatmap;  // N_h
  Tensor token;    // D
  GlobalContext context;
};

struct PipelineOutput {
  std::vector<FrameEncoding> frames;
  Tensor tokens;   // N × D
  Tensor refined;  // N × D
  RegressedFrames params;
  SequencePrediction decoded;
  std::map<std::string, double> stage_seconds;
};

// Per-frame stage: everything up to and including the motion token.
FrameEncoding encode_frame(const ThoModel& model, const PipelineInputs& in, std::size_t t,
                           const Points& object_template);

PipelineOutput run_pipeline(const ThoModel& model, const PipelineInputs& in, const ToySkeleton& skel);

}  // namespace tho
