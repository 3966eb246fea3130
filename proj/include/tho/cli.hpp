#pragma once

// Operator commands. Each cmd_* reads and writes bundles on disk and throws on
// failure; the executable maps UsageError to exit code 2 and anything else to 1.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>

#include "tho/metrics.hpp"
#include "tho/model.hpp"
#include "tho/synth.hpp"

namespace tho {

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct RunConfig {
  ModelConfig model;
  double pad = kDefaultCropPad;
  double fps = 30.0;
  std::uint64_t seed = 0;
  std::optional<std::size_t> frames;
  double prior_sigma_rot = 0.02;     // rad
  double prior_sigma_trans = 0.01;   // m
  int fit_steps = 500;
  double fit_lr = 0.1;
  std::filesystem::path checkpoint;
  std::filesystem::path scene;
  std::filesystem::path out;

  // Keys set explicitly (file or flag); only these are checked against a checkpoint.
  std::set<std::string> given;

  // Accepts canonical keys and the aliases S, C, ffn.
  void set(const std::string& key, const std::string& value);
};

RunConfig parse_config(std::istream& is, const std::string& source = "<config>");
RunConfig load_config(const std::filesystem::path& path);

// Throws ConfigError listing every explicitly configured dimension that
// disagrees with the checkpoint metadata.
void check_config_matches(const RunConfig& cfg, const ModelConfig& ckpt);

/// A scene directory as written by cmd_synth.
struct SceneBundle {
  Camera camera;
  FrameSequence frames;
  SequenceGT gt;
  Mesh object_template;
  ToySkeleton skeleton;
  MotionPrior prior;
  std::vector<FeatureMap> features;
};

void write_sequence_bundle(const std::filesystem::path& dir, const SequenceState& seq);
SequenceState read_sequence_bundle(const std::filesystem::path& dir);

// Reads the first `frames` frames (all when unset).
SceneBundle load_scene(const std::filesystem::path& dir, std::optional<std::size_t> frames = std::nullopt);

void cmd_synth(const RunConfig& cfg, const std::filesystem::path& script_path, std::ostream& log);
void cmd_init(const RunConfig& cfg, std::ostream& log);
PipelineOutput cmd_infer(const RunConfig& cfg, std::ostream& log);
MetricsReport cmd_eval(const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir,
                       const std::filesystem::path& out_path, std::ostream& log);
FitResult cmd_fit(const RunConfig& cfg, const std::filesystem::path& template_obj,
                  const std::filesystem::path& target_json, std::ostream& log);
// Returns the process exit code: 0 when every suite passes, 1 otherwise.
int cmd_selftest(const RunConfig& cfg, std::ostream& out);

}  // namespace tho
