#pragma once

// Interaction-centric cropping: a square box around the projected pelvis,
// sized to contain the union of the human and object masks, plus the
// matching rewritten intrinsics.

#include <vector>

#include "tho/geometry.hpp"
#include "tho/io.hpp"

namespace tho {

struct FrameSequence {
  std::vector<Mask> human_masks;
  std::vector<Mask> object_masks;
  double fps = 30.0;

  std::size_t size() const { return human_masks.size(); }
  void validate() const;
};

struct CropSpec {
  Vec2 center = Vec2::Zero();
  double side = 0.0;
  Vec2 top_left = Vec2::Zero();
  int target_size = 224;
  Camera cropped_cam;
  // Set when both masks were empty and the fallback side was used.
  bool fallback = false;

  // Original-image pixel -> crop pixel.
  Vec2 to_crop(const Vec2& p) const { return (p - top_left) * (target_size / side); }
  Vec2 from_crop(const Vec2& q) const { return top_left + q * (side / target_size); }
};

inline constexpr double kDefaultCropPad = 1.2;

CropSpec compute_crop_box(const Camera& cam, const Vec3& pelvis, const Mask& human_mask,
                          const Mask& object_mask, double pad = kDefaultCropPad, int target = 224);

// Nearest-neighbour resample of the crop window into a target×target mask;
// pixels outside the source image read as background.
Mask crop_mask(const Mask& mask, const CropSpec& crop);

struct CroppedFrame {
  Mask human;
  Mask object;
  CropSpec crop;
};

std::vector<CroppedFrame> make_crop_sequence(const FrameSequence& seq, const Camera& cam,
                                             const Points& pelvis_traj, int target,
                                             double pad = kDefaultCropPad);

}  // namespace tho
