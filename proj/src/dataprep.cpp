#include "tho/dataprep.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tho {

void FrameSequence::validate() const {
  if (human_masks.size() != object_masks.size()) {
    throw std::invalid_argument("frame sequence: human/object mask counts differ");
  }
  if (!(fps > 0.0)) throw std::invalid_argument("frame sequence: fps must be positive");
  for (std::size_t t = 0; t < size(); ++t) {
    const Mask& ref = human_masks.front();
    for (const Mask* m : {&human_masks[t], &object_masks[t]}) {
      if (m->width != ref.width || m->height != ref.height) {
        throw std::invalid_argument("frame sequence: frame " + std::to_string(t) +
                                    " has a different size");
      }
    }
  }
}

CropSpec compute_crop_box(const Camera& cam, const Vec3& pelvis, const Mask& human_mask,
                          const Mask& object_mask, double pad, int target) {
  if (!(pad > 0.0)) throw std::invalid_argument("crop pad ratio must be positive");
  CropSpec crop;
  crop.center = project_point(cam, pelvis);
  crop.target_size = target;

  const Mask both = mask_union(human_mask, object_mask);
  int xmin = both.width, xmax = -1, ymin = both.height, ymax = -1;
  for (int y = 0; y < both.height; ++y) {
    for (int x = 0; x < both.width; ++x) {
      if (!both.at(x, y)) continue;
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  }

  if (xmax < 0) {
    crop.side = 0.5 * std::min(both.width, both.height);
    crop.fallback = true;
  } else {
    const double extent = std::max({std::abs(xmin - crop.center.x()), std::abs(xmax - crop.center.x()),
                                    std::abs(ymin - crop.center.y()), std::abs(ymax - crop.center.y())});
    // A lone foreground pixel on the pelvis still needs a non-empty box.
    crop.side = std::max(2.0 * pad * extent, 1.0);
  }
  crop.top_left = crop.center - Vec2::Constant(crop.side / 2.0);
  crop.cropped_cam = crop_intrinsics(cam, crop.top_left, crop.side, target);
  return crop;
}

Mask crop_mask(const Mask& mask, const CropSpec& crop) {
  const int s = crop.target_size;
  Mask out(s, s);
  const double step = crop.side / s;
  for (int qy = 0; qy < s; ++qy) {
    const int sy = static_cast<int>(std::floor(crop.top_left.y() + qy * step + 0.5));
    for (int qx = 0; qx < s; ++qx) {
      const int sx = static_cast<int>(std::floor(crop.top_left.x() + qx * step + 0.5));
      if (mask.in_bounds(sx, sy) && mask.at(sx, sy)) out.set(qx, qy);
    }
  }
  return out;
}

std::vector<CroppedFrame> make_crop_sequence(const FrameSequence& seq, const Camera& cam,
                                             const Points& pelvis_traj, int target, double pad) {
  seq.validate();
  if (pelvis_traj.size() != seq.size()) {
    throw std::invalid_argument("pelvis trajectory has " + std::to_string(pelvis_traj.size()) +
                                " frames, sequence has " + std::to_string(seq.size()));
  }
  std::vector<CroppedFrame> out;
  out.reserve(seq.size());
  for (std::size_t t = 0; t < seq.size(); ++t) {
    try {
      CroppedFrame f;
      f.crop = compute_crop_box(cam, pelvis_traj[t], seq.human_masks[t], seq.object_masks[t], pad, target);
      f.human = crop_mask(seq.human_masks[t], f.crop);
      f.object = crop_mask(seq.object_masks[t], f.crop);
      out.push_back(std::move(f));
    } catch (const std::exception& e) {
      throw std::runtime_error("frame " + std::to_string(t) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace tho
