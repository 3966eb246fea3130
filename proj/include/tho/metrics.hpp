#pragma once

// Evaluation protocol: align the combined first-frame prediction to ground
// truth, apply that single transform to every frame, then report Chamfer,
// V2V and acceleration errors in centimetres.

#include <vector>

#include "tho/geometry.hpp"
#include "tho/losses.hpp"

namespace tho {

struct MetricsReport {
  double cd_human = 0.0;   // cm
  double cd_object = 0.0;  // cm
  double cd_combined = 0.0;
  double v2v_object = 0.0;  // cm
  double acc_human = 0.0;   // cm/s²
  double acc_object = 0.0;
  std::size_t frames = 0;
  RigidPose alignment;

  nlohmann::json to_json() const;
};

// Point sets above this size use the uniform-grid nearest-neighbour search.
inline constexpr std::size_t kBruteForceNearestLimit = 2000;

// Nearest distance from every query to the reference set.
std::vector<double> nearest_distances(const Points& queries, const Points& reference);
std::vector<double> nearest_distances_brute(const Points& queries, const Points& reference);
std::vector<double> nearest_distances_grid(const Points& queries, const Points& reference);

// Symmetric mean nearest-neighbour distance (unsquared), in cm.
double chamfer(const Points& a, const Points& b);
double v2v(const Points& pred, const Points& gt);
double accel_error(const std::vector<Points>& pred, const std::vector<Points>& gt, double fps);

MetricsReport evaluate_sequence(const SequencePrediction& pred, const SequenceGT& gt);

}  // namespace tho
