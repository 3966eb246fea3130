#pragma once

// Training objective L = L_param + L_mesh + L_acc, and a gradient-descent
// rigid pose fitter that exercises gradients through the 6D rotation map.

#include <array>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tho/bodymodel.hpp"
#include "tho/geometry.hpp"

namespace tho {

struct LossWeights {
  double rot_h = 0.2;
  double beta_h = 0.2;
  double trans_h = 1.0;
  double rot_o = 0.2;
  double trans_o = 1.0;

  double verts_h = 1.0;
  double verts_o = 1.0;
  double joints = 1.0;
  double edge = 1.0;
  double rel = 1.0;

  double vel_h = 0.5;
  double acc_h = 0.1;
  double reg_h = 1.0;
  double vel_o = 0.5;
  double acc_o = 0.1;
  double reg_o = 0.5;

  void validate() const;
};

/// Decoded per-frame state of one sequence; used for both predictions and ground truth.
struct SequenceState {
  std::vector<HumanParams> human;
  std::vector<RigidPose> object;
  std::vector<Points> human_verts;
  std::vector<Points> joints;
  std::vector<Points> object_verts;
  double fps = 30.0;

  std::size_t size() const { return object.size(); }
  void validate() const;
};

using SequencePrediction = SequenceState;
using SequenceGT = SequenceState;

using Edges = std::vector<std::pair<int, int>>;

/// Weighted terms keyed by name; the leaves sum to `total`.
struct LossBreakdown {
  std::map<std::string, double> terms;
  double param = 0.0;
  double mesh = 0.0;
  double acc = 0.0;
  double total = 0.0;

  nlohmann::json to_json() const;
};

double param_loss(const SequencePrediction& pred, const SequenceGT& gt, const LossWeights& w,
                  LossBreakdown* breakdown = nullptr);
double mesh_loss(const SequencePrediction& pred, const SequenceGT& gt, const Edges& edges,
                 const LossWeights& w, LossBreakdown* breakdown = nullptr);
double acc_loss(const SequencePrediction& pred, const SequenceGT& gt, const LossWeights& w, double fps,
                LossBreakdown* breakdown = nullptr);
LossBreakdown total_loss(const SequencePrediction& pred, const SequenceGT& gt, const Edges& edges,
                         const LossWeights& w, double fps);

// Helpers shared with the metrics: forward velocity and central second
// differences of per-vertex trajectories, scaled by fps and fps².
std::vector<Points> velocities(const std::vector<Points>& traj, double fps);
std::vector<Points> accelerations(const std::vector<Points>& traj, double fps);

// Mean-squared vertex error of R(r)·template + T against target, with its
// analytic gradient with respect to (r[0..5], T[0..2]).
struct PoseFitObjective {
  const Points& templ;
  const Points& target;

  double value(const std::array<double, 9>& x) const;
  double value_and_gradient(const std::array<double, 9>& x, std::array<double, 9>& grad) const;
};

struct FitResult {
  RigidPose pose;
  Rot6D rot6d{};
  std::vector<double> loss_curve;  // loss before each step, then the final loss
  int steps = 0;
};

class FitDivergedError : public std::runtime_error {
 public:
  FitDivergedError(const std::string& what, std::vector<double> curve)
      : std::runtime_error(what), loss_curve(std::move(curve)) {}
  std::vector<double> loss_curve;
};

struct FitOptions {
  int steps = 500;
  double lr = 0.1;
  double tolerance = 1e-14;  // stop once the loss falls below this
};

FitResult fit_object_pose(const Points& templ, const Points& target, const Rot6D& init_rot,
                          const Vec3& init_trans, const FitOptions& opts = {});

}  // namespace tho
