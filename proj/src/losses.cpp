#include "tho/losses.hpp"

#include <cmath>
#include <string>

namespace tho {

namespace {

double l1(const Vec3& v) { return v.cwiseAbs().sum(); }

double l1(const Rot6D& a, const Rot6D& b) {
  double s = 0.0;
  for (int k = 0; k < 6; ++k) s += std::abs(a[k] - b[k]);
  return s;
}

// Raw regression outputs are orthonormalised before comparison.
Rot6D canonical(const Rot6D& r) { return matrix_to_rot6d(rot6d_to_matrix(r)); }

double mean_vertex_l1(const Points& a, const Points& b) {
  if (a.size() != b.size()) throw std::invalid_argument("vertex sets differ in size");
  if (a.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += l1(a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

void require_same_length(const SequenceState& pred, const SequenceState& gt) {
  pred.validate();
  gt.validate();
  if (pred.size() != gt.size()) {
    throw std::invalid_argument("prediction has " + std::to_string(pred.size()) + " frames, ground truth " +
                                std::to_string(gt.size()));
  }
  if (pred.size() == 0) throw std::invalid_argument("empty sequence");
}

void record(LossBreakdown* b, const std::string& name, double value) {
  if (b) b->terms[name] = value;
}

}  // namespace

void LossWeights::validate() const {
  for (double v : {rot_h, beta_h, trans_h, rot_o, trans_o, verts_h, verts_o, joints, edge, rel, vel_h,
                   acc_h, reg_h, vel_o, acc_o, reg_o}) {
    if (!(v >= 0.0)) throw std::invalid_argument("loss weights must be nonnegative");
  }
}

void SequenceState::validate() const {
  const std::size_t n = object.size();
  if (human.size() != n || human_verts.size() != n || joints.size() != n || object_verts.size() != n) {
    throw std::invalid_argument("sequence state: per-frame arrays have different lengths");
  }
  for (std::size_t t = 1; t < n; ++t) {
    if (human_verts[t].size() != human_verts[0].size() || joints[t].size() != joints[0].size() ||
        object_verts[t].size() != object_verts[0].size()) {
      throw std::invalid_argument("sequence state: vertex count changes at frame " + std::to_string(t));
    }
  }
}

nlohmann::json LossBreakdown::to_json() const {
  nlohmann::json j = terms;
  j["L_param"] = param;
  j["L_mesh"] = mesh;
  j["L_acc"] = acc;
  j["total"] = total;
  return j;
}

double param_loss(const SequencePrediction& pred, const SequenceGT& gt, const LossWeights& w,
                  LossBreakdown* breakdown) {
  require_same_length(pred, gt);
  w.validate();
  double rot_h = 0, beta_h = 0, trans_h = 0, rot_o = 0, trans_o = 0;
  for (std::size_t t = 0; t < pred.size(); ++t) {
    const HumanParams& p = pred.human[t];
    const HumanParams& g = gt.human[t];
    if (p.body_pose.size() != g.body_pose.size()) throw std::invalid_argument("body pose sizes differ");
    double r = l1(canonical(p.root_orient), canonical(g.root_orient));
    for (std::size_t j = 0; j < p.body_pose.size(); ++j) r += l1(canonical(p.body_pose[j]), canonical(g.body_pose[j]));
    rot_h += r / static_cast<double>(p.body_pose.size() + 1);
    for (std::size_t k = 0; k < kNumShape; ++k) beta_h += std::abs(p.betas[k] - g.betas[k]);
    trans_h += l1(p.transl - g.transl);
    rot_o += l1(matrix_to_rot6d(pred.object[t].rotation), matrix_to_rot6d(gt.object[t].rotation));
    trans_o += l1(pred.object[t].translation - gt.object[t].translation);
  }
  const double n = static_cast<double>(pred.size());
  const double terms[5] = {w.rot_h * rot_h / n, w.beta_h * beta_h / n, w.trans_h * trans_h / n,
                           w.rot_o * rot_o / n, w.trans_o * trans_o / n};
  record(breakdown, "rot_h", terms[0]);
  record(breakdown, "beta_h", terms[1]);
  record(breakdown, "trans_h", terms[2]);
  record(breakdown, "rot_o", terms[3]);
  record(breakdown, "trans_o", terms[4]);
  return terms[0] + terms[1] + terms[2] + terms[3] + terms[4];
}

double mesh_loss(const SequencePrediction& pred, const SequenceGT& gt, const Edges& edges,
                 const LossWeights& w, LossBreakdown* breakdown) {
  require_same_length(pred, gt);
  w.validate();
  double vh = 0, vo = 0, vj = 0, edge = 0, rel = 0;
  for (std::size_t t = 0; t < pred.size(); ++t) {
    const Points& ph = pred.human_verts[t];
    const Points& gh = gt.human_verts[t];
    if (ph.size() != gh.size() || pred.joints[t].size() != gt.joints[t].size() ||
        pred.object_verts[t].size() != gt.object_verts[t].size()) {
      throw std::invalid_argument("mesh_loss: topology mismatch at frame " + std::to_string(t));
    }
    vh += mean_vertex_l1(ph, gh);
    vo += mean_vertex_l1(pred.object_verts[t], gt.object_verts[t]);
    vj += mean_vertex_l1(pred.joints[t], gt.joints[t]);
    if (!edges.empty()) {
      double e = 0.0;
      for (const auto& [a, b] : edges) {
        if (a < 0 || b < 0 || static_cast<std::size_t>(std::max(a, b)) >= ph.size()) {
          throw std::invalid_argument("mesh_loss: edge references a missing vertex");
        }
        e += std::abs((ph[a] - ph[b]).norm() - (gh[a] - gh[b]).norm());
      }
      edge += e / static_cast<double>(edges.size());
    }
    const Vec3 rp = pred.joints[t][kPelvis] - pred.object[t].translation;
    const Vec3 rg = gt.joints[t][kPelvis] - gt.object[t].translation;
    rel += l1(rp - rg);
  }
  const double n = static_cast<double>(pred.size());
  const double terms[5] = {w.verts_h * vh / n, w.verts_o * vo / n, w.joints * vj / n, w.edge * edge / n,
                           w.rel * rel / n};
  record(breakdown, "verts_h", terms[0]);
  record(breakdown, "verts_o", terms[1]);
  record(breakdown, "joints", terms[2]);
  record(breakdown, "edge", terms[3]);
  record(breakdown, "rel_dist", terms[4]);
  return terms[0] + terms[1] + terms[2] + terms[3] + terms[4];
}

std::vector<Points> velocities(const std::vector<Points>& traj, double fps) {
  std::vector<Points> v;
  for (std::size_t t = 0; t + 1 < traj.size(); ++t) {
    Points f(traj[t].size());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = (traj[t + 1][i] - traj[t][i]) * fps;
    v.push_back(std::move(f));
  }
  return v;
}

std::vector<Points> accelerations(const std::vector<Points>& traj, double fps) {
  std::vector<Points> a;
  const double fps2 = fps * fps;
  for (std::size_t t = 1; t + 1 < traj.size(); ++t) {
    Points f(traj[t].size());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = (traj[t + 1][i] - 2.0 * traj[t][i] + traj[t - 1][i]) * fps2;
    a.push_back(std::move(f));
  }
  return a;
}

namespace {

struct BranchTerms {
  double vel = 0, acc = 0, reg = 0;
};

BranchTerms branch_terms(const std::vector<Points>& pred, const std::vector<Points>& gt, double fps) {
  const auto pv = velocities(pred, fps), gv = velocities(gt, fps);
  const auto pa = accelerations(pred, fps), ga = accelerations(gt, fps);
  BranchTerms b;
  for (std::size_t t = 0; t < pv.size(); ++t) b.vel += mean_vertex_l1(pv[t], gv[t]);
  b.vel /= static_cast<double>(pv.size());
  const Points zeros(pa.empty() ? 0 : pa[0].size(), Vec3::Zero());
  for (std::size_t t = 0; t < pa.size(); ++t) {
    b.acc += mean_vertex_l1(pa[t], ga[t]);
    b.reg += mean_vertex_l1(pa[t], zeros);
  }
  b.acc /= static_cast<double>(pa.size());
  b.reg /= static_cast<double>(pa.size());
  return b;
}

}  // namespace

double acc_loss(const SequencePrediction& pred, const SequenceGT& gt, const LossWeights& w, double fps,
                LossBreakdown* breakdown) {
  require_same_length(pred, gt);
  w.validate();
  if (pred.size() < 3) throw std::invalid_argument("acc_loss needs at least 3 frames");
  if (!(fps > 0.0)) throw std::invalid_argument("acc_loss: fps must be positive");
  const BranchTerms h = branch_terms(pred.human_verts, gt.human_verts, fps);
  const BranchTerms o = branch_terms(pred.object_verts, gt.object_verts, fps);
  const double terms[6] = {w.vel_h * h.vel, w.acc_h * h.acc, w.reg_h * h.reg,
                           w.vel_o * o.vel, w.acc_o * o.acc, w.reg_o * o.reg};
  record(breakdown, "vel_h", terms[0]);
  record(breakdown, "acc_h", terms[1]);
  record(breakdown, "reg_h", terms[2]);
  record(breakdown, "vel_o", terms[3]);
  record(breakdown, "acc_o", terms[4]);
  record(breakdown, "reg_o", terms[5]);
  return terms[0] + terms[1] + terms[2] + terms[3] + terms[4] + terms[5];
}

LossBreakdown total_loss(const SequencePrediction& pred, const SequenceGT& gt, const Edges& edges,
                         const LossWeights& w, double fps) {
  LossBreakdown b;
  b.param = param_loss(pred, gt, w, &b);
  b.mesh = mesh_loss(pred, gt, edges, w, &b);
  b.acc = acc_loss(pred, gt, w, fps, &b);
  b.total = b.param + b.mesh + b.acc;
  return b;
}

double PoseFitObjective::value(const std::array<double, 9>& x) const {
  std::array<double, 9> unused;
  return value_and_gradient(x, unused);
}

double PoseFitObjective::value_and_gradient(const std::array<double, 9>& x, std::array<double, 9>& grad) const {
  if (templ.size() != target.size() || templ.empty()) {
    throw std::invalid_argument("pose fit: template and target must be non-empty and corresponded");
  }
  const Vec3 a1(x[0], x[1], x[2]), a2(x[3], x[4], x[5]), T(x[6], x[7], x[8]);
  const Rot6D r{x[0], x[1], x[2], x[3], x[4], x[5]};
  const Mat3 R = rot6d_to_matrix(r);

  const double inv_n = 1.0 / static_cast<double>(templ.size());
  double loss = 0.0;
  Mat3 dR = Mat3::Zero();
  Vec3 dT = Vec3::Zero();
  for (std::size_t i = 0; i < templ.size(); ++i) {
    const Vec3 e = R * templ[i] + T - target[i];
    loss += e.squaredNorm();
    dR += e * templ[i].transpose();
    dT += e;
  }
  loss *= inv_n;
  dR *= 2.0 * inv_n;
  dT *= 2.0 * inv_n;

  // Reverse pass through Gram–Schmidt: c1 = a1/|a1|, u2 = a2 - (c1·a2)c1, c2 = u2/|u2|, c3 = c1×c2.
  const Vec3 c1 = R.col(0), c2 = R.col(1);
  const double n1 = a1.norm();
  const Vec3 u2 = a2 - c1.dot(a2) * c1;
  const double n2 = u2.norm();
  Vec3 g1 = dR.col(0), g2 = dR.col(1);
  const Vec3 g3 = dR.col(2);
  g1 += c2.cross(g3);
  g2 += g3.cross(c1);
  const Vec3 du2 = (g2 - c2 * c2.dot(g2)) / n2;
  const Vec3 da2 = du2 - c1 * c1.dot(du2);
  g1 -= c1.dot(a2) * du2 + a2 * c1.dot(du2);
  const Vec3 da1 = (g1 - c1 * c1.dot(g1)) / n1;

  for (int k = 0; k < 3; ++k) {
    grad[k] = da1[k];
    grad[3 + k] = da2[k];
    grad[6 + k] = dT[k];
  }
  return loss;
}

FitResult fit_object_pose(const Points& templ, const Points& target, const Rot6D& init_rot,
                          const Vec3& init_trans, const FitOptions& opts) {
  if (opts.steps < 0 || !(opts.lr > 0.0)) throw std::invalid_argument("fit: steps must be >= 0 and lr > 0");
  const PoseFitObjective objective{templ, target};
  std::array<double, 9> x{init_rot[0], init_rot[1], init_rot[2], init_rot[3], init_rot[4],
                          init_rot[5], init_trans.x(), init_trans.y(), init_trans.z()};
  std::array<double, 9> grad{};
  FitResult res;
  const double start = objective.value_and_gradient(x, grad);
  res.loss_curve.push_back(start);
  double loss = start;
  while (res.steps < opts.steps && loss >= opts.tolerance) {
    for (int k = 0; k < 9; ++k) x[k] -= opts.lr * grad[k];
    loss = objective.value_and_gradient(x, grad);
    ++res.steps;
    res.loss_curve.push_back(loss);
    if (!std::isfinite(loss) || loss > 10.0 * start) {
      throw FitDivergedError("pose fit diverged at step " + std::to_string(res.steps) + " (loss " +
                                 std::to_string(loss) + ", started at " + std::to_string(start) + ")",
                             res.loss_curve);
    }
  }
  res.rot6d = {x[0], x[1], x[2], x[3], x[4], x[5]};
  res.pose.rotation = rot6d_to_matrix(res.rot6d);
  res.pose.translation = Vec3(x[6], x[7], x[8]);
  return res;
}

}  // namespace tho
