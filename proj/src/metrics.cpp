#include "tho/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace tho {

namespace {

constexpr double kCm = 100.0;

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

class UniformGrid {
 public:
  explicit UniformGrid(const Points& pts) : pts_(pts) {
    lo_ = hi_ = pts.front();
    for (const Vec3& p : pts) {
      lo_ = lo_.cwiseMin(p);
      hi_ = hi_.cwiseMax(p);
    }
    const Vec3 ext = (hi_ - lo_).cwiseMax(1e-9);
    // Roughly one point per cell.
    cell_ = std::cbrt(ext.prod() / static_cast<double>(pts.size()));
    cell_ = std::max(cell_, ext.maxCoeff() / 256.0);
    for (int k = 0; k < 3; ++k) dims_[k] = std::max(1, static_cast<int>(std::ceil(ext[k] / cell_)));
    cells_.resize(static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2]);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const auto c = cell_of(pts[i]);
      cells_[index(std::clamp(c[0], 0, dims_[0] - 1), std::clamp(c[1], 0, dims_[1] - 1),
                   std::clamp(c[2], 0, dims_[2] - 1))]
          .push_back(i);
    }
  }

  double nearest(const Vec3& q) const {
    const auto qc = cell_of(q);
    int max_ring = 0;
    for (int k = 0; k < 3; ++k) max_ring = std::max({max_ring, std::abs(qc[k]), std::abs(dims_[k] - 1 - qc[k])});
    double best = std::numeric_limits<double>::infinity();
    for (int r = 0; r <= max_ring; ++r) {
      for (int x = qc[0] - r; x <= qc[0] + r; ++x) {
        if (x < 0 || x >= dims_[0]) continue;
        for (int y = qc[1] - r; y <= qc[1] + r; ++y) {
          if (y < 0 || y >= dims_[1]) continue;
          const bool face_xy = std::abs(x - qc[0]) == r || std::abs(y - qc[1]) == r;
          for (int z = qc[2] - r; z <= qc[2] + r; ++z) {
            if (z < 0 || z >= dims_[2]) continue;
            // Only the shell of the cube at Chebyshev radius r.
            if (!face_xy && std::abs(z - qc[2]) != r) continue;
            for (std::size_t i : cells_[index(x, y, z)]) best = std::min(best, (q - pts_[i]).norm());
          }
        }
      }
      // Anything outside rings 0..r is at least r cells away.
      if (best <= r * cell_) break;
    }
    return best;
  }

 private:
  std::array<int, 3> cell_of(const Vec3& p) const {
    std::array<int, 3> c;
    for (int k = 0; k < 3; ++k) c[k] = static_cast<int>(std::floor((p[k] - lo_[k]) / cell_));
    return c;
  }
  std::size_t index(int x, int y, int z) const {
    return (static_cast<std::size_t>(z) * dims_[1] + y) * dims_[0] + x;
  }

  const Points& pts_;
  Vec3 lo_, hi_;
  double cell_ = 1.0;
  std::array<int, 3> dims_{1, 1, 1};
  std::vector<std::vector<std::size_t>> cells_;
};

}  // namespace

std::vector<double> nearest_distances_brute(const Points& queries, const Points& reference) {
  std::vector<double> out(queries.size(), std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < queries.size(); ++i)
    for (const Vec3& p : reference) out[i] = std::min(out[i], (queries[i] - p).norm());
  return out;
}

std::vector<double> nearest_distances_grid(const Points& queries, const Points& reference) {
  if (reference.empty()) throw std::invalid_argument("nearest_distances: empty reference set");
  const UniformGrid grid(reference);
  std::vector<double> out(queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i) out[i] = grid.nearest(queries[i]);
  return out;
}

std::vector<double> nearest_distances(const Points& queries, const Points& reference) {
  if (std::max(queries.size(), reference.size()) < kBruteForceNearestLimit) {
    return nearest_distances_brute(queries, reference);
  }
  return nearest_distances_grid(queries, reference);
}

double chamfer(const Points& a, const Points& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("chamfer: empty point set");
  return kCm * 0.5 * (mean(nearest_distances(a, b)) + mean(nearest_distances(b, a)));
}

double v2v(const Points& pred, const Points& gt) {
  if (pred.size() != gt.size()) {
    throw std::invalid_argument("v2v: " + std::to_string(pred.size()) + " vs " + std::to_string(gt.size()) +
                                " vertices");
  }
  if (pred.empty()) throw std::invalid_argument("v2v: empty vertex set");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += (pred[i] - gt[i]).norm();
  return kCm * s / static_cast<double>(pred.size());
}

double accel_error(const std::vector<Points>& pred, const std::vector<Points>& gt, double fps) {
  if (pred.size() != gt.size()) throw std::invalid_argument("accel_error: trajectory lengths differ");
  if (pred.size() < 3) throw std::invalid_argument("accel_error needs at least 3 frames");
  const auto pa = accelerations(pred, fps), ga = accelerations(gt, fps);
  double s = 0.0;
  std::size_t count = 0;
  for (std::size_t t = 0; t < pa.size(); ++t) {
    if (pa[t].size() != ga[t].size()) throw std::invalid_argument("accel_error: vertex counts differ");
    for (std::size_t i = 0; i < pa[t].size(); ++i) s += (pa[t][i] - ga[t][i]).norm();
    count += pa[t].size();
  }
  if (count == 0) throw std::invalid_argument("accel_error: no vertices");
  return kCm * s / static_cast<double>(count);
}

MetricsReport evaluate_sequence(const SequencePrediction& pred, const SequenceGT& gt) {
  pred.validate();
  gt.validate();
  if (pred.size() != gt.size()) throw std::invalid_argument("evaluate_sequence: sequence lengths differ");
  if (pred.size() < 3) throw std::invalid_argument("evaluate_sequence needs at least 3 frames");

  auto combined = [](const Points& h, const Points& o) {
    Points c = h;
    c.insert(c.end(), o.begin(), o.end());
    return c;
  };

  MetricsReport r;
  r.frames = pred.size();
  r.alignment = umeyama_align(combined(pred.human_verts[0], pred.object_verts[0]),
                              combined(gt.human_verts[0], gt.object_verts[0]));

  std::vector<Points> human(pred.size()), object(pred.size());
  for (std::size_t t = 0; t < pred.size(); ++t) {
    human[t] = apply_rigid(r.alignment, pred.human_verts[t]);
    object[t] = apply_rigid(r.alignment, pred.object_verts[t]);
    r.cd_human += chamfer(human[t], gt.human_verts[t]);
    r.cd_object += chamfer(object[t], gt.object_verts[t]);
    r.cd_combined += chamfer(combined(human[t], object[t]), combined(gt.human_verts[t], gt.object_verts[t]));
    r.v2v_object += v2v(object[t], gt.object_verts[t]);
  }
  const double n = static_cast<double>(pred.size());
  r.cd_human /= n;
  r.cd_object /= n;
  r.cd_combined /= n;
  r.v2v_object /= n;
  r.acc_human = accel_error(human, gt.human_verts, gt.fps);
  r.acc_object = accel_error(object, gt.object_verts, gt.fps);
  return r;
}

nlohmann::json MetricsReport::to_json() const {
  return {{"CD_h", cd_human},     {"CD_o", cd_object},   {"CD_c", cd_combined},
          {"V2V", v2v_object},    {"Acc_h", acc_human},  {"Acc_o", acc_object},
          {"frames", frames},     {"alignment", alignment}};
}

}  // namespace tho
