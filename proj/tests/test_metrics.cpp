#include <doctest.h>

#include <limits>

#include "support.hpp"
#include "tho/metrics.hpp"

using namespace tho;
using namespace tho::testing;

namespace {

double brute_chamfer_cm(const Points& a, const Points& b) {
  auto one_way = [](const Points& x, const Points& y) {
    double s = 0.0;
    for (const Vec3& p : x) {
      double best = std::numeric_limits<double>::infinity();
      for (const Vec3& q : y) best = std::min(best, std::sqrt((p - q).squaredNorm()));
      s += best;
    }
    return s / double(x.size());
  };
  return 100.0 * 0.5 * (one_way(a, b) + one_way(b, a));
}

double brute_accel_cm(const std::vector<Points>& p, const std::vector<Points>& g, double fps) {
  double s = 0.0;
  std::size_t count = 0;
  for (std::size_t t = 1; t + 1 < p.size(); ++t)
    for (std::size_t i = 0; i < p[t].size(); ++i) {
      const Vec3 ap = (p[t + 1][i] - 2 * p[t][i] + p[t - 1][i]) * fps * fps;
      const Vec3 ag = (g[t + 1][i] - 2 * g[t][i] + g[t - 1][i]) * fps * fps;
      s += (ap - ag).norm();
      ++count;
    }
  return 100.0 * s / double(count);
}

std::vector<Points> random_traj(Rng& rng, std::size_t frames, std::size_t n) {
  std::vector<Points> traj;
  for (std::size_t t = 0; t < frames; ++t) traj.push_back(rng.points(n));
  return traj;
}

SequenceState sequence_from(const std::vector<Points>& human, const std::vector<Points>& object) {
  SequenceState s;
  for (std::size_t t = 0; t < human.size(); ++t) {
    s.human.emplace_back();
    s.object.push_back(RigidPose::identity());
    s.human_verts.push_back(human[t]);
    s.joints.push_back({human[t][0]});
    s.object_verts.push_back(object[t]);
  }
  return s;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST_CASE("chamfer") {
  Rng rng(1);
  const Points a = rng.points(20);
  CHECK(chamfer(a, a) == 0.0);
  CHECK(std::abs(chamfer({Vec3::Zero()}, {Vec3(0.03, 0, 0)}) - 3.0) < 1e-12);
  const Points b = rng.points(33);
  CHECK(chamfer(a, b) == chamfer(b, a));
  CHECK_THROWS_AS(chamfer({}, b), std::invalid_argument);
}

TEST_CASE("v2v") {
  Rng rng(2);
  const Points a = rng.points(15);
  CHECK(v2v(a, a) == 0.0);
  Points shifted = a;
  for (Vec3& p : shifted) p += Vec3(0, 0.02, 0);
  CHECK(std::abs(v2v(shifted, a) - 2.0) < 1e-9);
  CHECK_THROWS_AS(v2v(a, rng.points(14)), std::invalid_argument);
}

TEST_CASE("accel_error") {
  Rng rng(3);
  SUBCASE("constant velocity on both sides") {
    std::vector<Points> p, g;
    const Points base = rng.points(6);
    for (int t = 0; t < 5; ++t) {
      Points a = base, b = base;
      for (Vec3& x : a) x += Vec3(0.1, 0, 0) * t;
      for (Vec3& x : b) x += Vec3(0, -0.2, 0.05) * t;
      p.push_back(a);
      g.push_back(b);
    }
    CHECK(accel_error(p, g, 30.0) < 1e-8);
  }
  SUBCASE("static prediction against constant acceleration") {
    const Vec3 a0(0.3, -0.4, 1.2);  // |a0| = 1.3 m/s²
    const double fps = 25.0;
    const Points base = rng.points(4);
    std::vector<Points> p(6, base), g;
    for (int t = 0; t < 6; ++t) {
      Points f = base;
      const double tau = t / fps;
      for (Vec3& x : f) x += 0.5 * a0 * tau * tau;
      g.push_back(f);
    }
    CHECK(std::abs(accel_error(p, g, fps) - 130.0) < 1e-6);
  }
  SUBCASE("too short") {
    const auto t = random_traj(rng, 2, 3);
    CHECK_THROWS_AS(accel_error(t, t, 30.0), std::invalid_argument);
  }
}

TEST_CASE("metrics agree with float64 brute force") {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = rng.integer(1, 50), m = rng.integer(1, 50), frames = rng.integer(3, 16);
    const Points a = rng.points(n), b = rng.points(m);
    CHECK(rel(chamfer(a, b), brute_chamfer_cm(a, b)) < 1e-6);
    const Points c = rng.points(n);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += (a[i] - c[i]).norm();
    CHECK(rel(v2v(a, c), 100.0 * s / n) < 1e-6);
    const auto p = random_traj(rng, frames, n), g = random_traj(rng, frames, n);
    CHECK(rel(accel_error(p, g, 30.0), brute_accel_cm(p, g, 30.0)) < 1e-6);
  }
}

TEST_CASE("grid nearest neighbours match brute force exactly") {
  Rng rng(5);
  SUBCASE("uniform cloud") {
    const Points ref = rng.points(2500), q = rng.points(400, 1.5);
    CHECK(nearest_distances_grid(q, ref) == nearest_distances_brute(q, ref));
  }
  SUBCASE("clustered and flat clouds") {
    Points ref;
    for (int i = 0; i < 2100; ++i) ref.push_back(Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), 0.0));
    for (int i = 0; i < 200; ++i) ref.push_back(Vec3(5, 5, 5) + rng.vec3(0.01));
    const Points q = rng.points(300, 6.0);
    CHECK(nearest_distances_grid(q, ref) == nearest_distances_brute(q, ref));
  }
  SUBCASE("dispatch above the limit uses the grid with identical results") {
    const Points ref = rng.points(kBruteForceNearestLimit + 10), q = rng.points(50);
    CHECK(nearest_distances(q, ref) == nearest_distances_brute(q, ref));
  }
}

TEST_CASE("evaluate_sequence") {
  Rng rng(6);
  const std::size_t frames = 6;
  const SequenceState gt = sequence_from(random_traj(rng, frames, 30), random_traj(rng, frames, 12));

  SUBCASE("identical sequences") {
    const MetricsReport r = evaluate_sequence(gt, gt);
    CHECK(r.frames == frames);
    for (double v : {r.cd_human, r.cd_object, r.cd_combined, r.v2v_object, r.acc_human, r.acc_object})
      CHECK(v < 1e-9);
  }
  SUBCASE("a global rigid transform of the prediction is removed") {
    const SequenceState pred = sequence_from(random_traj(rng, frames, 30), random_traj(rng, frames, 12));
    const MetricsReport base = evaluate_sequence(pred, gt);
    const RigidPose g{rng.rotation(), rng.vec3(3.0)};
    SequenceState moved = pred;
    for (std::size_t t = 0; t < frames; ++t) {
      moved.human_verts[t] = apply_rigid(g, pred.human_verts[t]);
      moved.object_verts[t] = apply_rigid(g, pred.object_verts[t]);
    }
    const MetricsReport r = evaluate_sequence(moved, gt);
    CHECK(std::abs(r.cd_human - base.cd_human) < 1e-5);
    CHECK(std::abs(r.cd_object - base.cd_object) < 1e-5);
    CHECK(std::abs(r.cd_combined - base.cd_combined) < 1e-5);
    CHECK(std::abs(r.v2v_object - base.v2v_object) < 1e-5);
    CHECK(std::abs(r.acc_human - base.acc_human) < 1e-5);
    CHECK(std::abs(r.acc_object - base.acc_object) < 1e-5);

    SequenceState exact = gt;
    for (std::size_t t = 0; t < frames; ++t) {
      exact.human_verts[t] = apply_rigid(g, gt.human_verts[t]);
      exact.object_verts[t] = apply_rigid(g, gt.object_verts[t]);
    }
    const MetricsReport z = evaluate_sequence(exact, gt);
    for (double v : {z.cd_human, z.cd_object, z.cd_combined, z.v2v_object, z.acc_human, z.acc_object})
      CHECK(v < 1e-5);
  }
  SUBCASE("object shifted five centimetres from the second frame on") {
    SequenceState pred = gt;
    for (std::size_t t = 1; t < frames; ++t)
      for (Vec3& v : pred.object_verts[t]) v += Vec3(0.05, 0, 0);
    const MetricsReport r = evaluate_sequence(pred, gt);
    CHECK(r.alignment.translation.norm() < 1e-12);
    CHECK(r.cd_human < 1e-9);
    CHECK(r.acc_human < 1e-6);
    // Only the stencil centred on the first frame sees the jump: 5 cm · 30² over 4 stencils.
    CHECK(std::abs(r.acc_object - 5.0 * 900.0 / 4.0) < 1e-6);
    CHECK(std::abs(r.v2v_object - 5.0 * 5.0 / 6.0) < 1e-9);
    double cd_o = 0.0, cd_c = 0.0;
    for (std::size_t t = 0; t < frames; ++t) {
      cd_o += brute_chamfer_cm(pred.object_verts[t], gt.object_verts[t]) / frames;
      Points pu = pred.human_verts[t], gu = gt.human_verts[t];
      pu.insert(pu.end(), pred.object_verts[t].begin(), pred.object_verts[t].end());
      gu.insert(gu.end(), gt.object_verts[t].begin(), gt.object_verts[t].end());
      cd_c += brute_chamfer_cm(pu, gu) / frames;
    }
    CHECK(rel(r.cd_object, cd_o) < 1e-6);
    CHECK(rel(r.cd_combined, cd_c) < 1e-6);
    const nlohmann::json j = r.to_json();
    for (const char* key : {"CD_h", "CD_o", "CD_c", "V2V", "Acc_h", "Acc_o"}) CHECK(j.at(key).get<double>() >= 0.0);
  }
  SUBCASE("too few frames") {
    SequenceState short_gt = sequence_from(random_traj(rng, 2, 5), random_traj(rng, 2, 5));
    CHECK_THROWS_AS(evaluate_sequence(short_gt, short_gt), std::invalid_argument);
  }
}
