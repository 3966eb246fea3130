#include "tho/synth.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <string>

#include <Eigen/Geometry>

namespace tho {

namespace {

Mat3 rot_x(double a) { return Eigen::AngleAxisd(a, Vec3::UnitX()).toRotationMatrix(); }
Mat3 rot_y(double a) { return Eigen::AngleAxisd(a, Vec3::UnitY()).toRotationMatrix(); }
Mat3 rot_z(double a) { return Eigen::AngleAxisd(a, Vec3::UnitZ()).toRotationMatrix(); }

nlohmann::json vec_json(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

Vec3 json_vec(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 3) throw std::invalid_argument("expected a 3-vector");
  return {v[0], v[1], v[2]};
}

HumanParams scripted_pose(const SceneScript& s, double time) {
  const double phase = 2.0 * std::numbers::pi * s.sway_frequency * time;
  const double swing = s.limb_swing * std::sin(phase);
  HumanParams p;
  p.root_orient = matrix_to_rot6d(rot_y(s.sway_amplitude * std::sin(phase)));
  auto set = [&](std::size_t j, const Mat3& R) { p.body_pose[j] = matrix_to_rot6d(R); };
  set(1, rot_x(swing));
  set(2, rot_x(-swing));
  set(4, rot_x(-0.5 * s.limb_swing * (1.0 + std::sin(phase))));
  set(5, rot_x(-0.5 * s.limb_swing * (1.0 - std::sin(phase))));
  // Left arm hangs and swings; right arm holds its forearm out towards the camera.
  set(16, rot_z(1.2) * rot_y(0.5 * swing));
  set(17, rot_z(-0.9));
  set(19, rot_y(-0.8));
  p.betas = s.betas;
  p.transl = s.start + s.velocity * time;
  return p;
}

void apply_occlusion(Mask& object, const Vec2& hand_px, double fraction) {
  struct Pix {
    double d;
    std::size_t index;
  };
  std::vector<Pix> pix;
  for (int y = 0; y < object.height; ++y) {
    for (int x = 0; x < object.width; ++x) {
      if (object.at(x, y)) {
        pix.push_back({(Vec2(x, y) - hand_px).squaredNorm(), static_cast<std::size_t>(y) * object.width + x});
      }
    }
  }
  std::sort(pix.begin(), pix.end(), [](const Pix& a, const Pix& b) {
    return a.d != b.d ? a.d < b.d : a.index < b.index;
  });
  const auto removed = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(pix.size())));
  for (std::size_t i = 0; i < removed; ++i) object.pixels[pix[i].index] = 0;
}

}  // namespace

void SceneScript::validate() const {
  camera.validate();
  if (frames < 1) throw std::invalid_argument("scene script: frames must be at least 1");
  if (!(fps > 0.0)) throw std::invalid_argument("scene script: fps must be positive");
  if (object_subdivisions < 1) throw std::invalid_argument("scene script: object_subdivisions must be >= 1");
  if ((object_size.array() <= 0.0).any()) throw std::invalid_argument("scene script: object size must be positive");
  if (hand_joint >= kNumJoints) throw std::invalid_argument("scene script: hand_joint out of range");
  if (splat_radius < 0) throw std::invalid_argument("scene script: splat_radius must be >= 0");
  for (const OcclusionWindow& o : occlusion) {
    if (o.end < o.start || o.fraction < 0.0 || o.fraction > 1.0) {
      throw std::invalid_argument("scene script: invalid occlusion window");
    }
  }
}

void to_json(nlohmann::json& j, const SceneScript& s) {
  nlohmann::json occ = nlohmann::json::array();
  for (const OcclusionWindow& o : s.occlusion) occ.push_back({{"start", o.start}, {"end", o.end}, {"fraction", o.fraction}});
  j = {{"seed", s.seed},
       {"frames", s.frames},
       {"fps", s.fps},
       {"camera", s.camera},
       {"human",
        {{"start", vec_json(s.start)},
         {"velocity", vec_json(s.velocity)},
         {"sway_amplitude", s.sway_amplitude},
         {"sway_frequency", s.sway_frequency},
         {"limb_swing", s.limb_swing},
         {"betas", s.betas}}},
       {"object",
        {{"size", vec_json(s.object_size)},
         {"subdivisions", s.object_subdivisions},
         {"attached", s.attached},
         {"hand_joint", s.hand_joint},
         {"hand_offset", s.hand_offset},
         {"free_start", vec_json(s.free_start)},
         {"free_velocity", vec_json(s.free_velocity)},
         {"free_spin", s.free_spin}}},
       {"occlusion", occ},
       {"splat_radius", s.splat_radius}};
}

void from_json(const nlohmann::json& j, SceneScript& s) {
  s = SceneScript{};
  s.seed = j.value("seed", s.seed);
  s.frames = j.value("frames", s.frames);
  s.fps = j.value("fps", s.fps);
  if (j.contains("camera")) j.at("camera").get_to(s.camera);
  if (j.contains("human")) {
    const auto& h = j.at("human");
    if (h.contains("start")) s.start = json_vec(h.at("start"));
    if (h.contains("velocity")) s.velocity = json_vec(h.at("velocity"));
    s.sway_amplitude = h.value("sway_amplitude", s.sway_amplitude);
    s.sway_frequency = h.value("sway_frequency", s.sway_frequency);
    s.limb_swing = h.value("limb_swing", s.limb_swing);
    if (h.contains("betas")) h.at("betas").get_to(s.betas);
  }
  if (j.contains("object")) {
    const auto& o = j.at("object");
    if (o.contains("size")) s.object_size = json_vec(o.at("size"));
    s.object_subdivisions = o.value("subdivisions", s.object_subdivisions);
    s.attached = o.value("attached", s.attached);
    s.hand_joint = o.value("hand_joint", s.hand_joint);
    if (o.contains("hand_offset")) o.at("hand_offset").get_to(s.hand_offset);
    if (o.contains("free_start")) s.free_start = json_vec(o.at("free_start"));
    if (o.contains("free_velocity")) s.free_velocity = json_vec(o.at("free_velocity"));
    s.free_spin = o.value("free_spin", s.free_spin);
  }
  if (j.contains("occlusion")) {
    for (const auto& o : j.at("occlusion")) {
      s.occlusion.push_back({o.at("start").get<std::size_t>(), o.at("end").get<std::size_t>(),
                             o.value("fraction", 0.5)});
    }
  }
  s.splat_radius = j.value("splat_radius", s.splat_radius);
  s.validate();
}

Mesh make_box_template(const Vec3& size, int n) {
  if (n < 1) throw std::invalid_argument("box template needs at least one subdivision");
  Mesh mesh;
  std::map<std::array<int, 3>, int> lattice;
  auto vertex = [&](std::array<int, 3> ijk) {
    auto [it, inserted] = lattice.emplace(ijk, static_cast<int>(mesh.vertices.size()));
    if (inserted) {
      Vec3 v;
      for (int k = 0; k < 3; ++k) v[k] = (static_cast<double>(ijk[k]) / n - 0.5) * size[k];
      mesh.vertices.push_back(v);
    }
    return it->second;
  };
  // Six faces: fixed axis a at lattice 0 or n, spanned by the other two axes.
  for (int a = 0; a < 3; ++a) {
    const int b = (a + 1) % 3, c = (a + 2) % 3;
    for (int side : {0, n}) {
      for (int i = 0; i < n; ++i) {
        for (int k = 0; k < n; ++k) {
          auto at = [&](int di, int dk) {
            std::array<int, 3> ijk{};
            ijk[a] = side;
            ijk[b] = i + di;
            ijk[c] = k + dk;
            return vertex(ijk);
          };
          const int v00 = at(0, 0), v10 = at(1, 0), v01 = at(0, 1), v11 = at(1, 1);
          if (side == n) {
            mesh.faces.push_back({v00, v10, v11});
            mesh.faces.push_back({v00, v11, v01});
          } else {
            mesh.faces.push_back({v00, v11, v10});
            mesh.faces.push_back({v00, v01, v11});
          }
        }
      }
    }
  }
  return mesh;
}

void splat_points(Mask& mask, const Camera& cam, const Points& verts, int radius) {
  const int r2 = radius * radius;
  for (const Vec3& v : verts) {
    if (v.z() <= 1e-6) continue;
    const Vec2 p = project_point(cam, v);
    if (!std::isfinite(p.x()) || !std::isfinite(p.y())) continue;
    const double px = std::floor(p.x() + 0.5), py = std::floor(p.y() + 0.5);
    if (px < -radius || py < -radius || px > mask.width + radius || py > mask.height + radius) continue;
    const int cx = static_cast<int>(px), cy = static_cast<int>(py);
    for (int dy = -radius; dy <= radius; ++dy)
      for (int dx = -radius; dx <= radius; ++dx)
        if (dx * dx + dy * dy <= r2 && mask.in_bounds(cx + dx, cy + dy)) mask.set(cx + dx, cy + dy);
  }
}

Scene generate_scene(const SceneScript& script, const ToySkeleton& skel) {
  script.validate();
  skel.validate();
  Scene scene;
  scene.camera = script.camera;
  scene.object_template = make_box_template(script.object_size, script.object_subdivisions);
  scene.frames.fps = script.fps;
  scene.gt.fps = script.fps;

  for (std::size_t t = 0; t < script.frames; ++t) {
    const double time = static_cast<double>(t) / script.fps;
    HumanParams params = scripted_pose(script, time);
    BodyState body = forward_kinematics(skel, params);

    RigidPose object_pose;
    if (script.attached) {
      object_pose = compose(body.joint_transforms[script.hand_joint], script.hand_offset);
    } else {
      object_pose = {rot_y(script.free_spin * time), script.free_start + script.free_velocity * time};
    }
    Points object_verts = apply_rigid(object_pose, scene.object_template.vertices);

    Mask human(script.camera.width, script.camera.height);
    Mask object(script.camera.width, script.camera.height);
    splat_points(human, script.camera, body.vertices, script.splat_radius);
    splat_points(object, script.camera, object_verts, script.splat_radius);
    for (const OcclusionWindow& o : script.occlusion) {
      const Vec3& hand = body.joints[script.hand_joint];
      if (t >= o.start && t < o.end && hand.z() > 1e-6) {
        apply_occlusion(object, project_point(script.camera, hand), o.fraction);
      }
    }

    scene.frames.human_masks.push_back(std::move(human));
    scene.frames.object_masks.push_back(std::move(object));
    scene.pelvis.push_back(body.joints[kPelvis]);
    scene.gt.human.push_back(std::move(params));
    scene.gt.object.push_back(object_pose);
    scene.gt.human_verts.push_back(std::move(body.vertices));
    scene.gt.joints.push_back(std::move(body.joints));
    scene.gt.object_verts.push_back(std::move(object_verts));
  }
  return scene;
}

AffineFeatureMap affine_feature_map(std::size_t h, std::size_t w, std::size_t channels, std::uint64_t seed,
                                    std::size_t stride) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> slope(-0.1, 0.1);
  std::uniform_real_distribution<double> offset(-1.0, 1.0);
  AffineFeatureMap out{FeatureMap(h, w, channels, stride), {}, {}, {}};
  for (std::size_t c = 0; c < channels; ++c) {
    out.alpha.push_back(slope(rng));
    out.beta.push_back(slope(rng));
    out.gamma.push_back(offset(rng));
  }
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      auto cell = out.map.cell(y, x);
      for (std::size_t c = 0; c < channels; ++c) {
        cell[c] = static_cast<float>(out.value(c, static_cast<double>(x), static_cast<double>(y)));
      }
    }
  }
  return out;
}

MotionPrior synthetic_motion_prior(const SequenceGT& gt, double sigma_rot, double sigma_trans, std::uint64_t seed) {
  if (sigma_rot < 0.0 || sigma_trans < 0.0) throw std::invalid_argument("motion prior: sigma must be >= 0");
  gt.validate();
  const std::size_t n = gt.size();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  std::vector<Vec3> rot(n), trans(n);
  // Per-axis std sigma/√3 gives an RMS vector magnitude of sigma.
  for (std::size_t t = 0; t < n; ++t) {
    for (int k = 0; k < 3; ++k) rot[t][k] = unit(rng) * sigma_rot / std::sqrt(3.0);
    for (int k = 0; k < 3; ++k) trans[t][k] = unit(rng) * sigma_trans / std::sqrt(3.0);
  }
  MotionPrior prior;
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t lo = t >= 2 ? t - 2 : 0, hi = std::min(n, t + 3);
    Vec3 r = Vec3::Zero(), d = Vec3::Zero();
    for (std::size_t s = lo; s < hi; ++s) {
      r += rot[s];
      d += trans[s];
    }
    // Averaging k iid draws shrinks the std by √k; undo it so the marginal scale is sigma.
    const double k = static_cast<double>(hi - lo);
    r *= std::sqrt(k) / k;
    d *= std::sqrt(k) / k;
    const Vec3 pivot = gt.joints[t][kPelvis];
    const RigidPose noise{axis_angle_to_matrix(r), pivot + d - axis_angle_to_matrix(r) * pivot};
    prior.human_verts.push_back(apply_rigid(noise, gt.human_verts[t]));
    prior.joints.push_back(apply_rigid(noise, gt.joints[t]));
  }
  return prior;
}

}  // namespace tho
