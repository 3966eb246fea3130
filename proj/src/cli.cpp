#include "tho/cli.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "tho/encoder.hpp"

namespace tho {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// RunConfig

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* first = value.data();
  const char* last = first + value.size();
  const auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last) {
    throw ConfigError("config key '" + key + "': cannot parse '" + value + "'");
  }
  return out;
}

const std::map<std::string, std::string> kAliases = {{"S", "crop_size"}, {"C", "channels"}, {"ffn", "ffn_dim"}};

std::string frame_name(std::size_t t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04zu", t);
  return buf;
}

}  // namespace

void RunConfig::set(const std::string& raw_key, const std::string& raw_value) {
  const auto alias = kAliases.find(raw_key);
  const std::string key = alias == kAliases.end() ? raw_key : alias->second;
  const std::string value = trim(raw_value);
  auto size = [&] { return parse_number<std::size_t>(key, value); };
  auto real = [&] { return parse_number<double>(key, value); };

  if (key == "channels") model.channels = size();
  else if (key == "model_dim") model.model_dim = size();
  else if (key == "heads") model.heads = size();
  else if (key == "ffn_dim") model.ffn_dim = size();
  else if (key == "tiat_layers") model.tiat_layers = size();
  else if (key == "window") model.window = size();
  else if (key == "crop_size") model.crop_size = size();
  else if (key == "stride") model.stride = size();
  else if (key == "rope_base") model.rope_base = real();
  else if (key == "pad") pad = real();
  else if (key == "fps") fps = real();
  else if (key == "seed") seed = parse_number<std::uint64_t>(key, value);
  else if (key == "frames") frames = size();
  else if (key == "prior_sigma_rot") prior_sigma_rot = real();
  else if (key == "prior_sigma_trans") prior_sigma_trans = real();
  else if (key == "fit_steps") fit_steps = parse_number<int>(key, value);
  else if (key == "fit_lr") fit_lr = real();
  else if (key == "checkpoint") checkpoint = value;
  else if (key == "scene") scene = value;
  else if (key == "out") out = value;
  else throw ConfigError("unknown config key '" + raw_key + "'");
  given.insert(key);
}

RunConfig parse_config(std::istream& is, const std::string& source) {
  RunConfig cfg;
  std::string line;
  for (int lineno = 1; std::getline(is, line); ++lineno) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": expected key=value");
    }
    try {
      cfg.set(trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return cfg;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw UsageError("cannot open config " + path.string());
  return parse_config(is, path.string());
}

void check_config_matches(const RunConfig& cfg, const ModelConfig& ckpt) {
  const ModelConfig& m = cfg.model;
  const std::vector<std::tuple<std::string, double, double>> dims = {
      {"channels", double(m.channels), double(ckpt.channels)},
      {"model_dim", double(m.model_dim), double(ckpt.model_dim)},
      {"heads", double(m.heads), double(ckpt.heads)},
      {"ffn_dim", double(m.ffn_dim), double(ckpt.ffn_dim)},
      {"tiat_layers", double(m.tiat_layers), double(ckpt.tiat_layers)},
      {"window", double(m.window), double(ckpt.window)},
      {"crop_size", double(m.crop_size), double(ckpt.crop_size)},
      {"stride", double(m.stride), double(ckpt.stride)},
      {"rope_base", m.rope_base, ckpt.rope_base}};
  std::string problems;
  for (const auto& [key, want, have] : dims) {
    if (cfg.given.count(key) && want != have) {
      std::ostringstream os;
      os << (problems.empty() ? "" : "; ") << key << ": config " << want << ", checkpoint " << have;
      problems += os.str();
    }
  }
  if (!problems.empty()) throw ConfigError("config/checkpoint mismatch: " + problems);
}

// ---------------------------------------------------------------------------
// Bundles

namespace {

Tensor stack_points(const std::vector<Points>& frames) {
  const std::size_t n = frames.size();
  const std::size_t v = n ? frames[0].size() : 0;
  Tensor t({n, v, 3});
  for (std::size_t f = 0; f < n; ++f) {
    if (frames[f].size() != v) throw ShapeError("frame " + std::to_string(f) + " has a different vertex count");
    for (std::size_t i = 0; i < v; ++i)
      for (int k = 0; k < 3; ++k) t[(f * v + i) * 3 + k] = static_cast<float>(frames[f][i][k]);
  }
  return t;
}

std::vector<Points> unstack_points(const Tensor& t, const fs::path& source, std::size_t limit) {
  if (t.rank() != 3 || t.dim(2) != 3) {
    throw ShapeError(source.string() + ": expected N×V×3, got " + shape_string(t.shape()));
  }
  const std::size_t n = std::min(limit, t.dim(0)), v = t.dim(1);
  std::vector<Points> out(n, Points(v));
  for (std::size_t f = 0; f < n; ++f)
    for (std::size_t i = 0; i < v; ++i)
      for (int k = 0; k < 3; ++k) out[f][i][k] = t[(f * v + i) * 3 + k];
  return out;
}

void require_file(const fs::path& p) {
  if (!fs::exists(p)) throw std::runtime_error("missing " + p.string());
}

void make_dirs(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
}

SequenceState read_sequence_bundle_limited(const fs::path& dir, std::size_t limit) {
  require_file(dir / "meta.json");
  const json meta = read_json(dir / "meta.json");
  SequenceState s;
  s.fps = meta.at("fps").get<double>();
  const std::size_t n = std::min(limit, meta.at("frames").get<std::size_t>());
  const auto human = read_json_lines(dir / "human.jsonl");
  const auto object = read_json_lines(dir / "object.jsonl");
  if (human.size() < n || object.size() < n) throw ParseError(dir.string() + ": parameter files have too few frames");
  for (std::size_t t = 0; t < n; ++t) {
    s.human.push_back(human[t].get<HumanParams>());
    s.object.push_back(object[t].get<RigidPose>());
  }
  s.human_verts = unstack_points(load_tensor(dir / "human_verts.thof"), dir / "human_verts.thof", n);
  s.joints = unstack_points(load_tensor(dir / "joints.thof"), dir / "joints.thof", n);
  s.object_verts = unstack_points(load_tensor(dir / "object_verts.thof"), dir / "object_verts.thof", n);
  s.validate();
  return s;
}

constexpr std::uint64_t kFeatureSeedMix = 0x9E3779B97F4A7C15ull;

}  // namespace

void write_sequence_bundle(const fs::path& dir, const SequenceState& seq) {
  make_dirs(dir);
  std::vector<json> human, object;
  for (const HumanParams& h : seq.human) human.emplace_back(h);
  for (const RigidPose& o : seq.object) object.emplace_back(o);
  write_json_lines(dir / "human.jsonl", human);
  write_json_lines(dir / "object.jsonl", object);
  save_tensor(dir / "human_verts.thof", stack_points(seq.human_verts));
  save_tensor(dir / "joints.thof", stack_points(seq.joints));
  save_tensor(dir / "object_verts.thof", stack_points(seq.object_verts));
  write_json(dir / "meta.json", json{{"fps", seq.fps}, {"frames", seq.size()}});
}

SequenceState read_sequence_bundle(const fs::path& dir) {
  return read_sequence_bundle_limited(dir, std::numeric_limits<std::size_t>::max());
}

SceneBundle load_scene(const fs::path& dir, std::optional<std::size_t> frames) {
  require_file(dir / "scene.json");
  const json meta = read_json(dir / "scene.json");
  const std::size_t total = meta.at("frames").get<std::size_t>();
  if (frames && (*frames == 0 || *frames > total)) {
    throw ConfigError("requested " + std::to_string(*frames) + " frames but the scene has " + std::to_string(total));
  }
  const std::size_t n = frames.value_or(total);
  const std::size_t stride = meta.at("stride").get<std::size_t>();

  SceneBundle b;
  b.camera = meta.at("camera").get<Camera>();
  b.frames.fps = meta.at("fps").get<double>();
  b.object_template = read_obj(dir / "template.obj");
  b.skeleton = skeleton_from_json(read_json(dir / "skeleton.json"), read_obj(dir / "body.obj"));
  b.gt = read_sequence_bundle_limited(dir / "gt", n);
  b.prior.human_verts = unstack_points(load_tensor(dir / "prior" / "human_verts.thof"), dir / "prior", n);
  b.prior.joints = unstack_points(load_tensor(dir / "prior" / "joints.thof"), dir / "prior", n);
  for (std::size_t t = 0; t < n; ++t) {
    const std::string f = frame_name(t);
    b.frames.human_masks.push_back(read_pgm(dir / "masks" / ("human_" + f + ".pgm")));
    b.frames.object_masks.push_back(read_pgm(dir / "masks" / ("object_" + f + ".pgm")));
    b.features.push_back(FeatureMap::from_tensor(load_tensor(dir / "features" / (f + ".thof")), stride));
  }
  b.frames.validate();
  return b;
}

// ---------------------------------------------------------------------------
// Commands

void cmd_synth(const RunConfig& cfg, const fs::path& script_path, std::ostream& log) {
  if (script_path.empty()) throw UsageError("synth: a scene script is required (--script)");
  if (!fs::exists(script_path)) throw UsageError("synth: script not found: " + script_path.string());
  if (cfg.out.empty()) throw UsageError("synth: --out is required");

  SceneScript script = read_json(script_path).get<SceneScript>();
  if (cfg.given.count("seed")) script.seed = cfg.seed;
  if (cfg.frames) script.frames = *cfg.frames;
  if (cfg.given.count("fps")) script.fps = cfg.fps;
  script.validate();
  cfg.model.validate();

  const ToySkeleton skel = ToySkeleton::make_default();
  const Scene scene = generate_scene(script, skel);
  const MotionPrior prior =
      synthetic_motion_prior(scene.gt, cfg.prior_sigma_rot, cfg.prior_sigma_trans, script.seed + 1);

  const fs::path& out = cfg.out;
  make_dirs(out / "masks");
  make_dirs(out / "features");
  make_dirs(out / "prior");
  write_json(out / "scene.json", json{{"script", script},
                                      {"frames", script.frames},
                                      {"fps", script.fps},
                                      {"camera", scene.camera},
                                      {"channels", cfg.model.channels},
                                      {"crop_size", cfg.model.crop_size},
                                      {"stride", cfg.model.stride}});
  write_json(out / "skeleton.json", skeleton_to_json(skel));
  write_obj(out / "body.obj", Mesh{skel.rest_vertices, skel.faces});
  write_obj(out / "template.obj", scene.object_template);
  write_sequence_bundle(out / "gt", scene.gt);
  std::vector<json> pelvis;
  for (std::size_t t = 0; t < scene.pelvis.size(); ++t) {
    const Vec3& p = scene.pelvis[t];
    pelvis.push_back({{"frame", t}, {"pelvis", {p.x(), p.y(), p.z()}}});
  }
  write_json_lines(out / "pelvis.jsonl", pelvis);
  save_tensor(out / "prior" / "human_verts.thof", stack_points(prior.human_verts));
  save_tensor(out / "prior" / "joints.thof", stack_points(prior.joints));

  const std::size_t grid = cfg.model.grid();
  for (std::size_t t = 0; t < script.frames; ++t) {
    const std::string f = frame_name(t);
    write_pgm(out / "masks" / ("human_" + f + ".pgm"), scene.frames.human_masks[t]);
    write_pgm(out / "masks" / ("object_" + f + ".pgm"), scene.frames.object_masks[t]);
    const std::uint64_t seed = script.seed * kFeatureSeedMix + t + 1;
    save_tensor(out / "features" / (f + ".thof"),
                affine_feature_map(grid, grid, cfg.model.channels, seed, cfg.model.stride).map.data);
  }
  log << "synth: wrote " << script.frames << " frames to " << out.string() << "\n";
}

void cmd_init(const RunConfig& cfg, std::ostream& log) {
  if (cfg.out.empty()) throw UsageError("init: --out is required");
  if (cfg.out.has_parent_path()) make_dirs(cfg.out.parent_path());
  save_checkpoint(cfg.out, model_to_checkpoint(random_model(cfg.model, cfg.seed)));
  log << "init: wrote random checkpoint (seed " << cfg.seed << ") to " << cfg.out.string() << "\n";
}

PipelineOutput cmd_infer(const RunConfig& cfg, std::ostream& log) {
  if (cfg.checkpoint.empty()) throw UsageError("infer: --checkpoint is required");
  if (cfg.scene.empty()) throw UsageError("infer: --scene is required");
  if (cfg.out.empty()) throw UsageError("infer: --out is required");

  const ThoModel model = model_from_checkpoint(load_checkpoint(cfg.checkpoint));
  check_config_matches(cfg, model.config);

  const json meta = read_json(cfg.scene / "scene.json");
  const ModelConfig& mc = model.config;
  if (meta.at("channels").get<std::size_t>() != mc.channels || meta.at("crop_size").get<std::size_t>() != mc.crop_size ||
      meta.at("stride").get<std::size_t>() != mc.stride) {
    throw ConfigError("scene/checkpoint mismatch: scene features have C=" + meta.at("channels").dump() +
                      ", S=" + meta.at("crop_size").dump() + ", stride=" + meta.at("stride").dump() +
                      "; checkpoint expects C=" + std::to_string(mc.channels) + ", S=" +
                      std::to_string(mc.crop_size) + ", stride=" + std::to_string(mc.stride));
  }

  SceneBundle scene = load_scene(cfg.scene, cfg.frames);
  PipelineInputs in;
  in.camera = scene.camera;
  in.frames = std::move(scene.frames);
  in.prior_human_verts = std::move(scene.prior.human_verts);
  in.prior_joints = std::move(scene.prior.joints);
  in.features = std::move(scene.features);
  in.object_template = std::move(scene.object_template);
  in.pad = cfg.pad;

  PipelineOutput out = run_pipeline(model, in, scene.skeleton);
  write_sequence_bundle(cfg.out, out.decoded);

  json diag = json::array();
  for (const FrameEncoding& f : out.frames) {
    std::size_t argmax = 0;
    for (std::size_t i = 1; i < f.heatmap.size(); ++i)
      if (f.heatmap[i] > f.heatmap[argmax]) argmax = i;
    diag.push_back({{"crop_center", {f.crop.center.x(), f.crop.center.y()}},
                    {"crop_side", f.crop.side},
                    {"fallback_crop", f.crop.fallback},
                    {"empty_object_mask", f.empty_object_mask},
                    {"behind_camera", f.behind_camera},
                    {"contact_vertex", argmax}});
  }
  write_json(cfg.out / "frames.json", diag);

  for (const auto& [stage, seconds] : out.stage_seconds) {
    log << "infer: " << stage << " " << std::fixed << std::setprecision(3) << seconds << " s\n";
  }
  log.unsetf(std::ios::floatfield);
  log << "infer: " << out.decoded.size() << " frames written to " << cfg.out.string() << "\n";
  return out;
}

MetricsReport cmd_eval(const fs::path& pred_dir, const fs::path& gt_dir, const fs::path& out_path,
                       std::ostream& log) {
  if (pred_dir.empty() || gt_dir.empty()) throw UsageError("eval: prediction and ground-truth bundles are required");
  const fs::path gt_bundle = fs::exists(gt_dir / "gt" / "meta.json") ? gt_dir / "gt" : gt_dir;
  const SequenceState pred = read_sequence_bundle(pred_dir);
  const SequenceState gt = read_sequence_bundle(gt_bundle);
  if (pred.size() != gt.size()) {
    throw std::invalid_argument("eval: prediction has " + std::to_string(pred.size()) +
                                " frames, ground truth has " + std::to_string(gt.size()));
  }
  const MetricsReport report = evaluate_sequence(pred, gt);
  const json j = report.to_json();
  if (!out_path.empty()) {
    if (out_path.has_parent_path()) make_dirs(out_path.parent_path());
    write_json(out_path, j);
  }
  log << j.dump(2) << "\n";
  return report;
}

FitResult cmd_fit(const RunConfig& cfg, const fs::path& template_obj, const fs::path& target_json,
                  std::ostream& log) {
  if (template_obj.empty() || target_json.empty()) throw UsageError("fit: template OBJ and target JSON are required");
  const Mesh templ = read_obj(template_obj);
  const json target_doc = read_json(target_json);
  Points target;
  for (const auto& v : target_doc.at("vertices")) target.emplace_back(v.at(0).get<double>(), v.at(1).get<double>(), v.at(2).get<double>());
  if (target.size() != templ.vertices.size()) {
    throw std::invalid_argument("fit: target has " + std::to_string(target.size()) + " vertices, template has " +
                                std::to_string(templ.vertices.size()));
  }

  RigidPose init;
  if (target_doc.contains("init")) {
    init = target_doc.at("init").get<RigidPose>();
  } else {
    Vec3 ct = Vec3::Zero(), cs = Vec3::Zero();
    for (std::size_t i = 0; i < target.size(); ++i) {
      ct += target[i];
      cs += templ.vertices[i];
    }
    init.translation = (ct - cs) / static_cast<double>(std::max<std::size_t>(1, target.size()));
  }

  const FitOptions opts{cfg.fit_steps, cfg.fit_lr};
  auto write_curve = [&](const std::vector<double>& curve) {
    if (cfg.out.empty()) return;
    make_dirs(cfg.out);
    std::ostringstream csv;
    csv << "step,loss\n" << std::setprecision(17);
    for (std::size_t i = 0; i < curve.size(); ++i) csv << i << "," << curve[i] << "\n";
    write_text(cfg.out / "loss.csv", csv.str());
  };

  FitResult res;
  try {
    res = fit_object_pose(templ.vertices, target, matrix_to_rot6d(init.rotation), init.translation, opts);
  } catch (const FitDivergedError& e) {
    write_curve(e.loss_curve);
    throw;
  }
  write_curve(res.loss_curve);
  const json pose = {{"pose", res.pose}, {"steps", res.steps}, {"final_loss", res.loss_curve.back()}};
  if (!cfg.out.empty()) write_json(cfg.out / "pose.json", pose);
  log << pose.dump(2) << "\n";
  return res;
}

// ---------------------------------------------------------------------------
// Self-test

namespace {

Mat3 random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> angle(0.0, 3.1);
  Vec3 axis(n(rng), n(rng), n(rng));
  return axis_angle_to_matrix(axis.normalized() * angle(rng));
}

Points random_points(std::mt19937_64& rng, std::size_t count, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Points p(count);
  for (Vec3& v : p) v = Vec3(u(rng), u(rng), u(rng));
  return p;
}

using Suite = std::pair<std::string, std::function<std::string()>>;

std::vector<Suite> invariant_suites() {
  std::vector<Suite> s;
  s.emplace_back("tensor-io", [] {
    std::mt19937_64 rng(1);
    std::normal_distribution<float> n(0.0f, 1.0f);
    Tensor t({3, 4, 5});
    for (float& x : t.storage()) x = n(rng);
    std::stringstream ss;
    write_tensor(ss, t);
    return read_tensor(ss) == t ? "" : "THOF round trip changed the tensor";
  });
  s.emplace_back("checkpoint-roundtrip", [] {
    ModelConfig c;
    c.channels = 8, c.model_dim = 16, c.heads = 2, c.ffn_dim = 32, c.tiat_layers = 2, c.window = 4;
    const Checkpoint a = model_to_checkpoint(random_model(c, 7));
    std::stringstream ss;
    write_checkpoint(ss, a);
    const Checkpoint b = model_to_checkpoint(model_from_checkpoint(read_checkpoint(ss)));
    return a == b ? "" : "THOW round trip changed a tensor";
  });
  s.emplace_back("rot6d", [] {
    std::mt19937_64 rng(2);
    for (int i = 0; i < 200; ++i) {
      const Mat3 R = random_rotation(rng);
      if ((rot6d_to_matrix(matrix_to_rot6d(R)) - R).cwiseAbs().maxCoeff() > 1e-6) return "6D round trip error above 1e-6";
    }
    return "";
  });
  s.emplace_back("umeyama", [] {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 20; ++i) {
      const RigidPose pose{random_rotation(rng), random_points(rng, 1, 2.0)[0]};
      const Points src = random_points(rng, 10 + 10 * i, 1.0);
      const RigidPose est = umeyama_align(src, apply_rigid(pose, src));
      if (geodesic_angle(est.rotation, pose.rotation) > 1e-5 || (est.translation - pose.translation).norm() > 1e-6) {
        return "rigid transform not recovered";
      }
    }
    return "";
  });
  s.emplace_back("local-mask", [] {
    for (std::size_t L : {1, 8, 64}) {
      const Tensor m = local_mask(96, L);
      for (std::size_t t = 0; t < 96; ++t)
        for (std::size_t u = 0; u < 96; ++u) {
          const bool open = (t > u ? t - u : u - t) < L;
          if (open != (m.at(t, u) == 0.0f)) return "mask disagrees with |t-s| < L";
        }
    }
    return "";
  });
  s.emplace_back("rope", [] {
    std::mt19937_64 rng(4);
    std::normal_distribution<float> n(0.0f, 1.0f);
    for (int i = 0; i < 20; ++i) {
      Tensor q({16}), k({16});
      for (float& x : q.storage()) x = n(rng);
      for (float& x : k.storage()) x = n(rng);
      auto logit = [&](double t, double s) {
        const Tensor a = rope_rotate(q, t), b = rope_rotate(k, s);
        double d = 0.0;
        for (std::size_t j = 0; j < 16; ++j) d += double(a[j]) * b[j];
        return d;
      };
      if (std::abs(logit(3, 9) - logit(40, 46)) > 1e-4) return "logit depends on absolute position";
    }
    return "";
  });
  s.emplace_back("bilinear-affine", [] {
    const AffineFeatureMap m = affine_feature_map(6, 7, 4, 5);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 6.0), v(0.0, 5.0);
    for (int i = 0; i < 100; ++i) {
      const double x = u(rng), y = v(rng);
      const Tensor s = bilinear_sample(m.map, x, y);
      for (std::size_t c = 0; c < 4; ++c)
        if (std::abs(s[c] - m.value(c, x, y)) > 1e-5) return "sample differs from the affine formula";
    }
    return "";
  });
  s.emplace_back("nearest-grid", [] {
    std::mt19937_64 rng(6);
    const Points a = random_points(rng, 2500, 1.0), b = random_points(rng, 2500, 1.0);
    const auto g = nearest_distances_grid(a, b), f = nearest_distances_brute(a, b);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (g[i] != f[i]) return "grid search disagrees with brute force";
    return "";
  });
  s.emplace_back("loss-zero", [] {
    SceneScript script;
    script.frames = 6;
    script.sway_amplitude = 0.0;
    script.limb_swing = 0.0;
    const ToySkeleton skel = ToySkeleton::make_default();
    const Scene scene = generate_scene(script, skel);
    const LossBreakdown l = total_loss(scene.gt, scene.gt, mesh_edges(skel), LossWeights{}, scene.gt.fps);
    return l.total < 1e-9 ? "" : "loss of a constant-velocity scene against itself is nonzero";
  });
  s.emplace_back("pose-fit", [] {
    std::mt19937_64 rng(8);
    const Points templ = random_points(rng, 40, 0.2);
    const RigidPose gt{axis_angle_to_matrix(Vec3(0.2, -0.3, 0.1)), Vec3(0.1, 0.05, -0.2)};
    const FitResult r = fit_object_pose(templ, apply_rigid(gt, templ), matrix_to_rot6d(Mat3::Identity()), Vec3::Zero(),
                                        FitOptions{3000, 0.5});
    return geodesic_angle(r.pose.rotation, gt.rotation) < 1e-3 ? "" : "pose fit did not converge";
  });
  return s;
}

}  // namespace

int cmd_selftest(const RunConfig& cfg, std::ostream& out) {
  std::vector<Suite> suites = invariant_suites();
  if (!cfg.checkpoint.empty()) {
    suites.emplace_back("checkpoint", [&cfg] {
      const ThoModel model = model_from_checkpoint(load_checkpoint(cfg.checkpoint));
      check_config_matches(cfg, model.config);
      return std::string();
    });
  }
  std::size_t passed = 0;
  for (const auto& [name, run] : suites) {
    std::string failure;
    try {
      failure = run();
    } catch (const std::exception& e) {
      failure = e.what();
    }
    if (failure.empty()) {
      ++passed;
      out << "PASS " << name << "\n";
    } else {
      out << "FAIL " << name << ": " << failure << "\n";
    }
  }
  out << passed << "/" << suites.size() << " suites passed\n";
  return passed == suites.size() ? 0 : 1;
}

}  // namespace tho
