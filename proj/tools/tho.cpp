#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tho/cli.hpp"

namespace {

struct Flags {
  std::string config;
  std::optional<std::string> checkpoint, scene, out, seed, window, frames;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "key=value config file");
  cmd->add_option("--checkpoint", f.checkpoint, "THOW checkpoint");
  cmd->add_option("--scene", f.scene, "scene directory");
  cmd->add_option("--out", f.out, "output path");
  cmd->add_option("--seed", f.seed, "random seed");
  cmd->add_option("--window", f.window, "TIAT window L");
  cmd->add_option("--frames", f.frames, "number of frames");
  cmd->add_option("--set", f.sets, "extra key=value overrides");
}

tho::RunConfig build_config(const Flags& f) {
  tho::RunConfig cfg = f.config.empty() ? tho::RunConfig{} : tho::load_config(f.config);
  auto apply = [&](const char* key, const std::optional<std::string>& v) {
    if (v) cfg.set(key, *v);
  };
  apply("checkpoint", f.checkpoint);
  apply("scene", f.scene);
  apply("out", f.out);
  apply("seed", f.seed);
  apply("window", f.window);
  apply("frames", f.frames);
  for (const std::string& kv : f.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw tho::UsageError("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Temporal human-object reconstruction toolkit"};
  app.require_subcommand(1);
  Flags flags;

  std::string script;
  auto* synth = app.add_subcommand("synth", "generate a synthetic scene bundle");
  add_common(synth, flags);
  synth->add_option("--script", script, "scene script JSON");

  auto* init = app.add_subcommand("init", "write a seeded random checkpoint");
  add_common(init, flags);

  auto* infer = app.add_subcommand("infer", "run the feed-forward pipeline on a scene");
  add_common(infer, flags);

  std::string pred_dir, gt_dir;
  auto* eval = app.add_subcommand("eval", "score a prediction bundle against ground truth");
  add_common(eval, flags);
  eval->add_option("pred", pred_dir, "prediction bundle")->required();
  eval->add_option("gt", gt_dir, "ground-truth bundle or scene directory")->required();

  std::string templ, target;
  auto* fit = app.add_subcommand("fit", "fit a rigid pose of a template to target vertices");
  add_common(fit, flags);
  fit->add_option("template", templ, "template OBJ")->required();
  fit->add_option("target", target, "target JSON with a vertices array")->required();

  auto* selftest = app.add_subcommand("selftest", "run the built-in invariant suites");
  add_common(selftest, flags);

  CLI11_PARSE(app, argc, argv);

  try {
    const tho::RunConfig cfg = build_config(flags);
    if (synth->parsed()) tho::cmd_synth(cfg, script, std::cerr);
    else if (init->parsed()) tho::cmd_init(cfg, std::cerr);
    else if (infer->parsed()) tho::cmd_infer(cfg, std::cerr);
    else if (eval->parsed()) tho::cmd_eval(pred_dir, gt_dir, cfg.out, std::cout);
    else if (fit->parsed()) tho::cmd_fit(cfg, templ, target, std::cout);
    else if (selftest->parsed()) return tho::cmd_selftest(cfg, std::cout);
  } catch (const tho::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
