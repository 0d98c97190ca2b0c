// navcarve command-line front end. Exit codes: 0 success, 2 parse or config
// error, 3 stage failure.
#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "navcarve/pipeline.hpp"

namespace {

using namespace navcarve;

constexpr int kExitConfig = 2;
constexpr int kExitStage = 3;

struct StageCommand {
  CLI::App* app = nullptr;
  std::string name;
  std::map<std::string, CLI::Option*> overrides;
  std::map<std::string, std::string> values;
};

struct Shared {
  std::string config;
  std::string out = "run";
  std::string cloud;
  std::string trajectory;
  std::string ground_truth;
  bool refine = false;
};

void add_stage_options(StageCommand& cmd, Shared& shared) {
  cmd.app->add_option("--config", shared.config, "JSON config file")->check(CLI::ExistingFile);
  cmd.app->add_option("--out", shared.out, "Run directory holding the stage artifacts");
  if (cmd.name == "filter" || cmd.name == "pipeline") cmd.app->add_option("--cloud", shared.cloud, "Input point cloud");
  if (cmd.name == "grow" || cmd.name == "pipeline") {
    cmd.app->add_option("--trajectory", shared.trajectory, "Trajectory CSV (t,x,y,z)");
  }
  if (cmd.name == "eval" || cmd.name == "pipeline") {
    cmd.app->add_option("--ground-truth", shared.ground_truth, "Ground-truth spec written by synth");
  }
  if (cmd.name == "pipeline") cmd.app->add_flag("--refine", shared.refine, "Run the refinement stage");
  for (const std::string& key : PipelineConfig::keys()) {
    if (key == "refine") continue;
    cmd.overrides[key] = cmd.app->add_option("--" + key, cmd.values[key], "Config override")->group("Config keys");
  }
}

PipelineConfig build_config(const StageCommand& cmd, const Shared& shared) {
  PipelineConfig cfg;
  if (!shared.config.empty()) cfg = PipelineConfig::from_json(read_json(shared.config));
  for (const auto& [key, opt] : cmd.overrides) {
    if (opt->count() > 0) cfg.set(key, cmd.values.at(key));
  }
  if (shared.refine) cfg.refine = true;
  cfg.validate();
  return cfg;
}

void report(const RunManifest& m) {
  for (const auto& [stage, secs] : m.stage_seconds) std::fprintf(stderr, "%-9s %.3f s\n", stage.c_str(), secs);
  for (const std::string& w : m.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Convex free-space carving from sparse point clouds"};
  app.require_subcommand(1);
  Shared shared;

  std::string synth_out = "synth";
  std::string synth_spec;
  std::map<std::string, std::string> synth_values;
  std::map<std::string, CLI::Option*> synth_opts;
  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic loop environment");
  synth->add_option("--out", synth_out, "Output directory");
  synth->add_option("--spec", synth_spec, "JSON environment spec")->check(CLI::ExistingFile);
  const Json spec_defaults = to_json(SyntheticEnvSpec{});
  for (const auto& [key, value] : spec_defaults.items()) {
    synth_opts[key] = synth->add_option("--" + key, synth_values[key], "Spec override")->group("Spec keys");
  }

  std::vector<StageCommand> commands;
  for (const char* name : {"filter", "grow", "regulate", "refine", "eval", "pipeline"}) {
    StageCommand cmd;
    cmd.name = name;
    cmd.app = app.add_subcommand(name, std::string(name) == "pipeline" ? "Run every stage in order"
                                                                         : std::string("Run the ") + name + " stage");
    commands.push_back(std::move(cmd));
  }
  for (StageCommand& cmd : commands) add_stage_options(cmd, shared);

  std::string verify_dir = "run";
  CLI::App* verify = app.add_subcommand("verify", "Check the digests recorded in a run manifest");
  verify->add_option("--out", verify_dir, "Run directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (synth->parsed()) {
      Json spec = synth_spec.empty() ? to_json(SyntheticEnvSpec{}) : read_json(synth_spec);
      for (const auto& [key, opt] : synth_opts) {
        if (opt->count() == 0) continue;
        try {
          spec[key] = Json::parse(synth_values.at(key));
        } catch (const Json::parse_error&) {
          throw Error(ErrorCode::ConfigError, "invalid value for --" + key);
        }
      }
      const SyntheticEnvSpec parsed = synthetic_spec_from_json(spec);
      for (const auto& p : write_synthetic(parsed, synth_out)) std::printf("%s\n", p.string().c_str());
      return 0;
    }
    if (verify->parsed()) {
      const auto problems = verify_manifest(verify_dir);
      for (const std::string& p : problems) std::fprintf(stderr, "%s\n", p.c_str());
      std::printf("%s\n", problems.empty() ? "manifest verified" : "manifest mismatch");
      return problems.empty() ? 0 : kExitStage;
    }
    for (const StageCommand& cmd : commands) {
      if (!cmd.app->parsed()) continue;
      const PipelineConfig cfg = build_config(cmd, shared);
      const PipelineInputs inputs{shared.cloud, shared.trajectory, shared.ground_truth};
      const RunManifest m = cmd.name == "pipeline" ? run_pipeline(cfg, inputs, shared.out)
                                                   : run_stages(cfg, inputs, shared.out, {cmd.name}, false);
      report(m);
      return 0;
    }
  } catch (const StageFailure& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitStage;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    const bool config = e.code() == ErrorCode::ConfigError || e.code() == ErrorCode::ParseError ||
                        e.code() == ErrorCode::UnsupportedFormat;
    return config ? kExitConfig : kExitStage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitStage;
  }
  return 0;
}
