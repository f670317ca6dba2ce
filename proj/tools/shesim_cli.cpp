// Command-line front end: run experiments from manifests, emit presets,
// validate manifests, replay exported checks.
//
// Exit codes: 0 pass, 1 check failure, 2 validation error, 3 runtime abort.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "shesim/experiment.hpp"
#include "shesim/manifest.hpp"
#include "shesim/parallel.hpp"

namespace {

int cmd_run(const std::string& manifest_path, int workers, const std::string& out_dir) {
  shesim::ExperimentManifest m;
  try {
    m = shesim::load_manifest(manifest_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  if (!out_dir.empty()) m.output_dir = out_dir;
  const auto result = shesim::run_experiment(m, workers);
  for (const auto& msg : result.messages) std::cerr << "  " << msg << "\n";
  if (result.exit_code == 2) {
    std::cerr << "validation failed: " << result.messages.size() << " violated constraint(s)\n";
  } else if (result.exit_code == 3) {
    std::cerr << "runtime abort\n";
  } else {
    std::cout << "artifacts: " << result.artifact_dir.string() << "\n";
    std::cout << "summary hash: " << result.summary_hash << "\n";
    std::cout << (result.exit_code == 0 ? "all checks passed\n" : "some checks FAILED\n");
  }
  return result.exit_code;
}

int cmd_preset(const std::string& name, bool emit, bool run, int workers,
               const std::string& out_dir) {
  shesim::ExperimentManifest m;
  try {
    m = shesim::preset(name);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  if (!out_dir.empty()) m.output_dir = out_dir;
  if (emit) {
    std::cout << shesim::serialize_manifest_text(m);
    return 0;
  }
  if (run) {
    const auto result = shesim::run_experiment(m, workers);
    for (const auto& msg : result.messages) std::cerr << "  " << msg << "\n";
    if (result.exit_code <= 1) {
      std::cout << "artifacts: " << result.artifact_dir.string() << "\n";
      std::cout << "summary hash: " << result.summary_hash << "\n";
      std::cout << (result.exit_code == 0 ? "all checks passed\n" : "some checks FAILED\n");
    }
    return result.exit_code;
  }
  std::cout << shesim::serialize_manifest_text(m);
  return 0;
}

int cmd_validate(const std::string& manifest_path) {
  shesim::ExperimentManifest m;
  try {
    m = shesim::load_manifest(manifest_path);
  } catch (const std::exception& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 2;
  }
  const auto violations = m.validate();
  if (violations.empty()) {
    std::cout << "manifest ok (hash " << shesim::manifest_hash(m) << ")\n";
    return 0;
  }
  std::cerr << violations.size() << " violated constraint(s):\n";
  for (const auto& v : violations) std::cerr << "  - " << v << "\n";
  return 2;
}

int cmd_replay(const std::string& artifact_dir, const std::string& check) {
  try {
    const int rc = shesim::replay_check(artifact_dir, check);
    std::cout << "replay of '" << check << "': " << (rc == 0 ? "verdict reproduced" : "MISMATCH")
              << "\n";
    return rc;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"spectral-Galerkin stochastic heat equation simulator and verifier"};
  app.require_subcommand(1);
  app.fallthrough(); // --workers/--out may follow the subcommand
  int workers = shesim::default_workers();
  app.add_option("--workers", workers, "worker threads (results are worker-count independent)");
  std::string out_dir;
  app.add_option("--out", out_dir, "output root (default $SHESIM_OUT or ./shesim-out)");

  std::string manifest_path;
  auto* run = app.add_subcommand("run", "run an experiment from a manifest file");
  run->add_option("manifest", manifest_path, "manifest file (.txt key/value or .json)")
      ->required();

  std::string preset_name;
  bool emit = false;
  bool preset_run = false;
  auto* preset = app.add_subcommand("preset", "show or run a named preset experiment");
  preset->add_option("name", preset_name, "preset name")->required();
  preset->add_flag("--emit", emit, "print the preset manifest and exit");
  preset->add_flag("--run", preset_run, "run the preset");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "validate a manifest without running");
  validate->add_option("manifest", validate_path, "manifest file")->required();

  std::string artifact_dir, check_name;
  auto* replay = app.add_subcommand("replay", "re-run a check from exported ensembles");
  replay->add_option("artifact-dir", artifact_dir, "artifact directory of a previous run")
      ->required();
  replay->add_option("--check", check_name, "check name to replay")->required();

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) return cmd_run(manifest_path, workers, out_dir);
  if (preset->parsed()) return cmd_preset(preset_name, emit, preset_run, workers, out_dir);
  if (validate->parsed()) return cmd_validate(validate_path);
  if (replay->parsed()) return cmd_replay(artifact_dir, check_name);
  return 0;
}
