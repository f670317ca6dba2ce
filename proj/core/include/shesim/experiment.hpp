#ifndef SHESIM_EXPERIMENT_HPP
#define SHESIM_EXPERIMENT_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "shesim/manifest.hpp"

namespace shesim {

struct RunResult {
  // 0 all checks pass, 1 check failure, 2 validation error, 3 runtime abort
  int exit_code = 0;
  std::filesystem::path artifact_dir;
  std::vector<std::string> messages;
  std::string verdicts_json;  // contents of verdicts.json (empty on 2/3)
  std::string summary_hash;   // content hash of verdicts.json
};

// Validates, runs the ensemble and every check in the manifest's analysis
// plan, and writes the artifact directory: manifest echo (text + json),
// ensemble export(s), optional noise dumps, CSV tables, verdicts.json.
// Rerunning an identical manifest reproduces every numeric output.
RunResult run_experiment(const ExperimentManifest& manifest, int workers);

// Re-runs one ensemble-consuming check from an artifact directory's exports
// and compares against the stored verdict entry. Returns 0 on agreement,
// 1 on mismatch or failure.
int replay_check(const std::filesystem::path& artifact_dir, const std::string& check_name);

std::filesystem::path default_output_root();

} // namespace shesim

#endif
