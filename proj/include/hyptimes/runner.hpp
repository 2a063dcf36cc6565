#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hyptimes/detect.hpp"
#include "hyptimes/orbit.hpp"

namespace hyptimes {

// Overrides config output_dir when set.
inline constexpr const char* kOutputDirEnvVar = "HYPTIMES_OUTPUT_DIR";

struct ExperimentConfig {
  std::string map_name = "intermittent";

  double sigma = 0.0;  // required
  double delta = 0.0;  // required
  double b = 0.0;      // required
  double beta = 0.0;   // required
  double theta = 0.0;  // committed frequency threshold, required

  std::int64_t horizon = 100000;
  EnsembleSpec ensemble;  // required: kind/size/seed

  std::string output_dir = "out";
  std::vector<std::string> experiments;  // required, run in order

  // Experiment-specific sizes (defaults match the committed config).
  std::int64_t firsttime_size = 10000;
  int ulam_k = 4096;
  std::int64_t lyapunov_ensemble_size = 10000;
  std::int64_t pushforward_size = 100000;
  int pushforward_k = 128;
  std::vector<std::int64_t> pushforward_ns = {10, 100, 1000};
  std::int64_t sequence_n = 1000000;
  int sequence_grid = 100;
  std::int64_t slow_recurrence_size = 1000;
  int slow_recurrence_kmax = 6;
  std::int64_t contraction_n_max = 1000;
  int contraction_targets = 100;

  HyperbolicParams params() const;
};

// Parses and validates a JSON config file.  Collects every problem found;
// throws std::runtime_error listing them (parameter constraint messages
// are echoed verbatim).
ExperimentConfig load_config(const std::filesystem::path& path);

// Returns the list of validation errors without throwing.
std::vector<std::string> validate_config_file(const std::filesystem::path& path);

struct ExperimentInfo {
  std::string name;
  std::string description;
};
const std::vector<ExperimentInfo>& list_experiments();

struct SummaryEntry {
  std::string name;
  double measured = 0.0;
  double threshold = 0.0;
  std::string relation;  // "<=" or ">="
  bool pass = false;
};

struct RunResult {
  std::vector<SummaryEntry> summary;
  std::vector<std::filesystem::path> artifacts;
  int failures = 0;
};

// Executes the configured experiments in order, writing artifacts into the
// output directory (config value, overridden by HYPTIMES_OUTPUT_DIR).
// Returns the aggregated summary; failures counts entries with pass=false.
RunResult run_config(const ExperimentConfig& config);

}  // namespace hyptimes
