#include <algorithm>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "hyptimes/io.hpp"
#include "hyptimes/runner.hpp"

namespace {

int cmd_list() {
  std::size_t width = 0;
  for (const hyptimes::ExperimentInfo& info : hyptimes::list_experiments()) {
    width = std::max(width, info.name.size());
  }
  for (const hyptimes::ExperimentInfo& info : hyptimes::list_experiments()) {
    std::printf("%-*s  %s\n", static_cast<int>(width), info.name.c_str(),
                info.description.c_str());
  }
  return 0;
}

int cmd_validate(const std::string& path) {
  std::vector<std::string> errs = hyptimes::validate_config_file(path);
  if (errs.empty()) {
    std::printf("ok\n");
    return 0;
  }
  for (const std::string& e : errs) std::fprintf(stderr, "%s\n", e.c_str());
  return 2;
}

int cmd_run(const std::string& path) {
  hyptimes::ExperimentConfig cfg = hyptimes::load_config(path);
  hyptimes::RunResult res = hyptimes::run_config(cfg);

  std::size_t name_w = 4;
  for (const hyptimes::SummaryEntry& e : res.summary) {
    name_w = std::max(name_w, e.name.size());
  }
  std::printf("%-*s  %14s  %2s  %14s  %s\n", static_cast<int>(name_w), "name",
              "measured", "", "threshold", "status");
  for (const hyptimes::SummaryEntry& e : res.summary) {
    char measured[32], threshold[32];
    std::snprintf(measured, sizeof(measured), "%.8g", e.measured);
    std::snprintf(threshold, sizeof(threshold), "%.8g", e.threshold);
    std::printf("%-*s  %14s  %2s  %14s  %s\n", static_cast<int>(name_w),
                e.name.c_str(), measured, e.relation.c_str(), threshold,
                e.pass ? "PASS" : "FAIL");
  }
  std::printf("%zu artifact(s), %d failing check(s)\n", res.artifacts.size(),
              res.failures);
  return std::min(res.failures, 125);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hyperbolic-time detection and statistics for circle maps"};
  app.require_subcommand(1);

  std::string run_path;
  CLI::App* run = app.add_subcommand("run", "execute the experiments in a config");
  run->add_option("config", run_path, "JSON config file")->required();

  std::string validate_path;
  CLI::App* validate =
      app.add_subcommand("validate", "check a config without running it");
  validate->add_option("config", validate_path, "JSON config file")->required();

  CLI::App* list =
      app.add_subcommand("list-experiments", "print the available experiments");

  CLI11_PARSE(app, argc, argv);

  try {
    if (list->parsed()) return cmd_list();
    if (validate->parsed()) return cmd_validate(validate_path);
    return cmd_run(run_path);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
