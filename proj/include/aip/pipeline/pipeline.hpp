#pragma once

#include <functional>
#include <string>
#include <vector>

#include "aip/eval/report.hpp"
#include "aip/pipeline/config.hpp"

namespace aip {

inline const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names{"data", "train", "attack", "defend", "eval"};
  return names;
}

struct PipelineOptions {
  bool resume = false;      // skip stages whose key and artifacts match the manifest
  int threads = 1;          // cap on worker threads inside a stage
  std::string until = "eval";  // last stage to run
  std::function<void(const std::string&)> log;
};

struct StageOutcome {
  std::string name;
  bool skipped = false;
  double seconds = 0.0;
};

struct PipelineResult {
  MetricsReport report;  // empty unless the eval stage ran or was reused
  std::vector<StageOutcome> stages;
};

/// Runs data -> train -> attack -> defend -> eval under config.out, writing
/// manifest.json after every stage. A failing stage is recorded in the
/// manifest and rethrown as a stage error naming it.
PipelineResult run_pipeline(const ExperimentConfig& config, const PipelineOptions& options = {});

/// The in-memory report of a full run (artifacts still land under config.out).
MetricsReport run_experiment(const ExperimentConfig& config);

/// Runs fn(0..n-1) on up to `threads` workers; the first exception is rethrown.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

}  // namespace aip
