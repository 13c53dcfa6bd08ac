#pragma once

#include <string>
#include <vector>

#include "harness/config_file.hpp"
#include "peat/env.hpp"

namespace peat::harness {

// Final-evaluation metrics of one completed run, persisted as summary.json.
struct RunSummary {
  std::string algo;
  int num_ues = 0;
  long seed = 0;
  long env_steps = 0;
  bool aborted = false;
  double reward_mean = 0.0;
  double reward_std = 0.0;
  double total_delay_min = 0.0;
  double mean_perplexity = 0.0;
  double emulator_switches = 0.0;
};

// Executes one run into out_dir: config.resolved, log.csv, checkpoint (for
// the trained algorithms), summary.json, and trace.csv when tracing is on.
RunSummary execute_run(const ExperimentConfig& config, long seed, const std::string& out_dir,
                       int thread_cap);

void write_summary(const std::string& run_dir, const RunSummary& summary);
RunSummary load_summary(const std::string& run_dir);  // throws on missing/corrupt

// Reconstructs per-episode metrics from a trace.csv, independently of the
// environment bookkeeping (oracle replay).
std::vector<EpisodeMetrics> metrics_from_trace(const std::string& trace_path);

// PEAT_ORCH_THREADS, or 0 when unset/invalid.
int thread_cap_from_env();

}  // namespace peat::harness
