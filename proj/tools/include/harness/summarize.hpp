#pragma once

#include <string>
#include <vector>

#include "harness/run_manager.hpp"

namespace peat::harness {

// One (algorithm, UE count) group aggregated over seeds.
struct SummaryRow {
  std::string algo;
  int num_ues = 0;
  int runs = 0;
  double reward_mean = 0.0, reward_std = 0.0;
  double delay_min_mean = 0.0, delay_min_std = 0.0;
  double perplexity_mean = 0.0, perplexity_std = 0.0;
  double switches_mean = 0.0, switches_std = 0.0;
};

// Loads each run's summary.json, groups by (algorithm, UE count), and sorts
// rows the same way. Unreadable runs are skipped and reported via warnings.
std::vector<SummaryRow> summarize_runs(const std::vector<std::string>& run_dirs,
                                       std::vector<std::string>* warnings = nullptr);

std::string summary_to_csv(const std::vector<SummaryRow>& rows);
std::string summary_to_table(const std::vector<SummaryRow>& rows);  // aligned text

}  // namespace peat::harness
