#pragma once

#include <string>
#include <vector>

namespace peat {

// One evaluation row of the training log CSV.
struct TrainLogRow {
  long env_steps = 0;
  double eval_reward_mean = 0.0;
  double eval_reward_std = 0.0;
  double total_delay_min = 0.0;
  double mean_perplexity = 0.0;
  double emulator_switches = 0.0;
  double actor1_loss = 0.0;
  double actor2_loss = 0.0;
  double critic_loss = 0.0;
  double entropy1 = 0.0;
  double entropy2 = 0.0;
};

const char* train_log_header();
std::string to_csv_line(const TrainLogRow& row);

// Parses a full log file (header plus rows). Throws std::runtime_error on
// missing file or malformed content.
std::vector<TrainLogRow> read_train_log(const std::string& path);

// Column accessors by metric name, for plotting and summaries.
std::vector<std::string> train_log_metric_names();
double train_log_metric(const TrainLogRow& row, const std::string& name);

}  // namespace peat
