#include "peat/train_log.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace peat {

const char* train_log_header() {
  return "env_steps,eval_reward_mean,eval_reward_std,total_delay_min,mean_perplexity,"
         "emulator_switches,actor1_loss,actor2_loss,critic_loss,entropy1,entropy2";
}

std::string to_csv_line(const TrainLogRow& r) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), "%ld,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g",
                r.env_steps, r.eval_reward_mean, r.eval_reward_std, r.total_delay_min,
                r.mean_perplexity, r.emulator_switches, r.actor1_loss, r.actor2_loss,
                r.critic_loss, r.entropy1, r.entropy2);
  return buf;
}

std::vector<TrainLogRow> read_train_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open log file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty log file: " + path);
  if (line != train_log_header()) {
    throw std::runtime_error("unexpected log header in " + path + ": " + line);
  }
  std::vector<TrainLogRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    TrainLogRow r;
    char comma = ',';
    ss >> r.env_steps >> comma >> r.eval_reward_mean >> comma >> r.eval_reward_std >> comma >>
        r.total_delay_min >> comma >> r.mean_perplexity >> comma >> r.emulator_switches >>
        comma >> r.actor1_loss >> comma >> r.actor2_loss >> comma >> r.critic_loss >> comma >>
        r.entropy1 >> comma >> r.entropy2;
    if (ss.fail()) throw std::runtime_error("malformed log row in " + path + ": " + line);
    rows.push_back(r);
  }
  return rows;
}

std::vector<std::string> train_log_metric_names() {
  return {"eval_reward_mean", "eval_reward_std", "total_delay_min",  "mean_perplexity",
          "emulator_switches", "actor1_loss",    "actor2_loss",      "critic_loss",
          "entropy1",          "entropy2"};
}

double train_log_metric(const TrainLogRow& row, const std::string& name) {
  if (name == "eval_reward_mean") return row.eval_reward_mean;
  if (name == "eval_reward_std") return row.eval_reward_std;
  if (name == "total_delay_min") return row.total_delay_min;
  if (name == "mean_perplexity") return row.mean_perplexity;
  if (name == "emulator_switches") return row.emulator_switches;
  if (name == "actor1_loss") return row.actor1_loss;
  if (name == "actor2_loss") return row.actor2_loss;
  if (name == "critic_loss") return row.critic_loss;
  if (name == "entropy1") return row.entropy1;
  if (name == "entropy2") return row.entropy2;
  throw std::invalid_argument("unknown metric: " + name);
}

}  // namespace peat
