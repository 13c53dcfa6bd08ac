#include "harness/summarize.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>

#include "peat/stats.hpp"

namespace peat::harness {

namespace {

std::string fmt(double v, const char* spec = "%.4g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

}  // namespace

std::vector<SummaryRow> summarize_runs(const std::vector<std::string>& run_dirs,
                                       std::vector<std::string>* warnings) {
  struct Group {
    std::vector<double> rewards, delays, perplexities, switches;
  };
  std::map<std::pair<std::string, int>, Group> groups;

  for (const auto& dir : run_dirs) {
    RunSummary s;
    try {
      s = load_summary(dir);
    } catch (const std::exception& e) {
      if (warnings) warnings->push_back(std::string(e.what()) + " (skipped)");
      continue;
    }
    if (s.aborted) {
      if (warnings) warnings->push_back("run " + dir + " aborted (skipped)");
      continue;
    }
    Group& g = groups[{s.algo, s.num_ues}];
    g.rewards.push_back(s.reward_mean);
    g.delays.push_back(s.total_delay_min);
    g.perplexities.push_back(s.mean_perplexity);
    g.switches.push_back(s.emulator_switches);
  }

  std::vector<SummaryRow> rows;
  for (const auto& [key, g] : groups) {
    SummaryRow row;
    row.algo = key.first;
    row.num_ues = key.second;
    row.runs = static_cast<int>(g.rewards.size());
    row.reward_mean = mean(g.rewards);
    row.reward_std = sample_std(g.rewards);
    row.delay_min_mean = mean(g.delays);
    row.delay_min_std = sample_std(g.delays);
    row.perplexity_mean = mean(g.perplexities);
    row.perplexity_std = sample_std(g.perplexities);
    row.switches_mean = mean(g.switches);
    row.switches_std = sample_std(g.switches);
    rows.push_back(row);
  }
  // std::map already orders by (algo, num_ues)
  return rows;
}

std::string summary_to_csv(const std::vector<SummaryRow>& rows) {
  std::ostringstream out;
  out << "algorithm,ue_count,runs,reward_mean,reward_std,total_delay_min_mean,"
         "total_delay_min_std,task_perplexity_mean,task_perplexity_std,"
         "emulator_switches_mean,emulator_switches_std\n";
  for (const auto& r : rows) {
    char buf[512];
    std::snprintf(buf, sizeof(buf), "%s,%d,%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g",
                  r.algo.c_str(), r.num_ues, r.runs, r.reward_mean, r.reward_std,
                  r.delay_min_mean, r.delay_min_std, r.perplexity_mean, r.perplexity_std,
                  r.switches_mean, r.switches_std);
    out << buf << '\n';
  }
  return out.str();
}

std::string summary_to_table(const std::vector<SummaryRow>& rows) {
  const std::vector<std::string> headers = {"algorithm",        "UEs",  "runs",
                                            "reward",           "total delay (min)",
                                            "task perplexity",  "emulator switches"};
  std::vector<std::vector<std::string>> cells;
  cells.push_back(headers);
  for (const auto& r : rows) {
    cells.push_back({r.algo, std::to_string(r.num_ues), std::to_string(r.runs),
                     fmt(r.reward_mean) + " +- " + fmt(r.reward_std),
                     fmt(r.delay_min_mean) + " +- " + fmt(r.delay_min_std),
                     fmt(r.perplexity_mean) + " +- " + fmt(r.perplexity_std),
                     fmt(r.switches_mean) + " +- " + fmt(r.switches_std)});
  }
  std::vector<std::size_t> widths(headers.size(), 0);
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());
  }
  std::ostringstream out;
  for (std::size_t r = 0; r < cells.size(); ++r) {
    for (std::size_t c = 0; c < cells[r].size(); ++c) {
      out << cells[r][c] << std::string(widths[c] - cells[r][c].size() + 2, ' ');
    }
    out << '\n';
    if (r == 0) {
      std::size_t total = 0;
      for (std::size_t w : widths) total += w + 2;
      out << std::string(total, '-') << '\n';
    }
  }
  return out.str();
}

}  // namespace peat::harness
