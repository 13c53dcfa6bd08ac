#include "harness/run_manager.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "peat/baselines.hpp"
#include "peat/hmppo.hpp"
#include "peat/train_log.hpp"

namespace peat::harness {

namespace {

using nlohmann::json;

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

// The random baseline has no training loop; its log rows are independent
// evaluations of the random policy at each eval boundary so plots can
// overlay all three algorithms, and its summary comes from a larger
// episode batch.
RunSummary run_random(const ExperimentConfig& config, long seed, const std::string& out_dir) {
  const HyperParams& hyper = config.hyper;
  std::ofstream log_file(out_dir + "/log.csv");
  if (!log_file) throw std::runtime_error("cannot write " + out_dir + "/log.csv");
  log_file << train_log_header() << '\n';
  const long boundaries = hyper.total_steps / hyper.eval_interval;
  for (long b = 1; b <= boundaries; ++b) {
    const long steps = b * hyper.eval_interval;
    const MetricSummary ms = random_policy_rollout(
        config.sys, hyper.eval_episodes,
        mix_seed(static_cast<std::uint64_t>(seed), kEvalStream, static_cast<std::uint64_t>(steps)));
    TrainLogRow row;
    row.env_steps = steps;
    row.eval_reward_mean = ms.reward_mean;
    row.eval_reward_std = ms.reward_std;
    row.total_delay_min = ms.delay_min_mean;
    row.mean_perplexity = ms.perplexity_mean;
    row.emulator_switches = ms.switches_mean;
    log_file << to_csv_line(row) << '\n';
  }

  std::unique_ptr<TraceWriter> trace;
  if (config.run.trace) trace = std::make_unique<TraceWriter>(out_dir + "/trace.csv");
  const MetricSummary ms =
      random_policy_rollout(config.sys, config.run.random_episodes,
                            static_cast<std::uint64_t>(seed), trace ? trace->sink() : TraceSink{});

  RunSummary summary;
  summary.algo = "random";
  summary.num_ues = config.sys.num_ues;
  summary.seed = seed;
  summary.env_steps = hyper.total_steps;
  summary.reward_mean = ms.reward_mean;
  summary.reward_std = ms.reward_std;
  summary.total_delay_min = ms.delay_min_mean;
  summary.mean_perplexity = ms.perplexity_mean;
  summary.emulator_switches = ms.switches_mean;
  return summary;
}

}  // namespace

RunSummary execute_run(const ExperimentConfig& config, long seed, const std::string& out_dir,
                       int thread_cap) {
  std::filesystem::create_directories(out_dir);
  {
    ExperimentConfig resolved = config;
    resolved.run.seeds = {seed};
    resolved.run.out_dir = out_dir;
    write_text_file(out_dir + "/config.resolved", dump_config(resolved));
  }

  RunSummary summary;
  if (config.run.algo == "random") {
    summary = run_random(config, seed, out_dir);
  } else {
    TrainOptions options;
    options.out_dir = out_dir;
    options.thread_cap = thread_cap;
    options.write_trace = config.run.trace;
    const TrainResult result =
        config.run.algo == "ippo"
            ? train_ippo(config.sys, config.hyper, static_cast<std::uint64_t>(seed), options)
            : train_hmppo(config.sys, config.hyper, static_cast<std::uint64_t>(seed), options);
    summary.algo = config.run.algo;
    summary.num_ues = config.sys.num_ues;
    summary.seed = seed;
    summary.env_steps = result.env_steps;
    summary.aborted = result.aborted;
    if (!result.log.empty()) {
      const TrainLogRow& last = result.log.back();
      summary.reward_mean = last.eval_reward_mean;
      summary.reward_std = last.eval_reward_std;
      summary.total_delay_min = last.total_delay_min;
      summary.mean_perplexity = last.mean_perplexity;
      summary.emulator_switches = last.emulator_switches;
    }
  }
  write_summary(out_dir, summary);
  return summary;
}

void write_summary(const std::string& run_dir, const RunSummary& s) {
  json j;
  j["algo"] = s.algo;
  j["num_ues"] = s.num_ues;
  j["seed"] = s.seed;
  j["env_steps"] = s.env_steps;
  j["aborted"] = s.aborted;
  j["final"] = {{"reward_mean", s.reward_mean},
                {"reward_std", s.reward_std},
                {"total_delay_min", s.total_delay_min},
                {"mean_perplexity", s.mean_perplexity},
                {"emulator_switches", s.emulator_switches}};
  write_text_file(run_dir + "/summary.json", j.dump(2) + "\n");
}

RunSummary load_summary(const std::string& run_dir) {
  std::ifstream in(run_dir + "/summary.json");
  if (!in) throw std::runtime_error("missing summary.json in " + run_dir);
  json j;
  try {
    in >> j;
    RunSummary s;
    s.algo = j.at("algo").get<std::string>();
    s.num_ues = j.at("num_ues").get<int>();
    s.seed = j.at("seed").get<long>();
    s.env_steps = j.at("env_steps").get<long>();
    s.aborted = j.at("aborted").get<bool>();
    const json& fin = j.at("final");
    s.reward_mean = fin.at("reward_mean").get<double>();
    s.reward_std = fin.at("reward_std").get<double>();
    s.total_delay_min = fin.at("total_delay_min").get<double>();
    s.mean_perplexity = fin.at("mean_perplexity").get<double>();
    s.emulator_switches = fin.at("emulator_switches").get<double>();
    return s;
  } catch (const json::exception& e) {
    throw std::runtime_error("corrupt summary.json in " + run_dir + ": " + e.what());
  }
}

std::vector<EpisodeMetrics> metrics_from_trace(const std::string& trace_path) {
  std::ifstream in(trace_path);
  if (!in) throw std::runtime_error("cannot open trace file: " + trace_path);
  std::string line;
  if (!std::getline(in, line) || line != TraceWriter::header()) {
    throw std::runtime_error("unexpected trace header in " + trace_path);
  }

  struct Accum {
    std::map<int, double> step_max_delay;  // t -> max over UEs
    std::map<int, double> step_reward;     // t -> per-step reward
    double kappa_sum = 0.0;
    long rows = 0;
    long switches = 0;
  };
  std::map<int, Accum> episodes;

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    TraceRecord rec;
    std::istringstream ss(line);
    char comma = ',';
    ss >> rec.episode >> comma >> rec.t >> comma >> rec.n >> comma >> rec.z >> comma >>
        rec.e_proposed >> comma >> rec.e_cached >> comma >> rec.indicator >> comma >> rec.d_up_s >>
        comma >> rec.d_down_s >> comma >> rec.kappa >> comma >> rec.reward_step;
    if (ss.fail()) throw std::runtime_error("malformed trace row: " + line);
    Accum& acc = episodes[rec.episode];
    const double delay = rec.d_up_s + rec.d_down_s;
    auto [it, inserted] = acc.step_max_delay.try_emplace(rec.t, delay);
    if (!inserted) it->second = std::max(it->second, delay);
    acc.step_reward[rec.t] = rec.reward_step;
    acc.kappa_sum += rec.kappa;
    acc.rows += 1;
    acc.switches += rec.indicator;
  }

  std::vector<EpisodeMetrics> out;
  for (const auto& [episode, acc] : episodes) {
    EpisodeMetrics m;
    double delay_sum = 0.0;
    for (const auto& [t, d] : acc.step_max_delay) delay_sum += d;
    m.total_delay_min = delay_sum / 60.0;
    m.mean_perplexity = acc.kappa_sum / static_cast<double>(acc.rows);
    m.switch_count = acc.switches;
    for (const auto& [t, r] : acc.step_reward) m.episodic_reward += r;
    out.push_back(m);
  }
  return out;
}

int thread_cap_from_env() {
  const char* value = std::getenv("PEAT_ORCH_THREADS");
  if (!value) return 0;
  char* end = nullptr;
  const long parsed = std::strtol(value, &end, 10);
  if (end == value || *end != '\0' || parsed < 1) return 0;
  return static_cast<int>(parsed);
}

}  // namespace peat::harness
