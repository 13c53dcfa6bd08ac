#include "harness/cli.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "harness/config_file.hpp"
#include "harness/run_manager.hpp"
#include "harness/summarize.hpp"
#include "harness/svg_plot.hpp"
#include "peat/baselines.hpp"
#include "peat/checkpoint.hpp"
#include "peat/selfcheck.hpp"

namespace peat::harness {

namespace {

ExperimentConfig resolve_config(const std::string& config_arg,
                                const std::vector<std::string>& overrides) {
  ExperimentConfig config;
  if (!config_arg.empty() && config_arg != "default") {
    config = load_config_file(config_arg);
  }
  for (const auto& item : overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("--set expects key=value, got " + item);
    }
    apply_override(config, item.substr(0, eq), item.substr(eq + 1));
  }
  return config;
}

std::vector<long> parse_long_list(const std::string& text, const char* what) {
  std::vector<long> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_long(item, what));
  if (out.empty()) throw std::invalid_argument(std::string(what) + " list is empty");
  return out;
}

std::vector<std::string> parse_string_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

std::string default_run_dir(const ExperimentConfig& config, long seed) {
  return "runs/" + config.run.algo + "_n" + std::to_string(config.sys.num_ues) + "_s" +
         std::to_string(seed);
}

int command_train(const std::string& config_arg, const std::vector<std::string>& overrides,
                  long seed, long steps, const std::string& out, const std::string& algo,
                  bool trace) {
  ExperimentConfig config = resolve_config(config_arg, overrides);
  if (!algo.empty()) apply_override(config, "run.algo", algo);
  if (steps > 0) config.hyper.total_steps = steps;
  if (trace) config.run.trace = true;
  const std::string out_dir = !out.empty()            ? out
                              : !config.run.out_dir.empty() ? config.run.out_dir
                                                            : default_run_dir(config, seed);
  config.run.out_dir = out_dir;
  config.run.seeds = {seed};

  std::cout << "# resolved configuration\n" << dump_config(config) << std::flush;
  const RunSummary summary = execute_run(config, seed, out_dir, thread_cap_from_env());
  std::printf("run complete: %s\n", out_dir.c_str());
  std::printf("  env_steps         %ld\n", summary.env_steps);
  std::printf("  reward            %.6g +- %.6g\n", summary.reward_mean, summary.reward_std);
  std::printf("  total delay (min) %.6g\n", summary.total_delay_min);
  std::printf("  task perplexity   %.6g\n", summary.mean_perplexity);
  std::printf("  emulator switches %.6g\n", summary.emulator_switches);
  if (summary.aborted) {
    std::printf("  WARNING: run aborted early\n");
    return 1;
  }
  return 0;
}

int command_eval(const std::string& checkpoint_path, int episodes, long seed,
                 const std::string& trace_path) {
  const Checkpoint ckpt = load_checkpoint(checkpoint_path);
  PolicyPair policy;
  // keep the loaded model alive for the duration of the evaluation
  std::shared_ptr<void> model_holder;
  if (ckpt.algo == "hmppo") {
    auto model = std::make_shared<HmppoModel>(hmppo_from_checkpoint(ckpt));
    policy = deterministic_policy(*model, ckpt.config);
    model_holder = model;
  } else if (ckpt.algo == "ippo") {
    auto model = std::make_shared<IppoModel>(ippo_from_checkpoint(ckpt));
    policy = deterministic_policy(*model, ckpt.config);
    model_holder = model;
  } else {
    std::fprintf(stderr, "error: checkpoint has unknown algorithm '%s'\n", ckpt.algo.c_str());
    return 2;
  }
  const int count = episodes > 0 ? episodes : ckpt.hyper.eval_episodes;
  std::unique_ptr<TraceWriter> trace;
  if (!trace_path.empty()) trace = std::make_unique<TraceWriter>(trace_path);
  const auto metrics =
      run_episodes(ckpt.config, policy, count, mix_seed(static_cast<std::uint64_t>(seed), kEvalStream),
                   trace ? trace->sink() : TraceSink{});
  const MetricSummary ms = summarize_metrics(metrics);
  std::printf("checkpoint: %s (algo %s, trained %ld steps, %d UEs)\n", checkpoint_path.c_str(),
              ckpt.algo.c_str(), ckpt.env_steps, ckpt.config.num_ues);
  std::printf("episodes: %d\n", count);
  std::printf("  reward            %.6g +- %.6g\n", ms.reward_mean, ms.reward_std);
  std::printf("  total delay (min) %.6g +- %.6g\n", ms.delay_min_mean, ms.delay_min_std);
  std::printf("  task perplexity   %.6g +- %.6g\n", ms.perplexity_mean, ms.perplexity_std);
  std::printf("  emulator switches %.6g +- %.6g\n", ms.switches_mean, ms.switches_std);
  return 0;
}

int command_sweep(const std::string& config_arg, const std::vector<std::string>& overrides,
                  const std::string& ues_arg, const std::string& algos_arg,
                  const std::string& seeds_arg, long steps, const std::string& out) {
  const ExperimentConfig base = resolve_config(config_arg, overrides);
  const std::vector<long> ues = parse_long_list(ues_arg, "--ues");
  const std::vector<std::string> algos = parse_string_list(algos_arg);
  const std::vector<long> seeds = parse_long_list(seeds_arg, "--seeds");

  std::cout << "# resolved base configuration\n" << dump_config(base) << std::flush;
  std::printf("sweep: %zu UE counts x %zu algorithms x %zu seeds = %zu runs\n", ues.size(),
              algos.size(), seeds.size(), ues.size() * algos.size() * seeds.size());

  std::vector<std::string> run_dirs;
  const int thread_cap = thread_cap_from_env();
  for (const auto& algo : algos) {
    for (long n : ues) {
      for (long seed : seeds) {
        ExperimentConfig config = base;
        apply_override(config, "run.algo", algo);
        config.sys.num_ues = static_cast<int>(n);
        if (steps > 0) config.hyper.total_steps = steps;
        const std::string run_dir =
            out + "/" + algo + "_n" + std::to_string(n) + "_s" + std::to_string(seed);
        std::printf("-> %s\n", run_dir.c_str());
        std::fflush(stdout);
        execute_run(config, seed, run_dir, thread_cap);
        run_dirs.push_back(run_dir);
      }
    }
  }

  std::vector<std::string> warnings;
  const auto rows = summarize_runs(run_dirs, &warnings);
  for (const auto& w : warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  std::filesystem::create_directories(out);
  {
    std::ofstream csv(out + "/summary.csv");
    csv << summary_to_csv(rows);
  }
  const std::string table = summary_to_table(rows);
  {
    std::ofstream txt(out + "/summary.txt");
    txt << table;
  }
  std::cout << table;
  return 0;
}

int command_summarize(const std::vector<std::string>& run_dirs, const std::string& out_csv) {
  std::vector<std::string> warnings;
  const auto rows = summarize_runs(run_dirs, &warnings);
  for (const auto& w : warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  if (!out_csv.empty()) {
    std::ofstream csv(out_csv);
    if (!csv) {
      std::fprintf(stderr, "error: cannot write %s\n", out_csv.c_str());
      return 2;
    }
    csv << summary_to_csv(rows);
  }
  std::cout << summary_to_table(rows);
  return 0;
}

int command_plot(const std::vector<std::string>& logs, const std::string& metric,
                 const std::string& out) {
  write_line_chart(out, logs, metric);
  std::printf("wrote %s\n", out.c_str());
  return 0;
}

int command_selftest() {
  const auto results = run_selfcheck();
  for (const auto& r : results) {
    std::printf("[%s] %-28s %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str());
  }
  return all_passed(results) ? 0 : 1;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"Emulator-assisted edge tuning orchestration: simulator, trainers, baselines"};
  app.require_subcommand(1);

  // train
  auto* train = app.add_subcommand("train", "Train one policy and write a run directory");
  std::string train_config = "default", train_out, train_algo;
  std::vector<std::string> train_sets;
  long train_seed = 1, train_steps = 0;
  bool train_trace = false;
  train->add_option("--config", train_config, "Config file path, or 'default'");
  train->add_option("--set", train_sets, "Override, e.g. --set sys.num_ues=8")->take_all();
  train->add_option("--seed", train_seed, "Training seed");
  train->add_option("--steps", train_steps, "Override hyper.total_steps");
  train->add_option("--out", train_out, "Run directory");
  train->add_option("--algo", train_algo, "hmppo | ippo | random");
  train->add_flag("--trace", train_trace, "Write trace.csv for the final evaluation");

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint deterministically");
  std::string eval_checkpoint, eval_trace;
  int eval_episodes = 0;
  long eval_seed = 0;
  eval->add_option("--checkpoint", eval_checkpoint, "Checkpoint file")->required();
  eval->add_option("--episodes", eval_episodes, "Evaluation episodes");
  eval->add_option("--seed", eval_seed, "Evaluation seed");
  eval->add_option("--trace", eval_trace, "Write a trace CSV to this path");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Run a UE-count x algorithm x seed grid");
  std::string sweep_config = "default", sweep_ues = "6,7,8,9", sweep_algos = "hmppo,ippo,random",
              sweep_seeds = "1,2,3", sweep_out = "sweeps/default";
  std::vector<std::string> sweep_sets;
  long sweep_steps = 0;
  sweep->add_option("--config", sweep_config, "Config file path, or 'default'");
  sweep->add_option("--set", sweep_sets, "Override, e.g. --set hyper.workers=4")->take_all();
  sweep->add_option("--ues", sweep_ues, "Comma-separated UE counts");
  sweep->add_option("--algos", sweep_algos, "Comma-separated algorithms");
  sweep->add_option("--seeds", sweep_seeds, "Comma-separated seeds");
  sweep->add_option("--steps", sweep_steps, "Override hyper.total_steps");
  sweep->add_option("--out", sweep_out, "Sweep output directory");

  // summarize
  auto* summarize = app.add_subcommand("summarize", "Aggregate completed runs into a table");
  std::vector<std::string> summarize_dirs;
  std::string summarize_out;
  summarize->add_option("dirs", summarize_dirs, "Run directories")->required();
  summarize->add_option("--out", summarize_out, "Also write a CSV to this path");

  // plot
  auto* plot = app.add_subcommand("plot", "Render training curves as SVG");
  std::vector<std::string> plot_logs;
  std::string plot_metric = "eval_reward_mean", plot_out = "plot.svg";
  plot->add_option("logs", plot_logs, "log.csv files")->required();
  plot->add_option("--metric", plot_metric, "Metric column to plot");
  plot->add_option("--out", plot_out, "Output SVG path");

  // selftest
  app.add_subcommand("selftest", "Run the formula-oracle and gradient-check suites");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (train->parsed()) {
      return command_train(train_config, train_sets, train_seed, train_steps, train_out,
                           train_algo, train_trace);
    }
    if (eval->parsed()) return command_eval(eval_checkpoint, eval_episodes, eval_seed, eval_trace);
    if (sweep->parsed()) {
      return command_sweep(sweep_config, sweep_sets, sweep_ues, sweep_algos, sweep_seeds,
                           sweep_steps, sweep_out);
    }
    if (summarize->parsed()) return command_summarize(summarize_dirs, summarize_out);
    if (plot->parsed()) return command_plot(plot_logs, plot_metric, plot_out);
    return command_selftest();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}

}  // namespace peat::harness
