#pragma once

#include <functional>
#include <string>
#include <vector>

#include "peat/rng.hpp"
#include "peat/sysmodel.hpp"

namespace peat {

using StateVector = std::vector<double>;

// Placement agent observation, length 4N:
//   [previous-task gains | complexities | data sizes (bits) | cached retentions]
// A cached retention of 0 encodes an empty cache.
struct AgentOneState {
  StateVector slots;
};

// Retention agent observation, length 3N:
//   [cached retentions | placement bits from agent 1 | complexities]
struct AgentTwoState {
  StateVector slots;
};

// One CSV row of the optional per-step trace.
struct TraceRecord {
  int episode = 0;
  int t = 0;  // 1-based task index
  int n = 0;  // 0-based UE index
  int z = 0;
  double e_proposed = 0.0;
  double e_cached = 0.0;  // 0 when the cache was empty before the step
  int indicator = 0;
  double d_up_s = 0.0;
  double d_down_s = 0.0;
  double kappa = 0.0;
  double reward_step = 0.0;
};

using TraceSink = std::function<void(const TraceRecord&)>;

struct StepResult {
  AgentOneState next_state;
  double reward = 0.0;
  bool done = false;
  StepOutcome outcome;
};

// Fig-2-style per-episode metrics.
struct EpisodeMetrics {
  double total_delay_min = 0.0;   // sum over steps of the system delay, minutes
  double mean_perplexity = 0.0;   // over all N*T tasks
  long switch_count = 0;          // sum of switch indicators
  double episodic_reward = 0.0;   // sum of step rewards
};

// Episodic decision process over T tasks per UE. Construction performs the
// reset: distances and first tasks are drawn, caches start empty, t = 1.
// Single-owner; independent episodes may run concurrently on their own RNG
// streams.
class Episode {
 public:
  Episode(const SystemConfig& config, std::uint64_t seed);

  const SystemConfig& config() const { return config_; }
  const AgentOneState& agent1_state() const { return state1_; }
  AgentTwoState observe_agent2(const std::vector<int>& a1) const;

  // Runs one system step, advances the task index, and draws the next tasks.
  // Throws std::logic_error when called on a finished episode.
  StepResult step(const JointDecision& decision);

  bool done() const { return t_ > config_.tasks_per_ue; }
  int task_index() const { return t_; }
  const CacheVector& caches() const { return caches_; }
  const std::vector<TaskDraw>& current_tasks() const { return tasks_; }

  // Throws std::logic_error when the episode has not finished yet.
  EpisodeMetrics metrics() const;

  void set_trace(TraceSink sink, int episode_id) {
    trace_ = std::move(sink);
    episode_id_ = episode_id;
  }

 private:
  void draw_tasks();
  void rebuild_agent1_state();

  SystemConfig config_;
  Rng rng_;
  std::vector<double> distances_;
  std::vector<double> prev_gains_;
  std::vector<TaskDraw> tasks_;
  CacheVector caches_;
  AgentOneState state1_;
  int t_ = 1;

  double total_delay_s_ = 0.0;
  double perplexity_sum_ = 0.0;
  long switch_count_ = 0;
  double reward_sum_ = 0.0;

  TraceSink trace_;
  int episode_id_ = 0;
};

// Fixed per-slot scales that bring the raw physical magnitudes into O(1)
// ranges before states reach a policy network.
struct StateScales {
  double gain_scale = 1.0;        // distance_min^(-alpha)
  double data_scale = 1.0;        // max data size in bits
  double complexity_scale = 1.0;  // max complexity

  static StateScales from(const SystemConfig& config);
};

StateVector normalize_agent1(const AgentOneState& state, int num_ues, const StateScales& scales);
StateVector normalize_agent2(const AgentTwoState& state, int num_ues, const StateScales& scales);

// A pair of per-step action rules; both receive *normalized* states.
struct PolicyPair {
  std::function<std::vector<int>(const StateVector&)> placement;
  std::function<std::vector<double>(const StateVector&)> retention;
};

// Rolls out `episodes` full episodes of the policy, with per-episode seeds
// derived from seed_base. Optionally streams trace records.
std::vector<EpisodeMetrics> run_episodes(const SystemConfig& config, const PolicyPair& policy,
                                         int episodes, std::uint64_t seed_base,
                                         const TraceSink& trace = nullptr);

// Writes trace records as CSV with 9-significant-digit values.
class TraceWriter {
 public:
  explicit TraceWriter(const std::string& path);
  ~TraceWriter();
  TraceWriter(const TraceWriter&) = delete;
  TraceWriter& operator=(const TraceWriter&) = delete;

  void write(const TraceRecord& rec);
  TraceSink sink();
  static const char* header();

 private:
  struct Impl;
  Impl* impl_;
};

}  // namespace peat
